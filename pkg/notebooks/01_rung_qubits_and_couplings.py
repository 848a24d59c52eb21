# %% [markdown]
# # Rungs as qubits
#
# A rung of `L` spins with strong Heisenberg coupling has, at one special
# field `w_c`, a two-fold degenerate ground level: the fully polarized state
# `|0>` and the lowest one-magnon state `|1>`. Weak leg and diagonal bonds
# then act inside the product space of these pairs like an XXZ chain.
# This script computes the critical fields, looks at the one-magnon states
# and checks the XXZ couplings against a brute projection.

# %%
import numpy as np

from ladder_transfer import SpinLattice, ModelParams, effective_couplings, find_critical_field
from ladder_transfer.models import fit_xxz, projected_hamiltonian_oracle

np.set_printoptions(precision=4, suppress=True)

# %% [markdown]
# ## Critical fields
# Open rungs up to eight legs, and even periodic rungs. An odd periodic rung
# has a degenerate one-magnon level, so no isolated qubit exists there.

# %%
for L, bc in [(2, "open"), (3, "open"), (4, "open"), (5, "open"), (6, "open"), (4, "periodic"), (6, "periodic")]:
    pair = find_critical_field(L, bc)
    print(f"L={L} {bc:8s}  w_c={pair.w_c:.6f}  gap above the pair={pair.gap:.4f}")

# %% [markdown]
# ## One-magnon amplitudes
# Weights of the excitation on each leg. Open rungs push weight away from
# the ends; periodic rungs spread it evenly with alternating sign.

# %%
for L, bc in [(3, "open"), (4, "open"), (4, "periodic")]:
    ket1 = find_critical_field(L, bc).ket1
    amps = np.array([ket1[1 << (L - j)] for j in range(1, L + 1)]).real
    print(L, bc, amps)

# %% [markdown]
# ## Effective couplings
# The projected perturbation on three rungs is decomposed into Pauli strings;
# the fitted `(Jxy, Jzz, h, h_boundary)` should agree with the closed forms.

# %%
p = ModelParams(u=0.06, v=0.02, dw=0.01)
for L, bc in [(2, "open"), (3, "open"), (4, "open"), (4, "periodic")]:
    fit = fit_xxz(projected_hamiltonian_oracle(SpinLattice(3, L, bc), p), 3)
    closed = effective_couplings(L, bc, p.u, p.v, p.dw)
    diff = np.max(np.abs(np.subtract(fit.couplings.as_tuple(), closed.as_tuple())))
    print(f"L={L} {bc:8s} closed={np.array(closed.as_tuple())}  |fit - closed|={diff:.1e}  residual={fit.residual:.1e}")
