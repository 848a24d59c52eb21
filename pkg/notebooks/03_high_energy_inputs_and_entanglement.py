# %% [markdown]
# # Inputs outside the ground pair, and how entangled the rung states are
#
# `D` is the weight of a rung state outside the ground pair. When it is zero
# the effective chain describes the transfer; otherwise the lattice and the
# chain disagree. The second half computes the generalized geometric
# measure `G` of the rung states for several rung sizes.

# %%
import numpy as np

from ladder_transfer import ModelParams, SpinLattice
from ladder_transfer.analysis import ggm_curve, high_energy_scan

np.set_printoptions(precision=3, suppress=True)

# %% [markdown]
# ## Two legs: `(b, theta)` map at `a1 = 0.3`
# Only `b = +-1/sqrt(2)`, `theta = pi` (the singlet) lies inside the pair.

# %%
b = np.linspace(-1, 1, 9)
theta = np.linspace(0, 2 * np.pi, 5)
res = high_energy_scan(SpinLattice(3, 2), ModelParams(0.05, 0.03, 0.0), ("b", b), ("theta", theta), a1=0.3)
print("D (rows: theta, columns: b)\n", res.D)
print("eps\n", res.eps)

# %% [markdown]
# ## Three legs: `(b2, theta1)` slice with `b1 = 1/sqrt(6)`, `theta2 = 0`
# Cells with `b1^2 + b2^2 > 1` are infeasible and left empty (NaN).

# %%
res3 = high_energy_scan(
    SpinLattice(3, 3), ModelParams(), ("b2", np.linspace(0, 1, 6)), ("theta1", [0.0, np.pi / 2, np.pi]),
    fixed={"b1": 1 / np.sqrt(6), "theta2": 0.0}, with_eps=False,
)
print(res3.D)

# %% [markdown]
# ## Entanglement of the rung family
# `G` is largest for the pure one-magnon state (`a1 = 0`) and vanishes at
# `a1 = 1`. For open rungs it keeps shrinking as `L` grows because the end
# legs carry ever less of the excitation.

# %%
a1 = np.linspace(0, 1, 6)
for L, bc in [(2, "open"), (3, "open"), (5, "open"), (8, "open"), (4, "periodic"), (6, "periodic")]:
    print(f"L={L} {bc:8s}", ggm_curve(L, bc, a1)["G"])
