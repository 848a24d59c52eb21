# %% [markdown]
# # Moving a single qubit through rung qubits
#
# Alice holds one spin of rung 1. A short rung evolution plus phase gates
# maps her qubit into the rung ground pair; the ladder carries it; Bob undoes
# the encoding on his rung and keeps one spin. Two-leg and periodic four-leg
# rungs are supported.

# %%
import numpy as np

from ladder_transfer import ModelParams, QubitInput, SpinLattice, haar_average_single_qubit, rr_transfer
from ladder_transfer.codec import bare_transfer_baseline, encoded_rung_vector, single_qubit_transfer

params = ModelParams()
q = QubitInput(0.6, 0.8 * np.exp(0.5j))

# %% [markdown]
# ## Encoded rung states
# For the four-leg rung the excitation ends up spread over all legs with
# alternating sign.

# %%
print(np.round(encoded_rung_vector(SpinLattice(3, 4, "periodic"), QubitInput(0, 1)), 3))

# %% [markdown]
# ## Qubit fidelity equals rung fidelity
# After decoding, the qubit fidelity coincides with the fidelity of the
# encoded rung state, whichever spin Bob keeps.

# %%
lat = SpinLattice(8, 2)
f_rung = rr_transfer(lat, params, encoded_rung_vector(lat, q), 1, 3).f_values
for j in (1, 2):
    f_q = single_qubit_transfer(lat, params, q, 3, j).f_values
    print(f"target leg {j}: max |f' - f| = {np.max(np.abs(f_q - f_rung)):.1e}")

# %% [markdown]
# ## Against sending the bare qubit
# Without encoding, the outcome depends on which leg Bob reads. At `v = 0`
# the excitation on leg 1 hops along leg 1 almost undisturbed, so the bare
# baseline is a close competitor here.

# %%
lat = SpinLattice(10, 2)
print(" r  protocol  bare(j=1)  bare(j=2)")
for r in range(1, 9):
    row = [haar_average_single_qubit(lat, params, r, 1, n_samples=500, seed=7).mean_f_m]
    row += [haar_average_single_qubit(lat, params, r, j, n_samples=500, seed=7, pipeline="bare").mean_f_m for j in (1, 2)]
    print(f"{r:2d}  " + "  ".join(f"{x:.4f}" for x in row))

# %% [markdown]
# One trajectory of the bare baseline for both target legs:

# %%
for j in (1, 2):
    f = bare_transfer_baseline(lat, params, q, 2, j).f_values
    print(f"leg {j}: max f = {f.max():.4f}")
