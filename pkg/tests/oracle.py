"""Brute-force reference built from Kronecker products of Pauli matrices.

Deliberately shares no code with the package: bonds are enumerated from
coordinates here and the full ``2**(N L)`` space is used.
"""

from functools import reduce

import numpy as np
from scipy.linalg import eigh

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def site_op(op, site, n):
    return reduce(np.kron, [op if s == site else I2 for s in range(n)])


def heis(a, b, n):
    return sum(site_op(P, a, n) @ site_op(P, b, n) for P in (X, Y, Z))


def ladder_bonds(N, L, bc_rung="open", bc_leg="open"):
    """Rung, leg and diagonal bond lists on flat ids ``(i-1) L + (j-1)``."""
    sid = lambda i, j: (i - 1) * L + (j - 1)
    rstep = [(j, j + 1) for j in range(1, L)]
    if bc_rung == "periodic" and L > 2:
        rstep.append((L, 1))
    lstep = [(i, i + 1) for i in range(1, N)]
    if bc_leg == "periodic" and N > 2:
        lstep.append((N, 1))
    rung = [(sid(i, j), sid(i, jj)) for i in range(1, N + 1) for j, jj in rstep]
    leg = [(sid(i, j), sid(ii, j)) for i, ii in lstep for j in range(1, L + 1)]
    diag = [p for i, ii in lstep for j, jj in rstep for p in ((sid(i, j), sid(ii, jj)), (sid(i, jj), sid(ii, j)))]
    return rung, leg, diag


def full_hamiltonian(N, L, w, u, v, bc_rung="open", bc_leg="open", rung_coef=1.0):
    n = N * L
    rung, leg, diag = ladder_bonds(N, L, bc_rung, bc_leg)
    H = np.zeros((1 << n, 1 << n), dtype=complex)
    for coef, bonds in ((rung_coef, rung), (u, leg), (v, diag)):
        for a, b in bonds:
            H += coef / 4 * heis(a, b, n)
    H -= w / 2 * sum(site_op(Z, s, n) for s in range(n))
    return H


def evolve(H, psi, times):
    vals, vecs = eigh(H)
    c = vecs.conj().T @ psi
    return np.array([vecs @ (np.exp(-1j * vals * t) * c) for t in times])


def reduced(psi, keep, n):
    """Reduced density matrix of ``keep`` (first listed most significant)."""
    t = psi.reshape((2,) * n)
    rest = [s for s in range(n) if s not in keep]
    M = np.transpose(t, list(keep) + rest).reshape(1 << len(keep), -1)
    return M @ M.conj().T


def rung_embed(vec, rung, N, L):
    """Rung vector at rung ``rung`` (1-based), every other site in ``|0>``."""
    parts = [vec if i == rung else np.eye(1 << L)[0] for i in range(1, N + 1)]
    return reduce(np.kron, parts).astype(complex)


def rung_ground_pair_bruteforce(L, bc_rung):
    """``(w_c, ket1)`` from scanning the full rung spectrum."""
    rung, _, _ = ladder_bonds(1, L, bc_rung)
    H0 = sum(heis(a, b, L) / 4 for a, b in rung) if rung else np.zeros((1 << L, 1 << L))
    Sz = sum(site_op(Z, s, L) for s in range(L))
    E_pol = H0[0, 0].real
    one = [1 << (L - 1 - s) for s in range(L)]
    sub = H0[np.ix_(one, one)].real
    vals, vecs = np.linalg.eigh(sub)
    w_c = E_pol - vals[0]
    ket1 = np.zeros(1 << L, dtype=complex)
    ket1[one] = vecs[:, 0]
    H = H0 - w_c / 2 * Sz
    return w_c, ket1, np.linalg.eigvalsh(H)
