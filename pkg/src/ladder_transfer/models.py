"""Lattice, rung and effective XXZ Hamiltonians.

All energies are in units of the rung coupling. ``u`` and ``v`` are the leg and
diagonal couplings relative to it and ``dw`` is the detuning of the field from
the critical value ``w_c`` at which every rung has a two-fold degenerate ground
state.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from math import sqrt
from typing import Literal

import numpy as np

from .lattice import SpinLattice, rung_pairs
from .sector import SectorBasis, SectorOperator, heisenberg_operator, xxz_operator

TransferGenerator = Literal["full", "perturbation_only"]

PERTURBATION_BOX = 0.1
DEGENERACY_TOL = 1e-10

# (L, bc_rung) pairs with closed-form effective couplings
SUPPORTED_CLOSED_FORMS = {(2, "open"), (3, "open"), (4, "open"), (4, "periodic")}


class NoEffectiveQubit(ValueError):
    """The rung ground state is not two-fold degenerate at any field."""


class UnsupportedGeometry(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    u: float = 0.05
    v: float = 0.0
    dw: float = 0.0
    transfer_generator: TransferGenerator = "full"

    def __post_init__(self):
        if self.transfer_generator not in ("full", "perturbation_only"):
            raise ValueError(f"unknown transfer_generator {self.transfer_generator!r}")

    @property
    def in_perturbation_regime(self) -> bool:
        return 0 <= self.u <= PERTURBATION_BOX and 0 <= self.v <= PERTURBATION_BOX and abs(self.dw) <= PERTURBATION_BOX


@dataclass(frozen=True, eq=False)
class RungGroundPair:
    """Degenerate rung ground states ``|0>`` (fully polarized) and ``|1>`` (one magnon).

    Vectors are over ``2**L`` entries in tensor-product order, leg 1 being the
    most significant bit.
    """

    L: int
    bc_rung: str
    w_c: float
    ket0: np.ndarray
    ket1: np.ndarray
    E_g: float
    gap: float

    @property
    def kets(self) -> np.ndarray:
        return np.stack([self.ket0, self.ket1])


@dataclass(frozen=True)
class EffectiveCouplings:
    Jxy: float
    Jzz: float
    h: float
    h_boundary: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.Jxy, self.Jzz, self.h, self.h_boundary)


def _normalize_bc(L: int, bc_rung: str) -> str:
    if bc_rung not in ("open", "periodic"):
        raise ValueError(f"bc_rung must be 'open' or 'periodic', got {bc_rung!r}")
    return "open" if L == 2 else bc_rung


def rung_hamiltonian(L: int, bc_rung: str, w: float) -> np.ndarray:
    """Dense ``2**L`` rung Hamiltonian in tensor-product order."""
    if not 2 <= L <= 12:
        raise ValueError(f"rung Hamiltonian supports 2 <= L <= 12, got {L}")
    bc_rung = _normalize_bc(L, bc_rung)
    basis = SectorBasis(L, L)
    op = heisenberg_operator(basis, [(a, b, 1.0) for a, b in rung_pairs(L, bc_rung)], w)
    perm = _tensor_order(basis)
    dense = np.zeros((basis.dim, basis.dim), dtype=complex)
    coo = op.matrix.tocoo()
    dense[perm[coo.row], perm[coo.col]] = coo.data
    return dense.real


def _tensor_order(basis: SectorBasis) -> np.ndarray:
    # site j-1 <-> bit 2**(L - j) of the tensor index
    L = basis.num_sites
    idx = np.zeros(basis.dim, dtype=np.int64)
    for s in range(L):
        idx |= basis.bits(s).astype(np.int64) << (L - 1 - s)
    return idx


def closed_form_ket1(L: int, bc_rung: str) -> np.ndarray | None:
    """Closed-form one-magnon rung ground state, or ``None`` when none is known."""
    bc_rung = _normalize_bc(L, bc_rung)
    vec = np.zeros(1 << L)

    def put(pattern: str, amp: float):
        vec[int(pattern, 2)] = amp

    if L == 2:
        put("01", 1), put("10", -1)
    elif L == 3 and bc_rung == "open":
        put("001", 1), put("010", -2), put("100", 1)
    elif L == 4 and bc_rung == "open":
        a = 1 + sqrt(2)
        put("0001", -1), put("0010", a), put("0100", -a), put("1000", 1)
    elif bc_rung == "periodic" and L % 2 == 0:
        for j in range(1, L + 1):
            vec[1 << (L - j)] = (-1) ** j
    else:
        return None
    return vec / np.linalg.norm(vec)


@lru_cache(maxsize=None)
def find_critical_field(L: int, bc_rung: str = "open") -> RungGroundPair:
    """Field at which the polarized and lowest one-magnon rung states cross.

    The field shifts the zero- and one-magnon sectors relative to each other
    at unit rate, so ``w_c`` is their zero-field energy difference. Raises
    :class:`NoEffectiveQubit` if the crossing is not an isolated two-fold
    ground state.
    """
    bc_rung = _normalize_bc(L, bc_rung)
    if not 2 <= L <= 12:
        raise ValueError(f"find_critical_field supports 2 <= L <= 12, got {L}")
    basis = SectorBasis(L, L)
    bonds = [(a, b, 1.0) for a, b in rung_pairs(L, bc_rung)]
    dense = heisenberg_operator(basis, bonds, 0.0).toarray().real
    k = basis.excitations()
    blocks = {n: np.flatnonzero(k == n) for n in range(L + 1)}
    spectra = {}
    one_magnon = None
    for n, idx in blocks.items():
        vals, vecs = np.linalg.eigh(dense[np.ix_(idx, idx)])
        spectra[n] = vals
        if n == 1:
            one_magnon = vecs[:, 0]
    E0 = spectra[0][0]
    E1 = spectra[1][0]
    if spectra[1][1] - E1 < DEGENERACY_TOL:
        raise NoEffectiveQubit(
            f"lowest one-magnon level of the L={L} {bc_rung} rung is degenerate; no effective qubit"
        )
    w_c = E0 - E1
    levels = np.sort(np.concatenate([vals - 0.5 * w_c * (L - 2 * n) for n, vals in spectra.items()]))
    E_g = E0 - 0.5 * w_c * L
    if abs(levels[0] - E_g) > DEGENERACY_TOL or abs(levels[1] - E_g) > DEGENERACY_TOL:
        raise NoEffectiveQubit(f"polarized and one-magnon states are not the rung ground pair for L={L} {bc_rung}")
    gap = levels[2] - E_g
    if gap <= DEGENERACY_TOL:
        raise NoEffectiveQubit(f"rung ground state of L={L} {bc_rung} is more than two-fold degenerate at w_c")

    ket0 = np.zeros(1 << L)
    ket0[0] = 1.0
    ket1 = np.zeros(1 << L)
    ket1[_tensor_order(basis)[blocks[1]]] = one_magnon
    ket1 = _fix_phase(ket1, closed_form_ket1(L, bc_rung))
    return RungGroundPair(L, bc_rung, float(w_c), ket0.astype(complex), ket1.astype(complex), float(E_g), float(gap))


def _fix_phase(vec: np.ndarray, reference: np.ndarray | None) -> np.ndarray:
    if reference is not None:
        overlap = np.vdot(reference, vec)
        return vec * (np.conj(overlap) / abs(overlap))
    first = np.flatnonzero(np.abs(vec) > 1e-12)[0]
    return vec * (np.conj(vec[first]) / abs(vec[first]))


def effective_couplings(
    L: int, bc_rung: str, u: float, v: float, dw: float, bc_leg: str = "open"
) -> EffectiveCouplings:
    """Closed-form first-order XXZ couplings for the supported rung geometries."""
    bc_rung = _normalize_bc(L, bc_rung)
    if L == 2:
        c = ((u - v) / 4, (u + v) / 8, (u + v - 2 * dw) / 4, -(u + v) / 8)
    elif (L, bc_rung) == (3, "open"):
        c = ((3 * u - 4 * v) / 12, (9 * u + 8 * v) / 72, (9 * u + 22 * v - 18 * dw) / 36, -(9 * u + 22 * v) / 72)
    elif (L, bc_rung) == (4, "open"):
        r2 = sqrt(2)
        c = (
            (4 * u - (2 + 3 * r2) * v) / 16,
            (6 * u + (2 * r2 + 5) * v) / 64,
            (10 * u + (2 * r2 + 19) * v - 16 * dw) / 32,
            -(10 * u + (2 * r2 + 19) * v) / 64,
        )
    elif (L, bc_rung) == (4, "periodic"):
        c = ((u - 2 * v) / 4, (u + 2 * v) / 16, (3 * (u + 2 * v) - 4 * dw) / 8, -3 * (u + 2 * v) / 16)
    else:
        raise UnsupportedGeometry(
            f"no closed-form couplings for L={L}, bc_rung={bc_rung}; use fitted_couplings() "
            "with the projected-Hamiltonian oracle instead"
        )
    if bc_leg == "periodic":
        c = c[:3] + (0.0,)
    return EffectiveCouplings(*(float(x) for x in c))


def couplings_for(lattice: SpinLattice, params: ModelParams) -> EffectiveCouplings:
    """Closed form where available, otherwise fitted from the projection oracle."""
    try:
        return effective_couplings(lattice.L, lattice.bc_rung, params.u, params.v, params.dw, lattice.bc_leg)
    except UnsupportedGeometry:
        warnings.warn(
            f"no closed-form couplings for L={lattice.L} {lattice.bc_rung} rungs; "
            "using couplings fitted from the projected Hamiltonian",
            stacklevel=2,
        )
        return fitted_couplings(lattice.L, lattice.bc_rung, params, lattice.bc_leg)


def full_bonds(lattice: SpinLattice, params: ModelParams) -> list[tuple[int, int, float]]:
    out = []
    if params.transfer_generator == "full":
        out += [(a, b, 1.0) for a, b in lattice.bonds("rung")]
    if params.u:
        out += [(a, b, params.u) for a, b in lattice.bonds("leg")]
    if params.v:
        out += [(a, b, params.v) for a, b in lattice.bonds("diagonal")]
    return out


def build_full_hamiltonian(lattice: SpinLattice, params: ModelParams, basis: SectorBasis) -> SectorOperator:
    """Lattice Hamiltonian at field ``w_c + dw`` restricted to ``basis``.

    With ``transfer_generator="perturbation_only"`` the rung terms and the
    critical field are dropped, leaving leg, diagonal and ``dw`` field terms.
    """
    if basis.num_sites != lattice.num_sites:
        raise ValueError(f"basis has {basis.num_sites} sites, lattice has {lattice.num_sites}")
    if params.transfer_generator == "full":
        w = find_critical_field(lattice.L, lattice.bc_rung).w_c + params.dw
    else:
        w = params.dw
    return heisenberg_operator(basis, full_bonds(lattice, params), w)


def chain_bonds(N: int, bc_leg: str) -> list[tuple[int, int]]:
    if N == 2 or bc_leg == "open":
        return [(i, i + 1) for i in range(N - 1)]
    return [(i, (i + 1) % N) for i in range(N)]


def build_effective_xxz(
    N: int, couplings: EffectiveCouplings, bc_leg: str, basis: SectorBasis
) -> SectorOperator:
    """Effective XXZ chain on ``N`` sites; bit 0 is the effective ``|0>``."""
    if basis.num_sites != N:
        raise ValueError(f"basis has {basis.num_sites} sites, chain has {N}")
    c = couplings
    fields = np.full(N, c.h)
    if bc_leg == "open" or N == 2:
        fields[0] += c.h_boundary
        fields[-1] += c.h_boundary
    bonds = [(a, b, c.Jxy, c.Jzz) for a, b in chain_bonds(N, bc_leg)]
    return xxz_operator(basis, bonds, fields)


# --- projection oracle -------------------------------------------------------

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]]),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _apply_site_pauli(vec: np.ndarray, L: int, j: int, pauli: np.ndarray) -> np.ndarray:
    t = vec.reshape((2,) * L)
    t = np.moveaxis(np.tensordot(pauli, t, axes=([1], [j])), 0, j)
    return t.reshape(-1)


def projected_paulis(pair: RungGroundPair) -> dict[tuple[str, int], np.ndarray]:
    """2x2 matrices ``<k| sigma^alpha_j |k'>`` on the rung ground pair, keyed by ``(alpha, j)``."""
    kets = pair.kets
    out = {}
    for alpha, P in _PAULI.items():
        for j in range(pair.L):
            images = np.stack([_apply_site_pauli(k, pair.L, j, P) for k in kets])
            out[alpha, j] = kets.conj() @ images.T
    return out


def _embed(ops: dict[int, np.ndarray], N: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for i in range(N):
        out = np.kron(out, ops.get(i, np.eye(2)))
    return out


def projected_hamiltonian_oracle(lattice: SpinLattice, params: ModelParams) -> np.ndarray:
    """Matrix of the leg + diagonal + ``dw`` terms between products of rung ground states.

    Rows and columns run over the ``2**N`` product states in tensor-product
    order, rung 1 most significant, bit 0 meaning the rung is in ``|0>``.
    """
    N, L = lattice.N, lattice.L
    if N > 10:
        raise ValueError(f"projection oracle is dense in 2**N; N={N} exceeds 10")
    pair = find_critical_field(L, lattice.bc_rung)
    P = projected_paulis(pair)
    pair_terms: dict[tuple[int, int], np.ndarray] = {}
    for kind, coef in (("leg", params.u), ("diagonal", params.v)):
        if not coef:
            continue
        for a, b in lattice.bonds(kind):
            (ia, ja), (ib, jb) = lattice.site_coords(a), lattice.site_coords(b)
            key = (ia - 1, ib - 1)
            block = sum(np.kron(P[al, ja - 1], P[al, jb - 1]) for al in "xyz")
            pair_terms[key] = pair_terms.get(key, 0) + coef / 4 * block
    H = np.zeros((1 << N, 1 << N), dtype=complex)
    for (ra, rb), block in pair_terms.items():
        # split the 4x4 rung-pair operator into a sum of 2x2 (x) 2x2 products
        b4 = block.reshape(2, 2, 2, 2)
        for p in range(2):
            for q in range(2):
                left = np.zeros((2, 2), dtype=complex)
                left[p, q] = 1.0
                H += _embed({ra: left, rb: b4[p, :, q, :]}, N)
    if params.dw:
        field = -0.5 * params.dw * sum(P["z", j] for j in range(L))
        for i in range(N):
            H += _embed({i: field}, N)
    return H


def pauli_coefficient(H: np.ndarray, ops: dict[int, str], N: int) -> complex:
    """Coefficient of a Pauli string in ``H`` (trace inner product)."""
    O = _embed({i: _PAULI[a] for i, a in ops.items()}, N)
    return complex(np.trace(O.conj().T @ H)) / (1 << N)


@dataclass(frozen=True)
class CouplingFit:
    couplings: EffectiveCouplings
    constant: float
    residual: float


def fit_xxz(H: np.ndarray, N: int, bc_leg: str = "open") -> CouplingFit:
    """Read XXZ couplings off a ``2**N`` matrix by Pauli decomposition.

    For ``N = 2`` only the sum ``h + h_boundary`` is identifiable; it is
    returned as ``h`` with ``h_boundary = 0``.
    """
    if N < 2:
        raise ValueError("need at least two sites to fit couplings")
    Jxy = pauli_coefficient(H, {0: "x", 1: "x"}, N).real
    Jzz = pauli_coefficient(H, {0: "z", 1: "z"}, N).real
    z_edge = pauli_coefficient(H, {0: "z"}, N).real
    if N == 2:
        h, hb = z_edge, 0.0
    else:
        h = pauli_coefficient(H, {1: "z"}, N).real
        hb = z_edge - h
    couplings = EffectiveCouplings(Jxy, Jzz, h, hb)
    const = pauli_coefficient(H, {}, N).real
    template = build_effective_xxz(N, couplings, bc_leg, SectorBasis(N, N))
    perm = np.zeros(1 << N, dtype=np.int64)
    basis = template.basis
    for s in range(N):
        perm |= basis.bits(s).astype(np.int64) << (N - 1 - s)
    T = np.zeros_like(H)
    coo = template.matrix.tocoo()
    T[perm[coo.row], perm[coo.col]] = coo.data
    residual = float(np.abs(H - const * np.eye(1 << N) - T).max())
    return CouplingFit(couplings, const, residual)


def fitted_couplings(L: int, bc_rung: str, params: ModelParams, bc_leg: str = "open") -> EffectiveCouplings:
    """Couplings fitted from the projection oracle on a three-rung open ladder."""
    fit = fit_xxz(projected_hamiltonian_oracle(SpinLattice(3, L, bc_rung, "open"), params), 3)
    c = fit.couplings
    return EffectiveCouplings(c.Jxy, c.Jzz, c.h, 0.0 if bc_leg == "periodic" else c.h_boundary)
