"""Rung-to-rung transfer, its effective XXZ counterpart, and fidelity statistics."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .lattice import SpinLattice
from .models import (
    ModelParams,
    RungGroundPair,
    build_effective_xxz,
    build_full_hamiltonian,
    couplings_for,
    find_critical_field,
    EffectiveCouplings,
)
from .propagation import evolve_many
from .sector import Bipartition, SectorBasis, SectorOperator, embed_product

Variant = Literal["low_energy", "xi_L2", "w_class_L3"]
ProjectionMode = Literal["normalized", "unnormalized"]

TWO_PI = 2 * np.pi
PROJECTION_TOL = 1e-12


class NoLowEnergyComponent(ValueError):
    pass


def default_t_grid(t_max: float = 100.0, dt: float = 0.1) -> np.ndarray:
    n = int(round(t_max / dt))
    if n < 1 or abs(n * dt - t_max) > 1e-9 * max(1.0, t_max):
        raise ValueError(f"t_max={t_max} is not a whole number of steps dt={dt}")
    return np.linspace(0.0, t_max, n + 1)


@dataclass(frozen=True)
class RungInput:
    """Parametrized rung state.

    ``low_energy`` lives in the rung ground pair. ``xi_L2`` and ``w_class_L3``
    spread the excitation over the two-leg (three-leg) one-magnon states with
    weights set by ``b`` (``b1``, ``b2``) and relative phases ``theta``
    (``theta1``, ``theta2``). Only the squares of the ``b`` parameters enter,
    so their signs are immaterial.
    """

    a1: float = 0.0
    a2: float = 0.0
    variant: Variant = "low_energy"
    b: float = 0.0
    theta: float = 0.0
    b1: float = 0.0
    b2: float = 0.0
    theta1: float = 0.0
    theta2: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.a1 <= 1.0:
            raise ValueError(f"a1 must lie in [0, 1], got {self.a1}")
        if self.variant not in ("low_energy", "xi_L2", "w_class_L3"):
            raise ValueError(f"unknown rung input variant {self.variant!r}")
        if self.variant == "xi_L2" and not -1.0 <= self.b <= 1.0:
            raise ValueError(f"b must lie in [-1, 1], got {self.b}")
        if self.variant == "w_class_L3":
            if not (-1.0 <= self.b1 <= 1.0 and -1.0 <= self.b2 <= 1.0):
                raise ValueError(f"b1, b2 must lie in [-1, 1], got {self.b1}, {self.b2}")
            if self.b1**2 + self.b2**2 > 1.0 + 1e-12:
                raise ValueError(f"infeasible (b1, b2) = ({self.b1}, {self.b2}): b1^2 + b2^2 > 1")


def prepare_rung_input(pair: RungGroundPair, inp: RungInput) -> np.ndarray:
    """``2**L`` rung vector for a parametrized input."""
    L = pair.L
    low = inp.a1
    high = np.exp(1j * inp.a2) * np.sqrt(max(0.0, 1.0 - inp.a1**2))
    if inp.variant == "low_energy":
        vec = low * pair.ket0 + high * pair.ket1
    elif inp.variant == "xi_L2":
        if L != 2:
            raise ValueError("xi_L2 inputs need a two-leg rung")
        vec = np.zeros(4, dtype=complex)
        vec[0b00] = low
        vec[0b01] = high * abs(inp.b)
        vec[0b10] = high * np.exp(1j * inp.theta) * np.sqrt(max(0.0, 1.0 - inp.b**2))
    else:
        if L != 3:
            raise ValueError("w_class_L3 inputs need a three-leg rung")
        rest = np.sqrt(max(0.0, 1.0 - inp.b1**2 - inp.b2**2))
        vec = np.zeros(8, dtype=complex)
        vec[0b000] = low
        vec[0b001] = high * abs(inp.b1)
        vec[0b010] = high * abs(inp.b2) * np.exp(1j * inp.theta1)
        vec[0b100] = high * rest * np.exp(1j * inp.theta2)
    return np.asarray(vec, dtype=complex)


def high_energy_overlap(rung_vector: np.ndarray, pair: RungGroundPair) -> float:
    """Weight of a normalized rung state outside the ground pair.

    Computed as the squared norm of the residual after projection, which
    avoids the cancellation in ``1 - |P v|**2`` for states near the pair.
    """
    vec = np.asarray(rung_vector, dtype=complex)
    kets = pair.kets
    residual = vec - kets.T @ (kets.conj() @ vec)
    return float(np.vdot(residual, residual).real)


def _rung_vector(lattice: SpinLattice, inp) -> np.ndarray:
    if isinstance(inp, RungInput):
        return prepare_rung_input(find_critical_field(lattice.L, lattice.bc_rung), inp)
    vec = np.asarray(inp, dtype=complex)
    if vec.shape != (1 << lattice.L,):
        raise ValueError(f"rung vector must have {1 << lattice.L} entries, got {vec.shape}")
    return vec


def _excitations(vec: np.ndarray) -> int:
    return max(bin(int(a)).count("1") for a in np.flatnonzero(np.abs(vec) > 0))


@lru_cache(maxsize=32)
def sector_basis(num_sites: int, k_max: int) -> SectorBasis:
    return SectorBasis(num_sites, k_max)


@lru_cache(maxsize=64)
def full_hamiltonian(lattice: SpinLattice, params: ModelParams, k_max: int = 1) -> SectorOperator:
    return build_full_hamiltonian(lattice, params, sector_basis(lattice.num_sites, k_max))


@lru_cache(maxsize=64)
def effective_hamiltonian(N: int, couplings: EffectiveCouplings, bc_leg: str) -> SectorOperator:
    return build_effective_xxz(N, couplings, bc_leg, sector_basis(N, 1))


@lru_cache(maxsize=256)
def _bipartition(basis: SectorBasis, subset: tuple[int, ...]) -> Bipartition:
    return Bipartition(basis, subset)


@dataclass
class TransferRecord:
    """Fidelity time series plus everything needed to reproduce it."""

    parameters: dict
    t_grid: np.ndarray
    f_values: np.ndarray
    f_eff_values: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)
    evaluator: Callable[[float], float] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.f_values = np.asarray(self.f_values, dtype=float)
        if self.t_grid.shape != self.f_values.shape:
            raise ValueError("t_grid and f_values must have the same length")
        if len(self.t_grid) > 1 and np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("t_grid must be strictly increasing")
        self.metadata.setdefault("created", time.time())


def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a non-empty 1-D array")
    return t


def _params_dict(lattice, params, **extra) -> dict:
    d = {"lattice": asdict(lattice), "params": asdict(params)}
    d.update(extra)
    return d


def _input_dict(inp) -> dict | list:
    if isinstance(inp, RungInput):
        return asdict(inp)
    return {"vector": [[float(z.real), float(z.imag)] for z in np.asarray(inp, dtype=complex)]}


def rr_transfer(
    lattice: SpinLattice,
    params: ModelParams,
    inp: RungInput | np.ndarray,
    i: int = 1,
    r: int = 1,
    t_grid=None,
) -> TransferRecord:
    """Send a rung state from rung ``i`` to rung ``i + r`` under the lattice Hamiltonian.

    All other rungs start in the polarized state. The fidelity is that of the
    receiver rung's reduced state with the input rung vector.
    """
    t = default_t_grid() if t_grid is None else _check_grid(t_grid)
    psi = _rung_vector(lattice, inp)
    receiver = lattice.receiver(i, r)
    k_max = max(1, _excitations(psi))
    H = full_hamiltonian(lattice, params, k_max)
    basis = H.basis
    init = embed_product(basis, [(lattice.rung_sites(i), psi)])
    bip = _bipartition(basis, tuple(lattice.rung_sites(receiver)))

    def fidelity(times):
        return bip.fidelity(evolve_many(H, init, times), psi)

    return TransferRecord(
        _params_dict(lattice, params, input=_input_dict(inp), i=i, r=r, pipeline="rung"),
        t,
        np.clip(fidelity(t), 0.0, None),
        evaluator=lambda s: float(fidelity([s])[0]),
    )


def effective_amplitudes(
    rung_vector: np.ndarray, pair: RungGroundPair, projection_mode: ProjectionMode = "normalized"
) -> np.ndarray:
    """Low-energy component of a rung state in the ``(|0>, |1>)`` effective basis."""
    phi = pair.kets.conj() @ np.asarray(rung_vector, dtype=complex)
    if projection_mode == "normalized":
        norm = np.linalg.norm(phi)
        if norm < PROJECTION_TOL:
            raise NoLowEnergyComponent("rung state has no low-energy component")
        phi = phi / norm
    elif projection_mode != "unnormalized":
        raise ValueError(f"unknown projection_mode {projection_mode!r}")
    return phi


def effective_transfer(
    N: int,
    couplings: EffectiveCouplings,
    bc_leg: str,
    inp,
    i: int = 1,
    r: int = 1,
    t_grid=None,
    projection_mode: ProjectionMode = "normalized",
    pair: RungGroundPair | None = None,
) -> TransferRecord:
    """Transfer through the effective XXZ chain.

    ``inp`` is either the two effective amplitudes, or a rung input/vector
    that is projected onto ``pair`` first.
    """
    t = default_t_grid() if t_grid is None else _check_grid(t_grid)
    if isinstance(inp, RungInput) or np.size(inp) != 2:
        if pair is None:
            raise ValueError("projecting a rung input requires the rung ground pair")
        vec = prepare_rung_input(pair, inp) if isinstance(inp, RungInput) else inp
        phi = effective_amplitudes(vec, pair, projection_mode)
    else:
        phi = np.asarray(inp, dtype=complex)
    chain = SpinLattice(N, 2, "open", bc_leg)  # only the leg geometry is used
    receiver = chain.receiver(i, r)
    H = effective_hamiltonian(N, couplings, chain.bc_leg)
    init = embed_product(H.basis, [([i - 1], phi)])
    bip = _bipartition(H.basis, (receiver - 1,))

    def fidelity(times):
        return bip.fidelity(evolve_many(H, init, times), phi)

    f = np.clip(fidelity(t), 0.0, None)
    params = {
        "N": N,
        "couplings": asdict(couplings),
        "bc_leg": bc_leg,
        "phi": [[float(z.real), float(z.imag)] for z in phi],
        "i": i,
        "r": r,
        "projection_mode": projection_mode,
        "pipeline": "effective",
    }
    return TransferRecord(params, t, f, f_eff_values=f, evaluator=lambda s: float(fidelity([s])[0]))


def effective_transfer_for(
    lattice: SpinLattice,
    params: ModelParams,
    inp,
    i: int = 1,
    r: int = 1,
    t_grid=None,
    projection_mode: ProjectionMode = "normalized",
) -> TransferRecord:
    """:func:`effective_transfer` with couplings and ground pair taken from a lattice."""
    pair = find_critical_field(lattice.L, lattice.bc_rung)
    vec = _rung_vector(lattice, inp)
    return effective_transfer(
        lattice.N, couplings_for(lattice, params), lattice.bc_leg, vec, i, r, t_grid, projection_mode, pair
    )


def max_fidelity(record: TransferRecord, t_tol: float = 1e-4) -> tuple[float, float]:
    """``(f_m, t*)``: grid maximum refined within one grid step on each side.

    The refinement uses the record's evaluator; the first grid maximizer is
    kept unless the continuous search improves on it.
    """
    f, t = record.f_values, record.t_grid
    if f.size == 0:
        raise ValueError("empty record")
    k = int(np.argmax(f))
    best_f, best_t = float(f[k]), float(t[k])
    if record.evaluator is None or len(t) < 2:
        return best_f, best_t
    lo, hi = t[max(k - 1, 0)], t[min(k + 1, len(t) - 1)]
    res = minimize_scalar(lambda s: -record.evaluator(s), bounds=(lo, hi), method="bounded", options={"xatol": t_tol})
    if -res.fun > best_f + 1e-13:
        best_f, best_t = float(-res.fun), float(res.x)
    return best_f, best_t


# --- Haar averages ------------------------------------------------------------


def quartic_kernel(states: np.ndarray, bip: Bipartition, refs: np.ndarray) -> np.ndarray:
    """Fidelity kernel for inputs that are superpositions of ``m`` basis inputs.

    ``states[q]`` holds the time series (``n_t x dim``) produced from basis
    input ``q``; ``refs[p]`` is the reference vector on the receiver subset
    that the same basis input should arrive as. For amplitudes ``x`` the
    fidelity is ``sum conj(x_p) x_q x_p' conj(x_q') K[t, p, q, p', q']``.
    """
    m = len(refs)
    W = np.asarray(refs, dtype=complex).conj()[:, bip.subset_index]  # (m, dim)
    A = np.empty((m, m, states.shape[1], bip.num_groups), dtype=complex)
    for p in range(m):
        for q in range(m):
            A[p, q] = (bip.indicator @ (states[q] * W[p]).T).T
    return np.einsum("pqtg,rstg->tpqrs", A, A.conj())


def kernel_fidelity(K: np.ndarray, amplitudes: np.ndarray) -> np.ndarray:
    """Evaluate a quartic kernel for a stack of amplitude vectors ``(n, m)``."""
    x = np.atleast_2d(np.asarray(amplitudes, dtype=complex))
    C = np.einsum("np,nq,nr,ns->npqrs", x.conj(), x, x, x.conj())
    n_t = K.shape[0]
    return (C.reshape(len(x), -1) @ K.reshape(n_t, -1).T).real


def haar_amplitudes(n_samples: int, seed: int) -> np.ndarray:
    """Haar-random qubit amplitudes ``(sqrt(U), e^{i phi} sqrt(1 - U))`` with a real first entry."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.random(n_samples)
    phase = TWO_PI * rng.random(n_samples)
    return np.stack([np.sqrt(u), np.exp(1j * phase) * np.sqrt(1.0 - u)], axis=1)


def compensated_mean(rows: np.ndarray) -> np.ndarray:
    """Column means accumulated in row order with Neumaier compensation."""
    total = np.zeros(rows.shape[1])
    comp = np.zeros(rows.shape[1])
    for row in rows:
        t = total + row
        big = np.abs(total) >= np.abs(row)
        comp += np.where(big, (total - t) + row, (row - t) + total)
        total = t
    return (total + comp) / len(rows)


@dataclass
class HaarAverage:
    t_grid: np.ndarray
    mean_f: np.ndarray
    mean_f_m: float
    t_star: float
    n_samples: int
    seed: int
    parameters: dict = field(default_factory=dict)

    def __iter__(self):
        yield self.mean_f
        yield self.mean_f_m


def average_over(K: np.ndarray, amplitudes: np.ndarray, chunk: int = 2048) -> np.ndarray:
    rows = np.concatenate([kernel_fidelity(K, amplitudes[s : s + chunk]) for s in range(0, len(amplitudes), chunk)])
    return compensated_mean(rows)


def rung_kernels(
    lattice: SpinLattice, params: ModelParams, i: int, receivers: Sequence[int], t_grid
) -> dict[int, np.ndarray]:
    """Quartic kernels of the rung pipeline for several receiver rungs."""
    pair = find_critical_field(lattice.L, lattice.bc_rung)
    H = full_hamiltonian(lattice, params, 1)
    sites = lattice.rung_sites(i)
    states = np.stack([evolve_many(H, embed_product(H.basis, [(sites, k)]), t_grid) for k in pair.kets])
    return {
        rec: quartic_kernel(states, _bipartition(H.basis, tuple(lattice.rung_sites(rec))), pair.kets)
        for rec in receivers
    }


def effective_kernels(
    lattice: SpinLattice, params: ModelParams, i: int, receivers: Sequence[int], t_grid
) -> dict[int, np.ndarray]:
    H = effective_hamiltonian(lattice.N, couplings_for(lattice, params), lattice.bc_leg)
    eye = np.eye(2, dtype=complex)
    states = np.stack([evolve_many(H, embed_product(H.basis, [([i - 1], e)]), t_grid) for e in eye])
    return {rec: quartic_kernel(states, _bipartition(H.basis, (rec - 1,)), eye) for rec in receivers}


def haar_average(
    lattice: SpinLattice,
    params: ModelParams,
    i: int = 1,
    r: int = 1,
    t_grid=None,
    n_samples: int = 1000,
    seed: int = 0,
    pipeline: Literal["rung", "effective"] = "rung",
) -> HaarAverage:
    """Average fidelity over Haar-random inputs ``a1 |0> + e^{i a2} sqrt(1 - a1^2) |1>``."""
    t = default_t_grid() if t_grid is None else _check_grid(t_grid)
    receiver = lattice.receiver(i, r)
    kernels = {"rung": rung_kernels, "effective": effective_kernels}
    if pipeline not in kernels:
        raise ValueError(f"unknown pipeline {pipeline!r}")
    K = kernels[pipeline](lattice, params, i, [receiver], t)[receiver]
    mean = average_over(K, haar_amplitudes(n_samples, seed))
    k = int(np.argmax(mean))
    return HaarAverage(
        t, mean, float(mean[k]), float(t[k]), n_samples, seed,
        _params_dict(lattice, params, i=i, r=r, pipeline=pipeline),
    )


def epsilon_error(
    lattice: SpinLattice,
    params: ModelParams,
    inp,
    i: int = 1,
    r: int = 1,
    t_grid=None,
    projection_mode: ProjectionMode = "normalized",
) -> float:
    """``max_t |f - f_eff|`` between the lattice and effective-chain pipelines."""
    return epsilon_records(lattice, params, inp, i, r, t_grid, projection_mode)[0]


def epsilon_records(lattice, params, inp, i=1, r=1, t_grid=None, projection_mode="normalized"):
    full = rr_transfer(lattice, params, inp, i, r, t_grid)
    eff = effective_transfer_for(lattice, params, inp, i, r, full.t_grid, projection_mode)
    full.f_eff_values = eff.f_values
    return float(np.max(np.abs(full.f_values - eff.f_values))), full
