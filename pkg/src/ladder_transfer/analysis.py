"""Entanglement of rung states, high-energy scans, distance sweeps and coupling optimization.

Everything here returns plain tables (dicts of equally long numpy arrays or
small dataclasses) so the command line front end can write them straight to
CSV or JSON.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import spearmanr

from .lattice import SpinLattice
from .models import ModelParams, find_critical_field
from .transfer import (
    NoLowEnergyComponent,
    RungInput,
    average_over,
    default_t_grid,
    epsilon_error,
    haar_amplitudes,
    high_energy_overlap,
    max_fidelity,
    prepare_rung_input,
    rr_transfer,
    rung_kernels,
)

NORM_TOL = 1e-10
MAX_GGM_PARTIES = 10


def _pmap(fn: Callable, items: Sequence, threads: int | None) -> list:
    # results come back in input order whatever the worker count
    if not threads or threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --- entanglement -------------------------------------------------------------


def bipartitions(n: int) -> Iterable[tuple[int, ...]]:
    """One side of every nonempty proper bipartition of ``n`` parties, each split once."""
    for size in range(1, n // 2 + 1):
        for part in combinations(range(n), size):
            if 2 * size == n and 0 not in part:
                continue  # complement already listed
            yield part


def largest_schmidt_weight(psi: np.ndarray, part: Sequence[int]) -> float:
    """Largest squared Schmidt coefficient of ``psi`` across ``part | rest``."""
    n = psi.ndim
    rest = [k for k in range(n) if k not in part]
    M = np.transpose(psi, list(part) + rest).reshape(1 << len(part), -1)
    s = np.linalg.svd(M, compute_uv=False)
    return float(s[0] ** 2)


def ggm(vec: np.ndarray) -> float:
    """Generalized geometric measure of a pure qubit state.

    Parameters
    ----------
    vec : array of length ``2**L``
        Normalized amplitudes in tensor order.

    Returns
    -------
    float
        ``1 - max`` over bipartitions of the largest squared Schmidt coefficient.
    """
    vec = np.asarray(vec, dtype=complex)
    L = int(round(np.log2(vec.size)))
    if vec.ndim != 1 or vec.size != 1 << L or L < 1:
        raise ValueError(f"expected a vector of length 2**L, got shape {vec.shape}")
    if L > MAX_GGM_PARTIES:
        raise ValueError(f"ggm supports at most {MAX_GGM_PARTIES} qubits, got {L}")
    norm = np.vdot(vec, vec).real
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (norm^2 = {norm})")
    if L == 1:
        return 0.0
    psi = vec.reshape((2,) * L)
    best = max(largest_schmidt_weight(psi, part) for part in bipartitions(L))
    return float(min(1.0, max(0.0, 1.0 - best)))


def ggm_curve(L: int, bc_rung: str = "open", a1_grid=None) -> dict[str, np.ndarray]:
    """GGM of ``a1 |0> + sqrt(1 - a1^2) |1>`` built from the rung ground pair.

    The phase ``a2`` acts as a product of single-site phase gates on these
    states, so it is left out.
    """
    a1 = np.linspace(0.0, 1.0, 21) if a1_grid is None else np.asarray(a1_grid, dtype=float)
    if np.any((a1 < 0) | (a1 > 1)):
        raise ValueError("a1 values must lie in [0, 1]")
    pair = find_critical_field(L, bc_rung)
    G = np.array([ggm(prepare_rung_input(pair, RungInput(float(a)))) for a in a1])
    return {"a1": a1, "G": G}


# --- high-energy scans ----------------------------------------------------------


@dataclass
class ScanResult:
    """``D`` and ``eps`` maps over a rectangular grid; rows follow ``y``, columns ``x``."""

    x_name: str
    y_name: str
    x: np.ndarray
    y: np.ndarray
    D: np.ndarray
    eps: np.ndarray
    fixed: dict = field(default_factory=dict)

    def table(self) -> dict[str, np.ndarray]:
        X, Y = np.meshgrid(self.x, self.y)
        return {self.x_name: X.ravel(), self.y_name: Y.ravel(), "D": self.D.ravel(), "eps": self.eps.ravel()}


SCAN_AXES = {2: ("b", "theta"), 3: ("b1", "b2", "theta1", "theta2")}
VARIANTS = {2: "xi_L2", 3: "w_class_L3"}


def high_energy_point(lattice, params, inp: RungInput, r: int = 2, t_grid=None, with_eps: bool = True):
    """``(D, eps)`` for one parametrized rung input.

    ``eps`` is NaN when it is not requested or when the input has no
    low-energy part to project.
    """
    pair = find_critical_field(lattice.L, lattice.bc_rung)
    D = high_energy_overlap(prepare_rung_input(pair, inp), pair)
    if not with_eps:
        return D, np.nan
    try:
        return D, epsilon_error(lattice, params, inp, 1, r, t_grid)
    except NoLowEnergyComponent:
        return D, np.nan


def high_energy_scan(
    lattice: SpinLattice,
    params: ModelParams,
    x: tuple[str, Sequence[float]],
    y: tuple[str, Sequence[float]],
    a1: float = 0.0,
    a2: float = 0.0,
    fixed: dict | None = None,
    r: int = 2,
    t_grid=None,
    with_eps: bool = True,
    threads: int | None = None,
) -> ScanResult:
    """Map the high-energy overlap ``D`` and the error ``eps`` over two input parameters.

    For ``L = 2`` the axes are ``b`` and ``theta``; for ``L = 3`` any two of
    ``b1, b2, theta1, theta2`` with the others given in ``fixed``. Grid points
    with ``b1**2 + b2**2 > 1`` are left as NaN.
    """
    if lattice.L not in SCAN_AXES:
        raise ValueError(f"high-energy scans need L = 2 or 3, got L = {lattice.L}")
    names = SCAN_AXES[lattice.L]
    (xn, xv), (yn, yv) = x, y
    for n in (xn, yn):
        if n not in names:
            raise ValueError(f"axis {n!r} not available for L={lattice.L}; choose from {names}")
    if xn == yn:
        raise ValueError("scan axes must differ")
    fixed = dict(fixed or {})
    unknown = set(fixed) - set(names)
    if unknown:
        raise ValueError(f"unknown fixed parameters {sorted(unknown)}")
    xv, yv = np.asarray(xv, dtype=float), np.asarray(yv, dtype=float)
    if lattice.L == 3 and xn not in ("b1", "b2") and yn not in ("b1", "b2"):
        b1, b2 = fixed.get("b1", 0.0), fixed.get("b2", 0.0)
        if b1**2 + b2**2 > 1.0 + 1e-12:
            raise ValueError(f"infeasible (b1, b2) = ({b1}, {b2}): b1^2 + b2^2 > 1")
    t = default_t_grid() if t_grid is None else t_grid

    def point(idx):
        iy, ix = divmod(idx, len(xv))
        kw = dict(fixed, **{xn: float(xv[ix]), yn: float(yv[iy])})
        if kw.get("b1", 0.0) ** 2 + kw.get("b2", 0.0) ** 2 > 1.0 + 1e-12:
            return np.nan, np.nan
        inp = RungInput(a1, a2, VARIANTS[lattice.L], **kw)
        return high_energy_point(lattice, params, inp, r, t, with_eps)

    vals = np.array(_pmap(point, range(len(xv) * len(yv)), threads), dtype=float)
    shape = (len(yv), len(xv))
    return ScanResult(xn, yn, xv, yv, vals[:, 0].reshape(shape), vals[:, 1].reshape(shape),
                      dict(fixed, a1=a1, a2=a2, r=r))


# --- distance sweeps --------------------------------------------------------------


def sweep_r(
    lattice: SpinLattice,
    params: ModelParams,
    inp: RungInput | None = None,
    r_range: Sequence[int] | None = None,
    t_grid=None,
    haar: tuple[int, int] | None = None,
    optimize: bool = False,
    i: int = 1,
    threads: int | None = None,
    **optimize_kw,
) -> dict[str, np.ndarray]:
    """``f_m`` (and optionally ``<f>_m`` and the optimized ``f_m``) against distance ``r``.

    ``haar`` is ``(n_samples, seed)``; when given the Haar-averaged maximum is
    added. With ``optimize`` each ``r`` also gets its coupling-optimized value.
    """
    if inp is None and haar is None:
        raise ValueError("give a rung input, a Haar specification, or both")
    rs = np.arange(1, lattice.N - i + 1) if r_range is None else np.asarray(list(r_range), dtype=int)
    t = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    out: dict[str, np.ndarray] = {"r": rs}
    if inp is not None:
        fm = np.array(_pmap(lambda r: max_fidelity(rr_transfer(lattice, params, inp, i, int(r), t)), rs, threads))
        out["f_m"], out["t_star"] = fm[:, 0], fm[:, 1]
    if haar is not None:
        n, seed = haar
        receivers = [lattice.receiver(i, int(r)) for r in rs]
        kernels = rung_kernels(lattice, params, i, receivers, t)
        amps = haar_amplitudes(n, seed)
        means = [average_over(kernels[rec], amps) for rec in receivers]
        out["mean_f_m"] = np.array([m.max() for m in means])
        out["mean_t_star"] = np.array([t[int(np.argmax(m))] for m in means])
    if optimize:
        if inp is None:
            raise ValueError("optimization needs a rung input")
        opts = [optimize_fm(lattice, inp, int(r), t_grid=t, i=i, threads=threads, **optimize_kw) for r in rs]
        out["opt_f_m"] = np.array([o.f_tilde for o in opts])
        for k, name in enumerate(("opt_u", "opt_v", "opt_dw")):
            out[name] = np.array([o.x[k] for o in opts])
    return out


# --- coupling optimization --------------------------------------------------------


@dataclass
class OptimizationResult:
    f_tilde: float
    x: tuple[float, float, float]
    t_star: float
    f_reference: float
    n_evaluations: int
    converged: bool
    message: str = ""

    @property
    def params(self) -> ModelParams:
        return ModelParams(*self.x)


def optimize_fm(
    lattice: SpinLattice,
    inp: RungInput,
    r: int,
    box: Sequence[tuple[float, float]] = ((0.0, 0.1),) * 3,
    grid_points: int = 5,
    t_grid=None,
    i: int = 1,
    reference: ModelParams = ModelParams(),
    xatol: float = 1e-4,
    fatol: float = 1e-7,
    max_evaluations: int = 400,
    threads: int | None = None,
) -> OptimizationResult:
    """Maximize ``f_m`` over ``(u, v, dw)`` inside ``box``.

    A coarse grid seeds a bounded Nelder-Mead search. The reference point is
    evaluated too, and the best of every evaluated point is returned, so the
    result never falls below the reference value.
    """
    box = np.asarray(box, dtype=float)
    if box.shape != (3, 2) or np.any(box[:, 0] > box[:, 1]):
        raise ValueError("box must be three (low, high) pairs")
    t = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    generator = reference.transfer_generator
    seen: dict[tuple, tuple[float, float]] = {}

    def evaluate(x) -> tuple[float, float]:
        key = tuple(float(c) for c in np.clip(x, box[:, 0], box[:, 1]))
        if key not in seen:
            p = ModelParams(*key, transfer_generator=generator)
            seen[key] = max_fidelity(rr_transfer(lattice, p, inp, i, r, t))
        return seen[key]

    ref_x = (reference.u, reference.v, reference.dw)
    f_ref = evaluate(ref_x)[0]
    axes = [np.linspace(lo, hi, grid_points) for lo, hi in box]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    fvals = _pmap(lambda x: evaluate(x)[0], list(grid), threads)
    x0 = grid[int(np.argmax(fvals))]
    res = minimize(
        lambda x: -evaluate(x)[0], x0, method="Nelder-Mead", bounds=box,
        options={"xatol": xatol, "fatol": fatol, "maxfev": max_evaluations},
    )
    best = max(seen, key=lambda k: (seen[k][0], k == tuple(ref_x)))
    f_best, t_best = seen[best]
    return OptimizationResult(f_best, best, t_best, f_ref, len(seen), bool(res.success), str(res.message))


def spearman(x, y) -> float:
    """Spearman rank correlation, e.g. of ``f_m`` against ``r``."""
    return float(spearmanr(x, y).statistic)
