"""Exact time evolution from a cached eigendecomposition."""

from __future__ import annotations

import numpy as np

from .sector import (
    DENSE_LIMIT,
    Eigensystem,
    SectorOperator,
    SectorState,
    _check_same_basis,
    heisenberg_operator,
)

HERMITIAN_TOL = 1e-12


def diagonalize(op: SectorOperator) -> Eigensystem:
    """Dense ``eigh`` of a sector operator; eigenvalues ascending."""
    if op.dim > DENSE_LIMIT:
        raise ValueError(f"sector dimension {op.dim} exceeds the dense limit {DENSE_LIMIT}")
    err = op.hermiticity_error()
    if err > HERMITIAN_TOL:
        raise ValueError(f"operator is not Hermitian (max |H - H^dag| = {err:.3g})")
    dense = op.toarray()
    values, vectors = np.linalg.eigh(0.5 * (dense + dense.conj().T))
    return Eigensystem(values, vectors)


def evolve_many(op: SectorOperator, amps: np.ndarray, times) -> np.ndarray:
    """``exp(-i H t) psi`` for every ``t``; returns shape ``(len(times), dim)``."""
    eig = op.eigh()
    coeffs = eig.vectors.conj().T @ np.asarray(amps, dtype=complex)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    phases = np.exp(-1j * np.outer(times, eig.values))
    return (phases * coeffs) @ eig.vectors.T


def evolve(op: SectorOperator, state: SectorState, t: float) -> SectorState:
    _check_same_basis(op.basis, state.basis)
    if t == 0:
        return state.copy()
    return SectorState(state.basis, evolve_many(op, state.amplitudes, [t])[0])


def rung_operator(lattice, rung: int, field: float, basis) -> SectorOperator:
    """Rung Hamiltonian of one rung, acting as identity on every other site."""
    fields = np.zeros(basis.num_sites)
    fields[lattice.rung_sites(rung)] = field
    bonds = [(a, b, 1.0) for a, b in lattice.rung_bonds_of(rung)]
    return heisenberg_operator(basis, bonds, fields)


def rung_unitary(lattice, rung: int, field: float, duration: float, state, basis=None):
    """Apply ``exp(-i duration H_rung(field))`` on one rung of ``state``.

    ``state`` is a :class:`SectorState` or a raw amplitude array (stacks allowed,
    basis on the last axis) over ``basis``. Negative durations run backwards.
    """
    basis = state.basis if isinstance(state, SectorState) else basis
    U = _rung_propagator(lattice, rung, field, duration, basis)
    if isinstance(state, SectorState):
        return SectorState(basis, U @ state.amplitudes)
    return np.asarray(state) @ U.T


_PROPAGATOR_CACHE: dict = {}


def _rung_propagator(lattice, rung, field, duration, basis) -> np.ndarray:
    key = (lattice, rung, float(field), float(duration), basis.num_sites, basis.k_max)
    U = _PROPAGATOR_CACHE.get(key)
    if U is None:
        op = rung_operator(lattice, rung, field, basis)
        U = op.eigh().propagator(duration)
        if len(_PROPAGATOR_CACHE) > 256:
            _PROPAGATOR_CACHE.clear()
        _PROPAGATOR_CACHE[key] = U
    return U
