"""Single-qubit transfer: encode a qubit into the rung ground pair, decode it at the receiver.

The encoders and decoders are compositions of a rung evolution and
single-site phase gates, so they conserve magnetization and act on sector
states directly. States are passed as :class:`SectorState` or as raw
amplitude arrays (a stack of time slices is fine) together with ``basis``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .lattice import SpinLattice
from .models import ModelParams, find_critical_field
from .propagation import evolve_many, rung_unitary
from .sector import SectorState, apply_diagonal_phase, apply_local_pauli_z, embed_product
from .transfer import (
    TransferRecord,
    _bipartition,
    _check_grid,
    _params_dict,
    average_over,
    default_t_grid,
    full_hamiltonian,
    haar_amplitudes,
    quartic_kernel,
    HaarAverage,
)

Protocol = Literal["two_leg", "four_leg"]

ENCODE_TIME = np.pi / 2
DECODE_TIME = 3 * np.pi / 2
QUARTER = np.pi / 4


class UnsupportedProtocol(ValueError):
    pass


@dataclass(frozen=True)
class QubitInput:
    c0: complex = 1.0
    c1: complex = 0.0

    def __post_init__(self):
        norm = abs(self.c0) ** 2 + abs(self.c1) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"|c0|^2 + |c1|^2 = {norm}, expected 1")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c0, self.c1], dtype=complex)


def embedded_rung_state(L: int, qubit: QubitInput, j: int) -> np.ndarray:
    """``c0 |0...0> + c1 |1_j>`` on one rung (tensor order, leg 1 most significant)."""
    vec = np.zeros(1 << L, dtype=complex)
    vec[0] = qubit.c0
    vec[1 << (L - j)] = qubit.c1
    return vec


def _basis(state, basis):
    return state.basis if isinstance(state, SectorState) else basis


def _field(lattice: SpinLattice, field: float | None) -> float:
    return find_critical_field(lattice.L, lattice.bc_rung).w_c if field is None else field


def _check_two_leg(lattice: SpinLattice, *legs: int):
    if lattice.L != 2:
        raise UnsupportedProtocol(f"two-leg protocol needs L = 2, lattice has L = {lattice.L}")
    for j in legs:
        if j not in (1, 2):
            raise ValueError(f"leg index must be 1 or 2, got {j}")


def _check_four_leg(lattice: SpinLattice, *legs: int):
    if lattice.L != 4 or lattice.bc_rung != "periodic":
        raise UnsupportedProtocol("four-leg protocol needs L = 4 with periodic rungs")
    for j in legs:
        if j not in (1, 2, 3, 4):
            raise ValueError(f"leg index must be in 1..4, got {j}")


def _final_rotation(state, site, needs_z: bool, field: float | None, basis):
    # R_d: identity or sigma^z at the critical field; exp(-i (w - s) pi sigma^z) for a general field
    if field is None:
        return apply_local_pauli_z(state, site, basis) if needs_z else state
    shift = 0.5 if needs_z else 0.0
    return apply_diagonal_phase(state, site, (field - shift) * np.pi, basis)


def encode_two_leg(lattice: SpinLattice, state, sender_j: int = 1, rung: int = 1, field=None, basis=None):
    """Rung evolution for ``pi/2`` followed by ``exp(-i pi/4 sigma^z)`` on the sender qubit."""
    _check_two_leg(lattice, sender_j)
    basis = _basis(state, basis)
    state = rung_unitary(lattice, rung, _field(lattice, field), ENCODE_TIME, state, basis)
    return apply_diagonal_phase(state, lattice.site_index(rung, sender_j), QUARTER, basis)


def decode_two_leg(
    lattice: SpinLattice, state, rung: int, target_j: int = 1, sender_j: int = 1, field=None, basis=None
):
    """Phase ``exp(+i pi/4 sigma^z)`` on the target, rung evolution for ``3 pi/2``, then ``R_d``.

    ``R_d`` is ``sigma^z`` when the target leg differs from the sender leg.
    """
    _check_two_leg(lattice, target_j, sender_j)
    basis = _basis(state, basis)
    site = lattice.site_index(rung, target_j)
    state = apply_diagonal_phase(state, site, -QUARTER, basis)
    state = rung_unitary(lattice, rung, _field(lattice, field), DECODE_TIME, state, basis)
    return _final_rotation(state, site, target_j != sender_j, field, basis)


def encode_four_leg(lattice: SpinLattice, state, rung: int = 1, field=None, basis=None):
    """Sender qubit ``(rung, 1)``: rung evolution, ``sigma^z`` on leg 1, phases on legs 2 and 4."""
    _check_four_leg(lattice)
    basis = _basis(state, basis)
    state = rung_unitary(lattice, rung, _field(lattice, field), ENCODE_TIME, state, basis)
    state = apply_local_pauli_z(state, lattice.site_index(rung, 1), basis)
    for j in (2, 4):
        state = apply_diagonal_phase(state, lattice.site_index(rung, j), QUARTER, basis)
    return state


def decode_four_leg(lattice: SpinLattice, state, rung: int, target_j: int = 1, field=None, basis=None):
    _check_four_leg(lattice, target_j)
    basis = _basis(state, basis)
    site = lattice.site_index(rung, target_j)
    partners = (2, 4) if target_j in (1, 3) else (1, 3)
    state = apply_local_pauli_z(state, site, basis)
    for j in partners:
        state = apply_diagonal_phase(state, lattice.site_index(rung, j), -QUARTER, basis)
    state = rung_unitary(lattice, rung, _field(lattice, field), DECODE_TIME, state, basis)
    return _final_rotation(state, site, target_j in (2, 4), field, basis)


def protocol_for(lattice: SpinLattice) -> Protocol:
    if lattice.L == 2:
        return "two_leg"
    if lattice.L == 4 and lattice.bc_rung == "periodic":
        return "four_leg"
    raise UnsupportedProtocol(
        f"no single-qubit protocol for L={lattice.L} with {lattice.bc_rung} rungs "
        "(available: two_leg for L=2, four_leg for L=4 periodic)"
    )


def _codec(lattice: SpinLattice, protocol: str, sender_j: int, target_j: int):
    if protocol == "two_leg":
        _check_two_leg(lattice, sender_j, target_j)
        enc = lambda st, basis: encode_two_leg(lattice, st, sender_j, 1, basis=basis)
        dec = lambda st, rung, basis: decode_two_leg(lattice, st, rung, target_j, sender_j, basis=basis)
    elif protocol == "four_leg":
        _check_four_leg(lattice, target_j)
        if sender_j != 1:
            raise ValueError("the four-leg protocol sends from qubit (1, 1)")
        enc = lambda st, basis: encode_four_leg(lattice, st, 1, basis=basis)
        dec = lambda st, rung, basis: decode_four_leg(lattice, st, rung, target_j, basis=basis)
    else:
        raise UnsupportedProtocol(f"unsupported protocol {protocol!r}")
    return enc, dec


def encoded_rung_vector(lattice: SpinLattice, qubit: QubitInput, protocol: str | None = None, sender_j: int = 1):
    """Rung-1 vector after encoding, for comparison with rung-to-rung transfer."""
    protocol = protocol or protocol_for(lattice)
    enc, _ = _codec(lattice, protocol, sender_j, sender_j)
    H = full_hamiltonian(lattice, ModelParams(), 1)
    sites = lattice.rung_sites(1)
    amps = enc(embed_product(H.basis, [(sites, embedded_rung_state(lattice.L, qubit, sender_j))]), H.basis)
    bip = _bipartition(H.basis, tuple(sites))
    M = bip.amplitude_matrix(amps)
    vacuum = bip.group[H.basis.index(0)]
    return M[vacuum]


def _pipeline_states(lattice, params, qubits, r, target_j, t, protocol, sender_j, encoded):
    """Time series of full states for each input qubit vector (rows of ``qubits``)."""
    H = full_hamiltonian(lattice, params, 1)
    basis = H.basis
    receiver = lattice.receiver(1, r)
    sites = lattice.rung_sites(1)
    if encoded:
        enc, dec = _codec(lattice, protocol, sender_j, target_j)
    out = []
    for c in qubits:
        init = embed_product(basis, [(sites, embedded_rung_state(lattice.L, QubitInput(*c), sender_j))])
        if encoded:
            init = enc(init, basis)
        states = evolve_many(H, init, t)
        if encoded:
            states = dec(states, receiver, basis)
        out.append(states)
    bip = _bipartition(basis, (lattice.site_index(receiver, target_j),))
    return np.stack(out), bip


def single_qubit_transfer(
    lattice: SpinLattice,
    params: ModelParams,
    qubit: QubitInput,
    r: int = 1,
    target_j: int = 1,
    t_grid=None,
    protocol: Protocol | None = None,
    sender_j: int = 1,
) -> TransferRecord:
    """Encode at rung 1, evolve, decode at rung ``1 + r``; fidelity of qubit ``(1 + r, target_j)``."""
    protocol = protocol or protocol_for(lattice)
    t = default_t_grid() if t_grid is None else _check_grid(t_grid)
    states, bip = _pipeline_states(lattice, params, [qubit.vector], r, target_j, t, protocol, sender_j, True)
    f = bip.fidelity(states[0], qubit.vector)
    return TransferRecord(
        _params_dict(lattice, params, input=_qubit_dict(qubit), r=r, target_j=target_j,
                     sender_j=sender_j, protocol=protocol, pipeline="protocol"),
        t,
        np.clip(f, 0.0, None),
    )


def bare_transfer_baseline(
    lattice: SpinLattice,
    params: ModelParams,
    qubit: QubitInput,
    r: int = 1,
    target_j: int = 1,
    t_grid=None,
    sender_j: int = 1,
) -> TransferRecord:
    """Same transfer without encoding or decoding: the qubit is released as is."""
    if not (1 <= target_j <= lattice.L and 1 <= sender_j <= lattice.L):
        raise ValueError(f"leg indices must lie in 1..{lattice.L}")
    t = default_t_grid() if t_grid is None else _check_grid(t_grid)
    states, bip = _pipeline_states(lattice, params, [qubit.vector], r, target_j, t, None, sender_j, False)
    f = bip.fidelity(states[0], qubit.vector)
    return TransferRecord(
        _params_dict(lattice, params, input=_qubit_dict(qubit), r=r, target_j=target_j,
                     sender_j=sender_j, pipeline="bare"),
        t,
        np.clip(f, 0.0, None),
    )


def _qubit_dict(q: QubitInput) -> dict:
    c0, c1 = complex(q.c0), complex(q.c1)
    return {"c0": [c0.real, c0.imag], "c1": [c1.real, c1.imag]}


def haar_average_single_qubit(
    lattice: SpinLattice,
    params: ModelParams,
    r: int = 1,
    target_j: int = 1,
    t_grid=None,
    n_samples: int = 1000,
    seed: int = 0,
    pipeline: Literal["protocol", "bare"] = "protocol",
    protocol: Protocol | None = None,
    sender_j: int = 1,
) -> HaarAverage:
    """Average single-qubit fidelity over Haar-random ``(c0, c1)``."""
    if pipeline not in ("protocol", "bare"):
        raise ValueError(f"unknown pipeline {pipeline!r}")
    encoded = pipeline == "protocol"
    if encoded:
        protocol = protocol or protocol_for(lattice)
    t = default_t_grid() if t_grid is None else _check_grid(t_grid)
    states, bip = _pipeline_states(lattice, params, np.eye(2), r, target_j, t, protocol, sender_j, encoded)
    K = quartic_kernel(states, bip, np.eye(2))
    mean = average_over(K, haar_amplitudes(n_samples, seed))
    k = int(np.argmax(mean))
    return HaarAverage(
        t, mean, float(mean[k]), float(t[k]), n_samples, seed,
        _params_dict(lattice, params, r=r, target_j=target_j, sender_j=sender_j,
                     protocol=protocol, pipeline=pipeline),
    )
