"""Exact-diagonalization tools for rung-to-rung state transfer on spin ladders."""

from .lattice import SpinLattice
from .sector import SectorBasis, SectorOperator, SectorState, build_basis
from .models import (
    EffectiveCouplings,
    ModelParams,
    NoEffectiveQubit,
    RungGroundPair,
    UnsupportedGeometry,
    build_full_hamiltonian,
    effective_couplings,
    find_critical_field,
    fitted_couplings,
    projected_hamiltonian_oracle,
)
from .propagation import diagonalize, evolve, evolve_many
from .transfer import (
    HaarAverage,
    RungInput,
    TransferRecord,
    default_t_grid,
    effective_transfer,
    epsilon_error,
    haar_average,
    high_energy_overlap,
    max_fidelity,
    rr_transfer,
)
from .codec import (
    QubitInput,
    UnsupportedProtocol,
    bare_transfer_baseline,
    decode_four_leg,
    decode_two_leg,
    encode_four_leg,
    encode_two_leg,
    haar_average_single_qubit,
    single_qubit_transfer,
)
from .analysis import ggm, ggm_curve, high_energy_scan, optimize_fm, sweep_r

__version__ = "0.1.0"
