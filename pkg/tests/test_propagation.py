import numpy as np
import pytest
import scipy.sparse as sp
from scipy.linalg import expm

from ladder_transfer.lattice import SpinLattice
from ladder_transfer.models import ModelParams, build_full_hamiltonian
from ladder_transfer.propagation import diagonalize, evolve, evolve_many, rung_operator, rung_unitary
from ladder_transfer.sector import SectorBasis, SectorOperator, SectorState


def test_evolve_matches_expm():
    lat = SpinLattice(3, 2)
    basis = SectorBasis(6, 2)
    H = build_full_hamiltonian(lat, ModelParams(0.08, 0.03, 0.0), basis)
    rng = np.random.default_rng(0)
    psi = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    psi /= np.linalg.norm(psi)
    for t in (0.0, 0.7, 13.1):
        ref = expm(-1j * t * H.toarray()) @ psi
        assert np.allclose(evolve(H, SectorState(basis, psi), t).amplitudes, ref, atol=1e-12)
    stack = evolve_many(H, psi, [0.0, 2.0])
    assert stack.shape == (2, basis.dim)
    assert np.allclose(np.linalg.norm(stack, axis=1), 1.0)


def test_rejects_non_hermitian_and_large():
    basis = SectorBasis(2, 1)
    bad = SectorOperator(basis, sp.csr_matrix(np.triu(np.ones((3, 3)))))
    with pytest.raises(ValueError, match="Hermitian"):
        diagonalize(bad)
    big = SectorOperator(SectorBasis(13, 13), sp.identity(1 << 13, format="csr"))
    with pytest.raises(ValueError, match="dense limit"):
        diagonalize(big)


def test_rung_unitary_acts_locally():
    lat = SpinLattice(3, 2)
    basis = SectorBasis(6, 1)
    op = rung_operator(lat, 2, 1.0, basis)
    U = expm(-1j * np.pi / 2 * op.toarray())
    psi = np.zeros(basis.dim, dtype=complex)
    psi[basis.index(1 << 2)] = 1.0  # excitation on (2, 1)
    out = rung_unitary(lat, 2, 1.0, np.pi / 2, psi, basis)
    assert np.allclose(out, U @ psi)
    # untouched rungs: an excitation on rung 1 only picks up the field phase
    psi1 = np.zeros(basis.dim, dtype=complex)
    psi1[basis.index(1)] = 1.0
    out1 = rung_unitary(lat, 2, 1.0, 0.4, psi1, basis)
    assert abs(out1[basis.index(1)]) == pytest.approx(1.0)
