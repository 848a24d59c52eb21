import math

import numpy as np
import pytest

import oracle
from ladder_transfer.lattice import SpinLattice
from ladder_transfer.models import ModelParams, effective_couplings, find_critical_field
from ladder_transfer.transfer import (
    RungInput,
    TransferRecord,
    compensated_mean,
    default_t_grid,
    effective_transfer,
    epsilon_records,
    haar_amplitudes,
    haar_average,
    high_energy_overlap,
    kernel_fidelity,
    max_fidelity,
    prepare_rung_input,
    rr_transfer,
    rung_kernels,
)

BELL = RungInput(0.0, 0.0)


def oracle_rr(N, L, p, vec, i, r, times, bc_rung="open"):
    w = find_critical_field(L, bc_rung).w_c + p.dw
    H = oracle.full_hamiltonian(N, L, w, p.u, p.v, bc_rung)
    states = oracle.evolve(H, oracle.rung_embed(vec, i, N, L), times)
    keep = list(range((i + r - 1) * L, (i + r) * L))
    return np.array([(vec.conj() @ oracle.reduced(s, keep, N * L) @ vec).real for s in states])


def test_default_grid():
    t = default_t_grid()
    assert len(t) == 1001 and t[-1] == 100.0 and t[1] == pytest.approx(0.1)
    with pytest.raises(ValueError):
        default_t_grid(1.0, 0.3)


def test_rr_transfer_matches_oracle_bell():
    lat, p = SpinLattice(3, 2), ModelParams()
    t = np.arange(0, 100.01, 0.5)
    rec = rr_transfer(lat, p, BELL, 1, 2, t)
    vec = prepare_rung_input(find_critical_field(2, "open"), BELL)
    assert np.max(np.abs(rec.f_values - oracle_rr(3, 2, p, vec, 1, 2, t))) < 1e-10


def test_rr_transfer_two_excitation_rung_vector():
    # a generic rung vector with a doubly excited component exercises k_max = 2
    rng = np.random.default_rng(5)
    vec = rng.normal(size=4) + 1j * rng.normal(size=4)
    vec /= np.linalg.norm(vec)
    lat, p = SpinLattice(3, 2), ModelParams(0.07, 0.02, 0.01)
    t = np.linspace(0, 30, 61)
    rec = rr_transfer(lat, p, vec, 2, 1, t)
    assert np.max(np.abs(rec.f_values - oracle_rr(3, 2, p, vec, 2, 1, t))) < 1e-10


def test_rr_transfer_three_leg_oracle():
    lat, p = SpinLattice(2, 3), ModelParams(0.06, 0.03, 0.0)
    t = np.linspace(0, 50, 51)
    inp = RungInput(0.4, 1.1)
    vec = prepare_rung_input(find_critical_field(3, "open"), inp)
    rec = rr_transfer(lat, p, inp, 1, 1, t)
    assert np.max(np.abs(rec.f_values - oracle_rr(2, 3, p, vec, 1, 1, t))) < 1e-10


def test_eigenstate_input_is_perfect():
    rec = rr_transfer(SpinLattice(6, 2), ModelParams(), RungInput(1.0), 1, 3)
    assert np.max(np.abs(rec.f_values - 1)) < 1e-12


def test_effective_transfer_matches_chain_oracle():
    N, c = 4, effective_couplings(2, "open", 0.05, 0.01, 0.02)
    Xs = [oracle.site_op(oracle.X, s, N) for s in range(N)]
    Ys = [oracle.site_op(oracle.Y, s, N) for s in range(N)]
    Zs = [oracle.site_op(oracle.Z, s, N) for s in range(N)]
    H = sum(c.Jxy * (Xs[k] @ Xs[k + 1] + Ys[k] @ Ys[k + 1]) + c.Jzz * Zs[k] @ Zs[k + 1] for k in range(N - 1))
    H = H + c.h * sum(Zs) + c.h_boundary * (Zs[0] + Zs[-1])
    phi = np.array([0.6, 0.8 * np.exp(0.3j)])
    t = np.linspace(0, 80, 41)
    states = oracle.evolve(H, oracle.rung_embed(phi, 1, N, 1), t)
    ref = [(phi.conj() @ oracle.reduced(s, [2], N) @ phi).real for s in states]
    rec = effective_transfer(N, c, "open", phi, 1, 2, t)
    assert np.allclose(rec.f_values, ref, atol=1e-12)


def test_epsilon_small_in_perturbative_regime():
    eps, rec = epsilon_records(SpinLattice(8, 2), ModelParams(), RungInput(0.3, 0.4), 1, 3)
    assert eps < 1e-6
    assert rec.f_eff_values is not None


def test_max_fidelity_refines_within_one_step():
    rec = rr_transfer(SpinLattice(6, 2), ModelParams(), BELL, 1, 1)
    f_m, t_star = max_fidelity(rec)
    k = int(np.argmax(rec.f_values))
    assert f_m >= rec.f_values[k]
    assert abs(t_star - rec.t_grid[k]) <= 0.1 + 1e-12
    assert f_m == pytest.approx(rec.evaluator(t_star), abs=1e-14)


def test_record_validation():
    with pytest.raises(ValueError):
        TransferRecord({}, [0, 1], [1.0])
    with pytest.raises(ValueError):
        TransferRecord({}, [1, 0], [1.0, 1.0])


def test_high_energy_overlap_values():
    pair = find_critical_field(2, "open")
    D = lambda **kw: high_energy_overlap(prepare_rung_input(pair, RungInput(variant="xi_L2", **kw)), pair)
    assert D(b=1 / np.sqrt(2), theta=np.pi) < 1e-30
    assert D(b=-1 / np.sqrt(2), theta=np.pi) < 1e-30
    assert D(a1=0.1, b=1 / np.sqrt(2), theta=0.0) == pytest.approx(0.99, abs=1e-12)
    pair3 = find_critical_field(3, "open")
    inp = RungInput(variant="w_class_L3", b1=1 / np.sqrt(6), b2=2 / np.sqrt(6), theta1=np.pi, theta2=0.0)
    assert high_energy_overlap(prepare_rung_input(pair3, inp), pair3) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize(
    "kw", [dict(a1=1.2), dict(variant="nope"), dict(variant="xi_L2", b=1.5), dict(variant="w_class_L3", b1=0.8, b2=0.8)]
)
def test_rung_input_validation(kw):
    with pytest.raises(ValueError):
        RungInput(**kw)


def test_haar_amplitudes():
    a = haar_amplitudes(20000, 11)
    assert np.allclose(np.linalg.norm(a, axis=1), 1.0)
    assert np.mean(np.abs(a[:, 0]) ** 2) == pytest.approx(0.5, abs=0.01)
    assert np.array_equal(a, haar_amplitudes(20000, 11))
    with pytest.raises(ValueError):
        haar_amplitudes(0, 1)


def test_kernel_reproduces_direct_fidelity():
    lat, p = SpinLattice(5, 2), ModelParams()
    t = np.linspace(0, 60, 31)
    K = rung_kernels(lat, p, 1, [3], t)[3]
    for x in haar_amplitudes(4, 2):
        a1 = abs(x[0])
        inp = RungInput(a1, float(np.angle(x[1])))
        direct = rr_transfer(lat, p, inp, 1, 2, t).f_values
        assert np.allclose(kernel_fidelity(K, x)[0], direct, atol=1e-13)


def test_haar_average_deterministic_and_pipelines_agree():
    lat = SpinLattice(6, 2)
    a = haar_average(lat, ModelParams(), 1, 2, n_samples=300, seed=4)
    b = haar_average(lat, ModelParams(), 1, 2, n_samples=300, seed=4)
    assert np.array_equal(a.mean_f, b.mean_f)
    e = haar_average(lat, ModelParams(), 1, 2, n_samples=300, seed=4, pipeline="effective")
    assert abs(a.mean_f_m - e.mean_f_m) < 1e-6
    mean, mean_m = a
    assert mean_m == mean.max()


def test_compensated_mean():
    rows = np.array([[1e16], [1.0], [-1e16], [1.0]])
    assert compensated_mean(rows)[0] == pytest.approx(0.5)
    rng = np.random.default_rng(0)
    r = rng.random((1000, 3))
    assert np.allclose(compensated_mean(r), [math.fsum(c) / 1000 for c in r.T], rtol=0, atol=1e-16)
