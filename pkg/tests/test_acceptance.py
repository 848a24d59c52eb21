"""Acceptance criteria at their stated tolerances.

Each check records a pass/fail line that is printed in the terminal summary.
Checks that cannot be met by the model are marked as strict expected
failures: they still run at full tolerance and are reported as FAIL.
"""

import itertools

import numpy as np
import pytest

import oracle
from conftest import ACCEPTANCE
from ladder_transfer.analysis import ggm, ggm_curve, high_energy_point, optimize_fm, spearman, sweep_r
from ladder_transfer.cli import main
from ladder_transfer.codec import (
    QubitInput,
    bare_transfer_baseline,
    decode_four_leg,
    decode_two_leg,
    embedded_rung_state,
    encode_four_leg,
    encode_two_leg,
    encoded_rung_vector,
    haar_average_single_qubit,
    single_qubit_transfer,
)
from ladder_transfer.lattice import SpinLattice
from ladder_transfer.models import (
    ModelParams,
    effective_couplings,
    find_critical_field,
    fit_xxz,
    projected_hamiltonian_oracle,
    rung_hamiltonian,
)
from ladder_transfer.sector import Bipartition, SectorBasis, embed_product
from ladder_transfer.transfer import (
    RungInput,
    default_t_grid,
    epsilon_error,
    max_fidelity,
    prepare_rung_input,
    rr_transfer,
)

REF = ModelParams(0.05, 0.0, 0.0)
BELL = RungInput(0.0, 0.0)
SEED = 7


def record(k: int, ok: bool, detail: str):
    ACCEPTANCE.setdefault(k, []).append((bool(ok), detail))
    assert ok, detail


def random_low_energy(n, seed):
    rng = np.random.default_rng(seed)
    return [RungInput(float(a), float(b)) for a, b in zip(rng.random(n), rng.uniform(0, 2 * np.pi, n))]


def random_qubits(n, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return [QubitInput(*q) for q in z]


def test_01_epsilon_long_ladder():
    lat = SpinLattice(30, 2)
    eps = max(
        epsilon_error(lat, REF, RungInput(a1, 0.0), 1, r)
        for a1 in (0.0, 1 / np.sqrt(2))
        for r in (1, 5, 15, 29)
    )
    record(1, eps <= 1e-6, f"max eps = {eps:.2e} (<= 1e-6)")


def test_02_eigenstate_input():
    cases = [SpinLattice(8, 2), SpinLattice(5, 3), SpinLattice(4, 4), SpinLattice(4, 4, "periodic"),
             SpinLattice(5, 2, bc_leg="periodic"), SpinLattice(3, 5)]
    worst = 0.0
    for lat in cases:
        for r in range(1, lat.N):
            f = rr_transfer(lat, REF, RungInput(1.0), 1, r).f_values
            worst = max(worst, float(np.max(np.abs(f - 1))))
    record(2, worst <= 1e-12, f"max |f - 1| = {worst:.1e} (<= 1e-12)")


def test_03_coupling_oracle():
    worst = 0.0
    for (L, bc), N in itertools.product([(2, "open"), (3, "open"), (4, "open"), (4, "periodic")], (2, 3)):
        for p in (REF, ModelParams(0.08, 0.03, 0.02), ModelParams(0.02, 0.09, 0.1)):
            fit = fit_xxz(projected_hamiltonian_oracle(SpinLattice(N, L, bc), p), N)
            want = np.array(effective_couplings(L, bc, p.u, p.v, p.dw).as_tuple())
            if N == 2:  # only h + h_boundary is identifiable on two rungs
                want = np.array([want[0], want[1], want[2] + want[3], 0.0])
            worst = max(worst, float(np.max(np.abs(np.array(fit.couplings.as_tuple()) - want))), fit.residual)
    record(3, worst <= 1e-10, f"max coupling deviation = {worst:.1e} (<= 1e-10)")


def test_04_sector_vs_full_space():
    lat = SpinLattice(3, 2)
    t = default_t_grid(100.0, 0.5)
    pair = find_critical_field(2, "open")
    H = oracle.full_hamiltonian(3, 2, pair.w_c, REF.u, REF.v)
    worst = 0.0
    for inp in random_low_energy(20, 4):
        vec = prepare_rung_input(pair, inp)
        for r in (1, 2):
            states = oracle.evolve(H, oracle.rung_embed(vec, 1, 3, 2), t)
            keep = [2 * r, 2 * r + 1]
            ref = np.array([(vec.conj() @ oracle.reduced(s, keep, 6) @ vec).real for s in states])
            worst = max(worst, float(np.max(np.abs(rr_transfer(lat, REF, inp, 1, r, t).f_values - ref))))
    record(4, worst <= 1e-10, f"max |f_sector - f_full| = {worst:.1e} (<= 1e-10)")


def test_05_critical_fields():
    expected = {(2, "open"): 1.0, (3, "open"): 1.5, (4, "open"): 1 + 1 / np.sqrt(2), (4, "periodic"): 2.0}
    ok, worst = True, 0.0
    for (L, bc), w in expected.items():
        pair = find_critical_field(L, bc)
        worst = max(worst, abs(pair.w_c - w))
        levels = np.linalg.eigvalsh(rung_hamiltonian(L, bc, pair.w_c))
        ok &= abs(levels[1] - levels[0]) < 1e-12 and levels[2] - levels[1] > 1e-6 and pair.gap > 0
    record(5, ok and worst <= 1e-12, f"max |w_c - expected| = {worst:.1e}, two-fold degenerate with gap: {ok}")


def _roundtrip(lat, q, enc, dec, sender_j, target_j, basis):
    st = embed_product(basis, [(lat.rung_sites(1), embedded_rung_state(lat.L, q, sender_j))])
    out = dec(enc(st))
    return Bipartition(basis, [lat.site_index(1, target_j)]).fidelity(out, q.vector)


def test_06_codec_roundtrip():
    two, four = SpinLattice(2, 2), SpinLattice(2, 4, "periodic")
    b2, b4 = SectorBasis(4, 1), SectorBasis(8, 1)
    worst = 0.0
    for q in random_qubits(100, 6):
        for j in (1, 2):
            f = _roundtrip(two, q, lambda s: encode_two_leg(two, s, 1, basis=b2),
                           lambda s: decode_two_leg(two, s, 1, j, 1, basis=b2), 1, j, b2)
            worst = max(worst, 1 - f)
        for j in (1, 2, 3, 4):
            f = _roundtrip(four, q, lambda s: encode_four_leg(four, s, basis=b4),
                           lambda s: decode_four_leg(four, s, 1, j, basis=b4), 1, j, b4)
            worst = max(worst, 1 - f)
    record(6, worst <= 1e-10, f"max 1 - F = {worst:.1e} (<= 1e-10)")


def _fprime_checks(lat, rs, js, n_inputs):
    dev_f, dev_j = 0.0, 0.0
    for q in random_qubits(n_inputs, lat.L):
        vec = encoded_rung_vector(lat, q)
        for r in rs:
            f = rr_transfer(lat, REF, vec, 1, r).f_values
            fp = [single_qubit_transfer(lat, REF, q, r, j).f_values for j in js]
            dev_f = max(dev_f, float(np.max(np.abs(fp[0] - f))))
            dev_j = max(dev_j, max(float(np.max(np.abs(g - fp[0]))) for g in fp[1:]))
    return dev_f, dev_j


def test_07_fprime_equals_f():
    a_f, a_j = _fprime_checks(SpinLattice(8, 2), range(1, 7), (1, 2), 20)
    b_f, b_j = _fprime_checks(SpinLattice(6, 4, "periodic"), range(1, 6), (1, 2, 3, 4), 20)
    dev_f, dev_j = max(a_f, b_f), max(a_j, b_j)
    record(7, dev_f <= 1e-6 and dev_j <= 1e-9,
           f"max |f' - f| = {dev_f:.1e} (<= 1e-6), max |f'_j - f'_j'| = {dev_j:.1e} (<= 1e-9)")


def test_08b_bare_depends_on_target_leg():
    lat, q = SpinLattice(10, 2), QubitInput(0.6, 0.8 * np.exp(0.4j))
    diff = max(
        float(np.max(np.abs(bare_transfer_baseline(lat, REF, q, r, 1).f_values
                            - bare_transfer_baseline(lat, REF, q, r, 2).f_values)))
        for r in range(1, 9)
    )
    record(8, diff > 1e-9, f"bare f' differs between target legs by up to {diff:.2f}")


@pytest.mark.xfail(strict=True, reason="the bare two-leg baseline matches or beats the protocol at several distances")
def test_08a_protocol_beats_bare():
    lat = SpinLattice(10, 2)
    rows = []
    for r in range(1, 9):
        prot = haar_average_single_qubit(lat, REF, r, 1, n_samples=500, seed=SEED).mean_f_m
        bare = haar_average_single_qubit(lat, REF, r, 1, n_samples=500, seed=SEED, pipeline="bare").mean_f_m
        rows.append((r, prot, bare))
    losing = [r for r, p, b in rows if p < b]
    record(8, not losing, "MATF protocol >= bare fails at r = " + ",".join(map(str, losing))
           + " (" + ", ".join(f"r={r}: {p:.4f} vs {b:.4f}" for r, p, b in rows if r in losing) + ")")


def test_09_distance_trend():
    out = sweep_r(SpinLattice(30, 2), REF, BELL)
    rho = spearman(out["r"], out["f_m"])
    ok = out["f_m"][0] > out["f_m"][-1] and rho < 0
    record(9, ok, f"f_m(1) = {out['f_m'][0]:.4f} > f_m(29) = {out['f_m'][-1]:.2e}, Spearman = {rho:.3f}")


@pytest.fixture(scope="module")
def optimized():
    lat = SpinLattice(30, 2)
    return {r: optimize_fm(lat, BELL, r) for r in (1, 5, 10)}


def test_10a_optimization_dominates(optimized):
    lat = SpinLattice(30, 2)
    gaps = {r: res.f_tilde - max_fidelity(rr_transfer(lat, REF, BELL, 1, r))[0] for r, res in optimized.items()}
    record(10, min(gaps.values()) >= -1e-9,
           "f~_m - f_m(ref) = " + ", ".join(f"r={r}: {g:.3g}" for r, g in gaps.items()) + " (>= -1e-9)")


@pytest.mark.xfail(strict=True, reason="one-magnon neighbour transfer on the effective chain saturates near 0.465")
def test_10b_optimized_short_distance_threshold(optimized):
    f = optimized[1].f_tilde
    record(10, f >= 0.95, f"f~_m(r=1) = {f:.4f} at (u, v, dw) = "
           + "(" + ", ".join(f"{x:.3g}" for x in optimized[1].x) + ") (>= 0.95)")


def test_11_high_energy_structure():
    lat2, lat3 = SpinLattice(3, 2), SpinLattice(3, 3)
    D_pi, eps_pi = zip(*(high_energy_point(lat2, REF, RungInput(0.0, 0.0, "xi_L2", b=b, theta=np.pi), r=2)
                         for b in (1 / np.sqrt(2), -1 / np.sqrt(2))))
    D_099, _ = high_energy_point(lat2, REF, RungInput(0.1, 0.0, "xi_L2", b=1 / np.sqrt(2), theta=0.0), with_eps=False)
    D_3, _ = high_energy_point(
        lat3, REF, RungInput(0.0, 0.0, "w_class_L3", b1=1 / np.sqrt(6), b2=2 / np.sqrt(6), theta1=np.pi, theta2=0.0),
        with_eps=False,
    )
    # 1/sqrt(2) and exp(i pi) are not representable, so "exactly zero" means zero up to
    # the square of the input rounding error
    exact = 1e-30
    ok = max(D_pi) <= exact and max(eps_pi) <= 1e-6 and abs(D_099 - 0.99) <= 1e-12 and D_3 <= exact
    record(11, ok, f"D(+-1/sqrt2, pi) = {max(D_pi):.1e}, eps = {max(eps_pi):.1e}, "
           f"D(a1=0.1) = {D_099:.12f}, D_L3 = {D_3:.1e}")


def test_12a_ggm_values():
    pair2, pair3 = find_critical_field(2, "open"), find_critical_field(3, "open")
    g1 = ggm(prepare_rung_input(pair2, RungInput(1.0)))
    g_bell = ggm(prepare_rung_input(pair2, RungInput(0.0)))
    g3 = ggm(prepare_rung_input(pair3, RungInput(0.0)))
    ok = abs(g1) <= 1e-12 and abs(g_bell - 0.5) <= 1e-12 and abs(g3 - 1 / 6) <= 1e-12
    record(12, ok, f"G(a1=1) = {g1:.1e}, G(Bell) = {g_bell:.12f}, G(L=3, a1=0) = {g3:.12f}")


@pytest.mark.xfail(strict=True, reason="open-rung GGM keeps shrinking with L; L=5 and L=8 differ by about 0.029")
def test_12b_ggm_open_L_invariance():
    curves = {L: ggm_curve(L, "open")["G"] for L in range(5, 9)}
    dev = max(float(np.max(np.abs(curves[a] - curves[b]))) for a, b in itertools.combinations(curves, 2))
    record(12, dev <= 0.02, f"max pairwise deviation of open L=5..8 curves = {dev:.4f} (<= 0.02)")


def test_13_cli_determinism(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("lattice: {N: 6, L: 2}\nhaar: {n: 500}\ntransfer: {r: 3}\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    codes = [main(["haar-average", str(cfg), "--seed", str(SEED), "-o", str(p)]) for p in (a, b)]
    same = codes == [0, 0] and a.read_bytes() == b.read_bytes()
    record(13, same, f"two runs byte-identical: {same} ({len(a.read_bytes())} bytes)")
