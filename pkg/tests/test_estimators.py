import itertools

import numpy as np
import pytest

from colltomo import estimators, forward, linalg, quantum
from colltomo.errors import (
    DegenerateInputError,
    GaugeAmbiguityError,
    RankDeficientError,
)
from colltomo.estimators import EstimatorConfig


@pytest.fixture(scope="module")
def b2():
    return quantum.gell_mann_basis(2)


@pytest.fixture(scope="module")
def mub_model(b2):
    _, settings = quantum.mub_states_and_measurements()
    return forward.build_phi(settings, b2, b2)


def exact_qst_data(model, r1, r2):
    return np.concatenate(forward.born_probabilities(model, r1, r2))


# ---------------------------------------------------------------------------
# linear inversion


def test_plain_ls_exact_recovery(mub_model, b2):
    rng = np.random.default_rng(0)
    r1 = quantum.random_state(2, [0.9, 0.1], rng)
    r2 = quantum.random_state(2, [0.8, 0.2], rng)
    y = exact_qst_data(mub_model, r1, r2)
    x = estimators.linear_inversion(mub_model, y, EstimatorConfig(inversion="plain_ls"))
    t = np.kron(
        quantum.parameterize(r1.matrix, b2), quantum.parameterize(r2.matrix, b2)
    )
    assert np.linalg.norm(x - t) < 1e-10


def test_trace_constrained_fixes_first_coordinate(mub_model):
    rng = np.random.default_rng(1)
    y = np.abs(rng.standard_normal(20))
    x = estimators.linear_inversion(mub_model, y, EstimatorConfig())
    assert abs(x[0] - 0.5) < 1e-14


def test_regularized_shrinks_to_zero(mub_model):
    y = np.full(20, 0.25)
    cfg = EstimatorConfig(inversion="regularized", regularization_scale=1e12)
    x = estimators.linear_inversion(mub_model, y, cfg)
    assert np.linalg.norm(x) < 1e-6


def test_mp_inverse_matches_pinv_oracle(b2):
    model = forward.build_phi(quantum.collective_two_copy_povm(), b2, b2)
    rng = np.random.default_rng(2)
    y = rng.random(5)
    x = estimators.linear_inversion(model, y, EstimatorConfig(inversion="mp_inverse"))
    a = model.design
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    pinv = vt.T @ np.diag(1 / s) @ u.T
    assert np.linalg.norm(x - pinv @ y) < 1e-10


def test_plain_ls_rank_error(b2):
    model = forward.build_phi(quantum.collective_two_copy_povm(), b2, b2)
    with pytest.raises(RankDeficientError):
        estimators.linear_inversion(model, np.zeros(5), EstimatorConfig(inversion="plain_ls"))


# ---------------------------------------------------------------------------
# Kronecker decoupling


def test_nearest_kron_exact_product():
    rng = np.random.default_rng(3)
    r1 = quantum.random_state(2, [0.7, 0.3], rng).matrix
    r2 = quantum.random_state(3, [0.5, 0.3, 0.2], rng).matrix
    left, right, resid = estimators.nearest_kron_factor(np.kron(r1, r2), 2, 3)
    assert resid < 1e-12
    assert np.linalg.norm(left - r1) < 1e-10
    assert np.linalg.norm(right - r2) < 1e-10


def test_nearest_kron_perturbation():
    rng = np.random.default_rng(4)
    r1 = quantum.random_state(2, [0.7, 0.3], rng).matrix
    r2 = quantum.random_state(2, [0.6, 0.4], rng).matrix
    noise = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    noise *= 1e-3 / np.linalg.norm(noise)
    left, right, _ = estimators.nearest_kron_factor(np.kron(r1, r2) + noise, 2, 2)
    assert np.linalg.norm(left - r1) < 5e-3
    assert np.linalg.norm(right - r2) < 5e-3


def test_nearest_kron_identity_gauge():
    left, right, _ = estimators.nearest_kron_factor(np.eye(4), 2, 2)
    assert abs(np.trace(left) - 1) < 1e-12
    assert np.linalg.norm(np.kron(left, right) - np.eye(4)) < 1e-12


def test_gauge_invariance_of_normalization():
    rng = np.random.default_rng(5)
    r1 = quantum.random_state(2, [0.7, 0.3], rng).matrix
    r2 = quantum.random_state(2, [0.6, 0.4], rng).matrix
    base = estimators._normalize_pair(r1, r2, "unit_trace_left")
    for alpha in [0.5, 2.0, -1.0]:
        l2, rr2 = estimators._normalize_pair(alpha * r1, r2 / alpha, "unit_trace_left")
        assert np.linalg.norm(l2 - base[0]) < 1e-10
        assert np.linalg.norm(rr2 - base[1]) < 1e-10


def test_marginal_factor():
    rng = np.random.default_rng(6)
    r1 = quantum.random_state(2, [0.7, 0.3], rng).matrix
    r2 = quantum.random_state(2, [0.6, 0.4], rng).matrix
    l, r = estimators.marginal_factor(np.kron(r1, r2), 2, 2)
    assert np.linalg.norm(l - r1) < 1e-12
    assert np.linalg.norm(r - r2) < 1e-12
    l, r = estimators.marginal_factor(np.eye(4) / 4)
    assert np.linalg.norm(l - np.eye(2) / 2) < 1e-12


def test_marginal_residual_dominates_svd():
    rng = np.random.default_rng(7)
    m = quantum.random_state(4, [0.4, 0.3, 0.2, 0.1], rng).matrix
    l, r = estimators.marginal_factor(m, 2, 2)
    marg_resid = np.linalg.norm(m - np.kron(l, r))
    _, _, svd_resid = estimators.nearest_kron_factor(m, 2, 2)
    assert svd_resid <= marg_resid + 1e-12


# ---------------------------------------------------------------------------
# projections


def brute_force_simplex(v):
    best, best_d = None, np.inf
    n = len(v)
    for mask in range(1, 2**n):
        support = [i for i in range(n) if mask >> i & 1]
        shift = (sum(v[i] for i in support) - 1) / len(support)
        cand = np.zeros(n)
        ok = True
        for i in support:
            cand[i] = v[i] - shift
            if cand[i] < -1e-12:
                ok = False
        if not ok:
            continue
        d = np.sum((cand - v) ** 2)
        if d < best_d:
            best, best_d = cand, d
    return best


def test_simplex_projection_examples():
    assert np.allclose(estimators.simplex_projection([1.2, -0.2]), [1.0, 0.0])
    assert np.allclose(estimators.simplex_projection([0.6, 0.6, -0.2]), [0.5, 0.5, 0.0])


def test_simplex_projection_against_enumeration():
    rng = np.random.default_rng(8)
    for n in (3, 4):
        for _ in range(50):
            v = rng.standard_normal(n)
            assert np.allclose(
                estimators.simplex_projection(v), brute_force_simplex(v), atol=1e-10
            )


def test_project_state_examples():
    s = estimators.project_state(np.diag([1.2, -0.2]).astype(complex))
    assert np.allclose(s.matrix, np.diag([1.0, 0.0]))
    s = estimators.project_state(np.diag([0.6, 0.6, -0.2]).astype(complex))
    assert np.allclose(s.matrix, np.diag([0.5, 0.5, 0.0]))


def test_project_state_fixed_point_and_idempotence():
    rng = np.random.default_rng(9)
    rho = quantum.random_state(3, [0.5, 0.3, 0.2], rng).matrix
    assert np.linalg.norm(estimators.project_state(rho).matrix - rho) < 1e-12
    a = rng.standard_normal((4, 4))
    h = (a + a.T) / 2
    once = estimators.project_state(h).matrix
    twice = estimators.project_state(once).matrix
    assert np.linalg.norm(once - twice) < 1e-10


def test_project_povm_fixed_point():
    povm = quantum.sic_qubit()
    out = estimators.project_povm(povm.elements)
    for a, b in zip(out.elements, povm.elements):
        assert np.linalg.norm(a - b) < 1e-12


def test_project_povm_corrects_invalid():
    out = estimators.project_povm(
        [np.diag([1.1, 0.0]).astype(complex), np.diag([-0.1, 1.0]).astype(complex)]
    )
    total = sum(out.elements)
    assert np.linalg.norm(total - np.eye(2)) < 1e-9
    for e in out.elements:
        assert np.linalg.eigvalsh(e).min() > -1e-9


def test_project_povm_single_element():
    out = estimators.project_povm([0.9 * np.eye(2, dtype=complex)])
    assert np.linalg.norm(out.elements[0] - np.eye(2)) < 1e-12


def test_project_process_fixed_point():
    x = quantum.bit_phase_flip(0.8)
    out = estimators.project_process(x.matrix, tp=True)
    assert np.linalg.norm(out.matrix - x.matrix) < 1e-12


def test_project_process_corrects():
    v = linalg.vec(np.eye(2))
    bad = np.outer(v, v.conj()) + 0.1 * np.eye(4)
    out = estimators.project_process(bad, tp=True)
    pt = linalg.partial_trace(out.matrix, 2, 2, "first")
    assert np.linalg.norm(pt - np.eye(2)) < 1e-9
    assert np.linalg.eigvalsh(out.matrix).min() > -1e-9


def test_tp_lift_partial_trace_algebra():
    rng = np.random.default_rng(10)
    x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    x = (x + x.conj().T) / 2
    delta = rng.standard_normal((2, 2))
    delta = (delta + delta.T) / 2
    lifted = x + estimators._tp_lift(2, delta)
    pt = linalg.partial_trace(lifted, 2, 2, "first")
    assert np.linalg.norm(pt - (linalg.partial_trace(x, 2, 2, "first") + delta)) < 1e-12


def test_project_process_nontp():
    rng = np.random.default_rng(11)
    x = 0.9 * quantum.bit_phase_flip(0.8).matrix
    out = estimators.project_process(x, tp=False)
    assert np.linalg.norm(out.matrix - x) < 1e-12  # already feasible
    bad = 1.3 * quantum.bit_phase_flip(0.8).matrix
    out = estimators.project_process(bad, tp=False)
    gap = linalg.partial_trace(out.matrix, 2, 2, "first") - np.eye(2)
    assert np.linalg.eigvalsh(gap).max() < 1e-9


# ---------------------------------------------------------------------------
# QST end to end


def test_estimate_qst_distinct_exact(mub_model):
    rng = np.random.default_rng(12)
    r1 = quantum.random_state(2, [0.9, 0.1], rng)
    r2 = quantum.random_state(2, [0.8, 0.2], rng)
    y = exact_qst_data(mub_model, r1, r2)
    res = estimators.estimate_qst(mub_model, y, mode="distinct")
    assert np.linalg.norm(res.estimates[0].matrix - r1.matrix) < 1e-8
    assert np.linalg.norm(res.estimates[1].matrix - r2.matrix) < 1e-8


def test_estimate_qst_identical_exact(mub_model):
    rng = np.random.default_rng(13)
    r0 = quantum.random_state(2, [0.9, 0.1], rng)
    y = exact_qst_data(mub_model, r0, r0)
    res = estimators.estimate_qst(mub_model, y, mode="identical")
    assert len(res.estimates) == 1
    assert np.linalg.norm(res.estimates[0].matrix - r0.matrix) < 1e-8


def test_estimate_qst_marginal_mode(mub_model):
    rng = np.random.default_rng(14)
    r0 = quantum.random_state(2, [0.9, 0.1], rng)
    y = exact_qst_data(mub_model, r0, r0)
    res = estimators.estimate_qst(mub_model, y, mode="identical", factorization="marginal")
    assert np.linalg.norm(res.estimates[0].matrix - r0.matrix) < 1e-8


def test_estimate_qst_sampled_improves_with_n(mub_model):
    rng = np.random.default_rng(15)
    r0 = quantum.random_state(2, [0.9, 0.1], rng)
    probs = forward.born_probabilities(mub_model, r0, r0)
    errs = []
    for shots in (500, 50_000):
        recs = forward.sample_counts(probs, shots, rng)
        y = np.concatenate(forward.frequencies(recs))
        res = estimators.estimate_qst(mub_model, y, mode="identical")
        errs.append(np.linalg.norm(res.estimates[0].matrix - r0.matrix) ** 2)
    assert errs[1] < errs[0]


# ---------------------------------------------------------------------------
# QDT end to end


def qdt_blocks(model, povm1, povm2):
    probs = forward.born_probabilities(model, povm1, povm2)
    m = len(probs)
    nl, nk = len(povm1), len(povm2)
    return np.array(probs).reshape(m, nl, nk)


def vi_detector(seed=100):
    rng = np.random.default_rng(seed)
    u1 = quantum.haar_random_unitary(2, rng)
    u2 = quantum.haar_random_unitary(2, rng)
    p1 = u1 @ np.diag([0.4, 0.1]).astype(complex) @ u1.conj().T
    p2 = u2 @ np.diag([0.5, 0.1]).astype(complex) @ u2.conj().T
    p3 = np.eye(2) - p1 - p2
    assert np.linalg.eigvalsh(p3).min() > 0
    return quantum.Povm(2, [p1, p2, p3])


def test_estimate_qdt_distinct_exact(b2):
    rng = np.random.default_rng(16)
    probes = [quantum.random_state(4, [0.4, 0.3, 0.2, 0.1], rng) for _ in range(20)]
    model = forward.build_theta(probes, b2, b2)
    povm_p = vi_detector(101)
    povm_q = quantum.sic_qubit()
    y = qdt_blocks(model, povm_p, povm_q)
    res = estimators.estimate_qdt(model, y, mode="distinct")
    for est, true in zip(res.estimates[0].elements, povm_p.elements):
        assert np.linalg.norm(est - true) < 1e-8
    for est, true in zip(res.estimates[1].elements, povm_q.elements):
        assert np.linalg.norm(est - true) < 1e-8


def test_estimate_qdt_identical_exact(b2):
    rng = np.random.default_rng(17)
    probes = [quantum.random_state(4, [0.4, 0.3, 0.2, 0.1], rng) for _ in range(20)]
    model = forward.build_theta(probes, b2, b2)
    povm = vi_detector(102)
    y = qdt_blocks(model, povm, povm)
    res = estimators.estimate_qdt(model, y, mode="identical")
    assert len(res.estimates) == 1
    for est, true in zip(res.estimates[0].elements, povm.elements):
        assert np.linalg.norm(est - true) < 1e-8


# ---------------------------------------------------------------------------
# QPT end to end


def qpt_exact_y(probes, x1, x2):
    mix = linalg.kron_mixing_matrix(2, 2)
    joint = mix @ np.kron(x1, x2) @ mix.T
    return np.concatenate(
        [linalg.vec(quantum.apply_process(joint, s.matrix)) for s in probes]
    )


@pytest.fixture(scope="module")
def qpt_setup():
    rng = np.random.default_rng(18)
    probes = [quantum.random_state(4, [0.4, 0.3, 0.2, 0.1], rng) for _ in range(16)]
    model = forward.build_collective_process_model(probes, 2, 2)
    return probes, model


def test_estimate_qpt_identity_pair(qpt_setup):
    probes, model = qpt_setup
    v = linalg.vec(np.eye(2))
    x_id = np.outer(v, v.conj())
    y = qpt_exact_y(probes, x_id, x_id)
    res = estimators.estimate_qpt(model, y, mode="distinct", tp=(True, True))
    assert np.linalg.norm(res.estimates[0].matrix - x_id) < 1e-8
    assert np.linalg.norm(res.estimates[1].matrix - x_id) < 1e-8


def test_estimate_qpt_bit_phase_flip_pair(qpt_setup):
    probes, model = qpt_setup
    x1 = quantum.bit_phase_flip(0.8).matrix
    x2 = quantum.bit_phase_flip(0.7).matrix
    y = qpt_exact_y(probes, x1, x2)
    res = estimators.estimate_qpt(model, y, mode="distinct", tp=(True, True))
    assert np.linalg.norm(res.estimates[0].matrix - x1) < 1e-8
    assert np.linalg.norm(res.estimates[1].matrix - x2) < 1e-8


def test_estimate_qpt_identical_exact(qpt_setup):
    probes, model = qpt_setup
    x0 = quantum.bit_phase_flip(0.8).matrix
    y = qpt_exact_y(probes, x0, x0)
    res = estimators.estimate_qpt(model, y, mode="identical", tp=(True, True))
    assert len(res.estimates) == 1
    assert np.linalg.norm(res.estimates[0].matrix - x0) < 1e-8


def test_estimate_qpt_nontp_with_alpha(qpt_setup):
    probes, model = qpt_setup
    x1 = 0.9 * quantum.bit_phase_flip(0.8).matrix
    x2 = 0.9 * quantum.bit_phase_flip(0.7).matrix
    y = qpt_exact_y(probes, x1, x2)
    res = estimators.estimate_qpt(
        model, y, mode="distinct", tp=(False, False), alpha1=0.9
    )
    assert np.linalg.norm(res.estimates[0].matrix - x1) < 1e-8
    assert np.linalg.norm(res.estimates[1].matrix - x2) < 1e-8


def test_estimate_qpt_nontp_needs_alpha(qpt_setup):
    probes, model = qpt_setup
    x1 = 0.9 * quantum.bit_phase_flip(0.8).matrix
    y = qpt_exact_y(probes, x1, x1)
    with pytest.raises(GaugeAmbiguityError):
        estimators.estimate_qpt(model, y, mode="distinct", tp=(False, False))


def test_estimate_qpt_identical_nontp(qpt_setup):
    probes, model = qpt_setup
    x0 = 0.85 * quantum.bit_phase_flip(0.8).matrix
    y = qpt_exact_y(probes, x0, x0)
    res = estimators.estimate_qpt(model, y, mode="identical", tp=(False, False))
    assert np.linalg.norm(res.estimates[0].matrix - x0) < 1e-8


# ---------------------------------------------------------------------------
# n-copy, pure, unitary, purity


def test_n_copy_decouple_exact():
    rng = np.random.default_rng(19)
    rs = [quantum.random_state(2, [0.8, 0.2], rng).matrix for _ in range(3)]
    m = np.kron(np.kron(rs[0], rs[1]), rs[2])
    factors = estimators.n_copy_decouple(m, [2, 2, 2])
    for f, r in zip(factors, rs):
        assert np.linalg.norm(f - r) < 1e-10


def test_n_copy_reduces_to_pairwise():
    rng = np.random.default_rng(20)
    r1 = quantum.random_state(2, [0.7, 0.3], rng).matrix
    r2 = quantum.random_state(2, [0.6, 0.4], rng).matrix
    [f1, f2] = estimators.n_copy_decouple(np.kron(r1, r2), [2, 2])
    g1, g2, _ = estimators.nearest_kron_factor(np.kron(r1, r2), 2, 2)
    assert np.linalg.norm(f1 - g1) < 1e-12
    assert np.linalg.norm(f2 - g2) < 1e-12


def test_n_copy_identical_average():
    rng = np.random.default_rng(21)
    r0 = quantum.random_state(2, [0.9, 0.1], rng).matrix
    m = np.kron(np.kron(r0, r0), r0)
    factors = estimators.n_copy_decouple(m, [2, 2, 2])
    avg = sum(factors) / 3
    assert np.linalg.norm(avg - r0) < 1e-10


def test_truncate_pure():
    s, flag = estimators.truncate_pure(quantum.QuantumState(2, np.diag([0.9, 0.1])))
    assert np.allclose(s.matrix, np.diag([1.0, 0.0]))
    assert not flag
    pure = quantum.random_state(2, [1.0, 0.0], seed=22)
    s, _ = estimators.truncate_pure(pure)
    assert np.linalg.norm(s.matrix - pure.matrix) < 1e-12


def test_truncate_pure_is_nearest():
    rng = np.random.default_rng(23)
    rho = quantum.random_state(3, [0.5, 0.3, 0.2], rng)
    best, _ = estimators.truncate_pure(rho)
    base = np.linalg.norm(rho.matrix - best.matrix)
    for _ in range(1000):
        v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        v /= np.linalg.norm(v)
        assert base <= np.linalg.norm(rho.matrix - np.outer(v, v.conj())) + 1e-10


def min_phase_distance(a, b):
    z = np.trace(a.conj().T @ b)
    phase = z / abs(z) if abs(z) > 0 else 1.0
    return np.linalg.norm(b - phase * a)


def test_extract_unitary_identity():
    v = linalg.vec(np.eye(2))
    g = estimators.extract_unitary(np.outer(v, v.conj()))
    assert min_phase_distance(g, np.eye(2)) < 1e-10


def test_extract_unitary_haar():
    rng = np.random.default_rng(24)
    g_true = quantum.haar_random_unitary(2, rng)
    v = linalg.vec(g_true)
    x = np.outer(v, v.conj())
    g = estimators.extract_unitary(x)
    assert min_phase_distance(g, g_true) < 1e-10
    # perturbed rank-1
    noise = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    noise = (noise + noise.conj().T) / 2
    noise *= 1e-3 / np.linalg.norm(noise)
    g = estimators.extract_unitary(x + noise)
    assert min_phase_distance(g, g_true) < 5e-3


def purity_freqs(theta_bloch):
    povm = quantum.collective_two_copy_povm()
    basis = quantum.gell_mann_basis(2)
    theta = np.concatenate([[1 / np.sqrt(2)], theta_bloch])
    rho = quantum.deparameterize(theta, basis)
    rr = np.kron(rho, rho)
    return np.array([np.trace(e @ rr).real for e in povm.elements])


def test_purity_estimator_exact_recovery():
    bloch = np.array([0.5, 0.0, 0.5])  # the pure state (1/sqrt2) sx + (1/sqrt2) sz over 2
    freqs = purity_freqs(bloch)
    s = estimators.estimate_qubit_with_purity(freqs)
    basis = quantum.gell_mann_basis(2)
    expect = quantum.deparameterize(np.concatenate([[1 / np.sqrt(2)], bloch]), basis)
    assert np.linalg.norm(s.matrix - expect) < 1e-10


def test_purity_estimator_maximally_mixed():
    freqs = purity_freqs(np.zeros(3))
    assert abs(freqs[4] - 0.25) < 1e-12
    s = estimators.estimate_qubit_with_purity(freqs)
    assert np.linalg.norm(s.matrix - np.eye(2) / 2) < 1e-10


def test_purity_estimator_purity_identity():
    rng = np.random.default_rng(25)
    # purity of the output matches 1 - 2*p5 exactly (Lagrange identity)
    for _ in range(5):
        freqs = rng.random(5)
        freqs /= freqs.sum()
        if 0.5 - 2 * freqs[4] <= 0:
            continue
        s = estimators.estimate_qubit_with_purity(freqs)
        assert abs(quantum.purity(s) - (1 - 2 * freqs[4])) < 1e-12


def test_purity_estimator_clamp():
    freqs = np.array([0.2, 0.2, 0.2, 0.1, 0.3])  # target purity below 1/2
    s = estimators.estimate_qubit_with_purity(freqs)
    assert np.linalg.norm(s.matrix - np.eye(2) / 2) < 1e-12


def test_purity_estimator_mse_against_bound():
    rng = np.random.default_rng(26)
    bloch = np.array([0.5, 0.0, 0.5])
    probs = purity_freqs(bloch)
    basis = quantum.gell_mann_basis(2)
    truth = quantum.deparameterize(np.concatenate([[1 / np.sqrt(2)], bloch]), basis)
    n_copies = 2048
    trials = 200
    mses = np.empty(trials)
    for t in range(trials):
        recs = forward.sample_counts([probs], n_copies // 2, rng)
        s = estimators.estimate_qubit_with_purity(recs[0].frequencies)
        mses[t] = np.linalg.norm(s.matrix - truth) ** 2
    assert mses.mean() <= 2 * (2 / n_copies)
