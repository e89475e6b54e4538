import numpy as np
import pytest

from colltomo import linalg, quantum
from colltomo.errors import DimensionError, TomographyError

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def test_gell_mann_qubit_matches_paulis():
    b = quantum.gell_mann_basis(2)
    assert np.allclose(b[0], np.eye(2) / np.sqrt(2))
    assert np.allclose(b[1], SX / np.sqrt(2))
    assert np.allclose(b[2], SY / np.sqrt(2))
    assert np.allclose(b[3], SZ / np.sqrt(2))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_gell_mann_orthonormal_and_traceless(d):
    b = quantum.gell_mann_basis(d)
    gram = np.array(
        [[np.trace(x.conj().T @ y) for y in b.elements] for x in b.elements]
    )
    assert np.linalg.norm(gram - np.eye(d * d)) < 1e-12
    assert np.allclose(b[0], np.eye(d) / np.sqrt(d))
    for e in b.elements[1:]:
        assert abs(np.trace(e)) < 1e-12
        assert np.linalg.norm(e - e.conj().T) < 1e-12


def test_gell_mann_rejects_d1():
    with pytest.raises(DimensionError):
        quantum.gell_mann_basis(1)


def test_parameterize_examples():
    b = quantum.gell_mann_basis(2)
    assert np.allclose(quantum.parameterize(np.eye(2) / 2, b), [1 / np.sqrt(2), 0, 0, 0])
    ket0 = np.diag([1.0, 0.0]).astype(complex)
    assert np.allclose(quantum.parameterize(ket0, b), [1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)])


def test_parameterize_roundtrip():
    rng = np.random.default_rng(0)
    b = quantum.gell_mann_basis(3)
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    h = (a + a.conj().T) / 2
    theta = quantum.parameterize(h, b)
    assert np.linalg.norm(quantum.deparameterize(theta, b) - h) < 1e-12


def test_deparameterize_trace():
    rng = np.random.default_rng(1)
    b = quantum.gell_mann_basis(3)
    theta = rng.standard_normal(9)
    m = quantum.deparameterize(theta, b)
    assert abs(np.trace(m) - np.sqrt(3) * theta[0]) < 1e-12
    assert np.allclose(quantum.deparameterize(np.zeros(9), b), np.zeros((3, 3)))


def test_product_basis_coefficients_match_flat():
    rng = np.random.default_rng(2)
    b2 = quantum.gell_mann_basis(2)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h = (a + a.conj().T) / 2
    coeffs = quantum.product_basis_coefficients(h, b2, b2)
    direct = np.array(
        [
            np.trace(np.kron(bi, bj).conj().T @ h).real
            for bi in b2.elements
            for bj in b2.elements
        ]
    )
    assert np.linalg.norm(coeffs - direct) < 1e-12


def test_mub_completeness_and_unbiasedness():
    states, settings = quantum.mub_states_and_measurements()
    assert len(states) == 20 and len(settings) == 5
    for povm in settings:
        assert np.linalg.norm(sum(povm.elements) - np.eye(4)) < 1e-12
    # basis A is the computational basis
    for i in range(4):
        e = np.zeros((4, 4))
        e[i, i] = 1
        assert np.linalg.norm(settings[0][i] - e) < 1e-12
    # |<psi_m^X | psi_n^Y>|^2 = 1/4 across different bases
    vecs = []
    for povm in settings:
        vecs.append([])
        for el in povm.elements:
            vals, vv = linalg.hermitian_eig(el)
            vecs[-1].append(vv[:, 0])
    for x in range(5):
        for y in range(x + 1, 5):
            for vm in vecs[x]:
                for vn in vecs[y]:
                    assert abs(abs(np.vdot(vm, vn)) ** 2 - 0.25) < 1e-12


def test_sic_qubit():
    povm = quantum.sic_qubit()
    assert np.linalg.norm(sum(povm.elements) - np.eye(2)) < 1e-12
    vs = quantum.sic_qubit_vectors()
    for l in range(4):
        for k in range(4):
            expect = (2 * (l == k) + 1) / 3
            assert abs(abs(np.vdot(vs[l], vs[k])) ** 2 - expect) < 1e-12
    for e in povm.elements:
        vals = np.linalg.eigvalsh(e)
        assert abs(np.trace(e) - 0.5) < 1e-12
        assert np.sum(vals > 1e-12) == 1


def test_collective_two_copy():
    povm = quantum.collective_two_copy_povm()
    assert len(povm) == 5
    assert np.abs(sum(povm.elements) - np.eye(4)).max() < 1e-12
    p5 = povm[4]
    vals = np.linalg.eigvalsh(p5)
    assert abs(np.trace(p5) - 1) < 1e-12
    assert np.sum(vals > 1e-12) == 1


def test_collective_two_copy_singlet_probability():
    # Tr(P5 (rho kron rho)) = 1/4 - sum_i theta_i^2 / 2
    rng = np.random.default_rng(3)
    povm = quantum.collective_two_copy_povm()
    basis = quantum.gell_mann_basis(2)
    for _ in range(10):
        rho = quantum.random_state(2, [0.7, 0.3], rng).matrix
        theta = quantum.parameterize(rho, basis)
        lhs = np.trace(povm[4] @ np.kron(rho, rho)).real
        rhs = 0.25 - np.sum(theta[1:] ** 2) / 2
        assert abs(lhs - rhs) < 1e-12


def test_collective_three_copy():
    povm = quantum.collective_three_copy_povm()
    assert len(povm) == 7
    assert np.abs(sum(povm.elements) - np.eye(8)).max() < 1e-12
    assert np.linalg.eigvalsh(povm[6]).min() > -1e-12
    assert abs(np.trace(povm[0]) - 2 / 3) < 1e-12


def test_bit_phase_flip_identity_limit():
    x = quantum.bit_phase_flip(1.0)
    v = linalg.vec(np.eye(2))
    assert np.linalg.norm(x.matrix - np.outer(v, v.conj())) < 1e-12


def test_bit_phase_flip_pure_flip():
    x = quantum.bit_phase_flip(0.0)
    rng = np.random.default_rng(4)
    rho = quantum.random_state(2, [0.6, 0.4], rng).matrix
    out = quantum.apply_process(x.matrix, rho)
    assert np.linalg.norm(out - SY @ rho @ SY) < 1e-12


def test_bit_phase_flip_on_ground_state():
    x = quantum.bit_phase_flip(0.8)
    rho = np.diag([1.0, 0.0]).astype(complex)
    out = quantum.apply_process(x.matrix, rho)
    assert np.linalg.norm(out - np.diag([0.8, 0.2])) < 1e-12
    assert abs(np.trace(x.matrix) - 2) < 1e-12
    assert np.sum(np.linalg.eigvalsh(x.matrix) > 1e-12) <= 2


def test_process_matrix_agrees_with_kraus_sum():
    rng = np.random.default_rng(5)
    for p in [0.3, 0.8]:
        x = quantum.bit_phase_flip(p)
        sup = quantum.process_superoperator(x.matrix)
        for _ in range(5):
            rho = quantum.random_state(2, [0.9, 0.1], rng).matrix
            sy = SY
            kraus_out = p * rho + (1 - p) * sy @ rho @ sy
            assert np.linalg.norm(quantum.apply_process(x.matrix, rho) - kraus_out) < 1e-12
            assert np.linalg.norm(linalg.unvec(sup @ linalg.vec(rho), 2) - kraus_out) < 1e-12


def test_bit_phase_flip_range():
    with pytest.raises(ValueError):
        quantum.bit_phase_flip(1.5)


def test_haar_unitary_properties():
    u = quantum.haar_random_unitary(3, seed=7)
    assert np.linalg.norm(u.conj().T @ u - np.eye(3)) < 1e-12
    assert np.allclose(u, quantum.haar_random_unitary(3, seed=7))


def test_haar_moment():
    rng = np.random.default_rng(8)
    d = 2
    n = 10_000
    vals = np.empty(n)
    for i in range(n):
        vals[i] = abs(quantum.haar_random_unitary(d, rng)[0, 0]) ** 2
    se = vals.std(ddof=1) / np.sqrt(n)
    assert abs(vals.mean() - 1 / d) < 3 * se


def test_random_state():
    s = quantum.random_state(2, [1.0, 0.0], seed=9)
    assert abs(quantum.purity(s) - 1) < 1e-12
    s = quantum.random_state(2, [0.9, 0.1], seed=9)
    assert abs(quantum.purity(s) - 0.82) < 1e-12
    s = quantum.random_state(3, [1 / 3] * 3, seed=9)
    assert np.linalg.norm(s.matrix - np.eye(3) / 3) < 1e-12
    with pytest.raises(ValueError):
        quantum.random_state(2, [0.5, 0.6], seed=9)


def test_purity_values():
    mixed = quantum.QuantumState(2, np.eye(2) / 2)
    assert abs(quantum.purity(mixed) - 0.5) < 1e-12
    basis = quantum.gell_mann_basis(2)
    rho = quantum.deparameterize(np.array([1 / np.sqrt(2), 0.3, 0.1, 0.2]), basis)
    s = quantum.QuantumState(2, rho)
    assert abs(quantum.purity(s) - 0.64) < 1e-12


def test_state_type_validation():
    with pytest.raises(TomographyError):
        quantum.QuantumState(2, np.diag([1.2, -0.2]).astype(complex))
    with pytest.raises(TomographyError):
        quantum.QuantumState(2, np.array([[0.5, 0.5], [0.1, 0.5]], dtype=complex))


def test_povm_type_validation():
    with pytest.raises(TomographyError):
        quantum.Povm(2, [np.diag([1.1, 0.0]), np.diag([-0.1, 1.0])])


def test_born_probabilities_normalized_per_setting():
    rng = np.random.default_rng(10)
    _, settings = quantum.mub_states_and_measurements()
    rho = quantum.random_state(4, [0.4, 0.3, 0.2, 0.1], rng).matrix
    for povm in settings:
        probs = np.array([np.trace(e @ rho).real for e in povm.elements])
        assert probs.min() > -1e-12
        assert abs(probs.sum() - 1) < 1e-12


def test_json_roundtrips():
    rng = np.random.default_rng(11)
    s = quantum.random_state(3, [0.5, 0.3, 0.2], rng)
    s2 = quantum.state_from_json(quantum.state_to_json(s))
    assert np.allclose(s.matrix, s2.matrix)
    p = quantum.sic_qubit()
    p2 = quantum.povm_from_json(quantum.povm_to_json(p))
    for a, b in zip(p.elements, p2.elements):
        assert np.allclose(a, b)
    x = quantum.bit_phase_flip(0.4)
    x2 = quantum.process_from_json(quantum.process_to_json(x))
    assert np.allclose(x.matrix, x2.matrix)
    assert x2.trace_preserving
