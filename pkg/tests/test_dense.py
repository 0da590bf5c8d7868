import math

import numpy as np
import pytest
from scipy import stats

from emlab.circuits import attach_noise, build_identity_circuit, build_mixing_circuit, build_parity_circuit
from emlab.dense import (
    apply_pauli,
    basis_probabilities,
    basis_state,
    bretagnolle_huber_bound,
    check_density_matrix,
    clifford_unitary,
    divergences,
    evolve,
    expectation,
    kl_divergence,
    load_density_matrix,
    maximally_mixed,
    pauli_coefficients,
    pauli_matrix,
    pure_state,
    purity,
    random_density_matrix,
    relative_entropy,
    sample_basis,
    sample_basis_counts,
    save_density_matrix,
    tv_distance,
    von_neumann_entropy,
)
from emlab.noise import DepolarizingSpec
from emlab.pauli import PauliString, PauliSum, sample_random_clifford


def test_purity_examples():
    assert purity(basis_state(3, 5)) == pytest.approx(1.0, abs=1e-15)
    assert purity(maximally_mixed(3)) == pytest.approx(1 / 8, abs=1e-15)
    assert purity(np.diag([0.95, 0.05])) == pytest.approx(0.905, abs=1e-15)


def test_basis_state_labels():
    assert np.array_equal(basis_state(2, "10"), basis_state(2, 2))
    assert basis_state(2, 2)[2, 2] == 1


def test_noiseless_evolution_keeps_purity():
    c = build_mixing_circuit(3, 4, seed=2)
    assert purity(evolve(basis_state(3, 1), c)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_identity_circuit_closed_form(n):
    p, D = 0.8, 3
    c = attach_noise(build_identity_circuit(n, D), DepolarizingSpec(p))
    assert purity(evolve(basis_state(n), c)) == pytest.approx(((1 + p ** (2 * D)) / 2) ** n, abs=1e-12)


def test_global_depolarizing_zero_gives_maximally_mixed():
    c = attach_noise(build_mixing_circuit(3, 2, seed=1), DepolarizingSpec(0.0, "global"))
    assert np.allclose(evolve(basis_state(3), c), maximally_mixed(3), atol=1e-15)


def test_evolution_preserves_density_matrix_invariants():
    rng = np.random.default_rng(0)
    for i in range(5):
        c = attach_noise(build_mixing_circuit(3, 3, seed=i), DepolarizingSpec(float(rng.uniform(-0.3, 1))))
        check_density_matrix(evolve(random_density_matrix(3, seed=i), c))


def test_check_density_matrix_rejects():
    with pytest.raises(ValueError):
        check_density_matrix(np.diag([0.6, 0.6]))
    with pytest.raises(ValueError):
        check_density_matrix(np.diag([1.2, -0.2]))
    with pytest.raises(ValueError):
        check_density_matrix(np.array([[0.5, 0.3], [0.1, 0.5]]))


def test_divergence_examples():
    rho = random_density_matrix(2, seed=4)
    r = divergences(rho, rho)
    assert abs(r.relative_entropy) < 1e-9 and abs(r.renyi[2.0]) < 1e-9 and abs(r.max_relative) < 1e-9
    psi = basis_state(3, 6)
    r = divergences(psi, maximally_mixed(3))
    assert r.relative_entropy == pytest.approx(3, abs=1e-12)
    assert r.renyi[2.0] == pytest.approx(3, abs=1e-12)
    assert r.max_relative == pytest.approx(3, abs=1e-12)


def test_support_violation_is_infinite():
    r = divergences(basis_state(1, 1), basis_state(1, 0))
    assert not r.support_ok
    assert math.isinf(r.relative_entropy) and math.isinf(r.max_relative)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_divergence_ordering_and_purity_bound(n):
    sigma = maximally_mixed(n)
    for i in range(100):
        rho = random_density_matrix(n, rank=1 + i % 2**n, seed=1000 * n + i)
        r = divergences(rho, sigma, alphas=(1.5, 2.0, 3.0))
        assert r.relative_entropy <= r.renyi[1.5] + 1e-9
        assert r.renyi[1.5] <= r.renyi[2.0] + 1e-9 <= r.renyi[3.0] + 2e-9
        assert r.renyi[3.0] <= r.max_relative + 1e-9
        assert relative_entropy(rho) <= n + math.log2(purity(rho)) + 1e-12
        assert r.relative_entropy == pytest.approx(relative_entropy(rho), abs=1e-9)
        assert r.renyi[2.0] == pytest.approx(n + math.log2(purity(rho)), abs=1e-9)


def test_relative_entropy_via_von_neumann():
    rho = random_density_matrix(3, seed=8)
    assert relative_entropy(rho) == pytest.approx(3 - von_neumann_entropy(rho), abs=1e-12)


def test_expectation_examples():
    n = 3
    assert expectation(basis_state(n), "ZII") == 1
    assert expectation(maximally_mixed(n), PauliSum.from_text("0.5*XYZ + 0.5*ZII")) == pytest.approx(0, abs=1e-15)
    for x in range(2**n):
        for i in range(n):
            bit = (x >> (n - 1 - i)) & 1
            Zi = PauliString.single(n, i, "Z")
            # Z|1> = -|1>: the sign is 1 - 2 x_i
            assert expectation(basis_state(n, x), Zi) == 1 - 2 * bit


def test_expectation_rejects_wrong_size():
    with pytest.raises(ValueError):
        expectation(basis_state(2), "ZZZ")


def test_sample_basis_examples():
    assert all(sample_basis(basis_state(3, 5), seed=s) == "101" for s in range(10))
    counts = sample_basis_counts(maximally_mixed(3), 100_000, seed=1)
    assert stats.chisquare(counts).pvalue > 1e-3
    assert sample_basis(basis_state(2, 1), seed=3) == sample_basis(basis_state(2, 1), seed=3)


def test_parity_state_support():
    s = "101"
    c = build_parity_circuit(s)
    probs = basis_probabilities(evolve(basis_state(4), c))
    for z in np.nonzero(probs > 1e-12)[0]:
        x, y = int(z) >> 1, int(z) & 1
        assert y == bin(x & 0b101).count("1") % 2
    for seed in range(50):
        out = sample_basis(evolve(basis_state(4), c), seed)
        x, y = int(out[:3], 2), int(out[3])
        assert y == bin(x & 0b101).count("1") % 2


def test_tv_distance_examples():
    P = np.array([0.25, 0.25, 0.5])
    assert tv_distance(P, P) == 0
    assert tv_distance([1, 0], [0, 1]) == 1
    assert tv_distance({"a": 1.0}, {"b": 1.0}) == 1
    with pytest.raises(ValueError):
        tv_distance([1, 0], [0, 0, 1])


def test_bretagnolle_huber_randomized():
    rng = np.random.default_rng(9)
    for _ in range(200):
        P, Q = rng.dirichlet(np.ones(6)), rng.dirichlet(np.ones(6))
        assert tv_distance(P, Q) <= bretagnolle_huber_bound(kl_divergence(P, Q)) + 1e-12
    assert bretagnolle_huber_bound(math.inf) == 1
    assert kl_divergence([0.5, 0.5], [1, 0]) == math.inf


def test_clifford_unitary_matches_tableau():
    T = sample_random_clifford(3, 11)
    U = clifford_unitary(T)
    assert np.allclose(U.conj().T @ U, np.eye(8))
    for q in range(3):
        for letter in "XZ":
            P = PauliString.single(3, q, letter)
            assert np.allclose(U @ pauli_matrix(P) @ U.conj().T, pauli_matrix(T.conjugate(P)))


def test_apply_pauli_matches_matrix():
    rng = np.random.default_rng(2)
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    for lab in ["XYZ", "-iZZI", "IYI"]:
        P = PauliString.from_label(lab)
        assert np.allclose(apply_pauli(P, v), pauli_matrix(P) @ v)


def test_pauli_coefficients():
    rho = random_density_matrix(2, seed=5)
    c = pauli_coefficients(rho)
    for x in range(4):
        for z in range(4):
            # X^x Z^z product form, not the Hermitian letter form
            P = pauli_matrix(PauliString(2, x, 0)) @ pauli_matrix(PauliString(2, 0, z))
            assert c[x, z] == pytest.approx(np.trace(P @ rho), abs=1e-12)


def test_density_matrix_file_round_trip(tmp_path):
    rho = random_density_matrix(3, seed=6)
    f = tmp_path / "rho.bin"
    save_density_matrix(f, rho)
    assert np.array_equal(load_density_matrix(f), rho)
    f.write_bytes(f.read_bytes()[:-16])
    with pytest.raises(ValueError):
        load_density_matrix(f)


def test_pure_state_normalises():
    rho = pure_state(np.array([1, 1j]))
    assert purity(rho) == pytest.approx(1)
    assert np.trace(rho) == pytest.approx(1)


def test_dense_limit():
    with pytest.raises(ValueError):
        basis_state(13)
