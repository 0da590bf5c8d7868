import math

import numpy as np
import pytest

from emlab.circuits import attach_noise, build_identity_circuit, build_mixing_circuit, build_parity_circuit
from emlab.dense import basis_probabilities, basis_state, evolve, expectation, maximally_mixed, pure_state
from emlab.mitigation import (
    MitigationResult,
    ObservableSet,
    certified_tv_from_kappa,
    hoeffding_shots,
    ideal_distribution,
    noiseless_expectation,
    noisy_expectation,
    pec_estimate,
    pec_exact_expectation,
    pec_inverse_representation,
    plan_median_of_means,
    richardson_coefficients,
    strong_check,
    virtual_distillation_estimate,
    weak_mitigate,
    zne_estimate,
)
from emlab.noise import DepolarizingSpec, amplitude_damping
from emlab.pauli import PauliSum, PauliString, conjugate


def surviving_observable(circuit, qubit=0):
    """Heisenberg image of ``Z_qubit``: its noiseless expectation on |0..0> is +-1."""
    return PauliSum.from_pauli(conjugate(circuit.total_tableau(), PauliString.single(circuit.n, qubit, "Z")))


def test_inverse_representation_frozen():
    rep = pec_inverse_representation(0.9)
    assert rep.gamma == pytest.approx(2.1 / 1.8, abs=1e-12)
    one = pec_inverse_representation(1.0)
    assert one.weights == {"I": 1.0, "X": 0.0, "Y": 0.0, "Z": 0.0} and one.gamma == 1
    with pytest.raises(ValueError):
        pec_inverse_representation(0.0)
    gs = [pec_inverse_representation(p).gamma for p in np.linspace(0.05, 1, 40)]
    assert all(b < a for a, b in zip(gs, gs[1:]))
    for p in (0.3, 0.9):
        assert pec_inverse_representation(p).gamma == pytest.approx((3 - p) / (2 * p))


def test_inverse_composes_to_identity_on_paulis():
    p = 0.7
    rep = pec_inverse_representation(p)
    for P in "IXYZ":
        lam = 1.0 if P == "I" else p
        # Pauli conjugation by S flips the sign of anticommuting P
        total = sum(a * (1 if P in ("I", S) or S == "I" else -1) for S, a in rep.weights.items())
        assert lam * total == pytest.approx(1.0, abs=1e-12)


def test_pec_exact_sum_is_unbiased():
    for seed in range(3):
        c = attach_noise(build_mixing_circuit(2, 2, seed=seed), DepolarizingSpec(0.8))
        for O in ("ZI", "XY", surviving_observable(c)):
            assert pec_exact_expectation(c, O) == pytest.approx(noiseless_expectation(c, O), abs=1e-10)


def test_pec_noiseless_reduces_to_plain_sampling():
    c = attach_noise(build_mixing_circuit(3, 2, seed=1), DepolarizingSpec(1.0))
    O = PauliSum.from_text("0.5*ZZI + 0.5*XIX")
    r = pec_estimate(c, O, 20_000, seed=3)
    assert r.details["gamma"] == 1
    assert abs(r.estimate - noiseless_expectation(c, O)) < 3 * r.stderr[0] + 1e-12


def test_pec_bias_million_shots():
    c = attach_noise(build_mixing_circuit(3, 2, seed=4), DepolarizingSpec(0.9))
    O = surviving_observable(c)
    r = pec_estimate(c, O, 1_000_000, seed=11)
    truth = noiseless_expectation(c, O)
    assert abs(truth) == pytest.approx(1)
    assert abs(noisy_expectation(c, O)) < 0.6
    assert abs(r.estimate - truth) < 3 * r.stderr[0]
    assert r.details["locations"] == 6
    with pytest.raises(ValueError):
        pec_estimate(c, O, 0)


def test_pec_rejects_other_noise():
    c = attach_noise(build_mixing_circuit(2, 1, seed=0), amplitude_damping(0.1))
    with pytest.raises(TypeError):
        pec_estimate(c, "ZI", 10)


def test_zne_noiseless_is_exact():
    c = build_mixing_circuit(3, 3, seed=2)
    O = surviving_observable(c)
    r = zne_estimate(c, [1, 2, 3], O, order=2)
    assert r.estimate == pytest.approx(noiseless_expectation(c, O), abs=1e-12)


def test_zne_truncation_terms():
    p, D = 0.9, 2
    c = attach_noise(build_identity_circuit(2, D), DepolarizingSpec(p))
    a = p**D
    lin = zne_estimate(c, [1, 2], "ZI", order=1)
    quad = zne_estimate(c, [1, 2, 3], "ZI", order=2)
    assert 1 - lin.estimate == pytest.approx((1 - a) ** 2, abs=1e-12)
    assert 1 - quad.estimate == pytest.approx((1 - a) ** 3, abs=1e-12)
    assert abs(1 - quad.estimate) < abs(1 - lin.estimate)
    assert abs(1 - quad.estimate) < abs(1 - noisy_expectation(c, "ZI"))


def test_zne_stderr_grows_with_node_spread():
    c = attach_noise(build_identity_circuit(2, 2), DepolarizingSpec(0.9))
    ses = [zne_estimate(c, [s, s + 1], "ZI", shots=20_000, seed=s).stderr[0] for s in (1, 2, 4)]
    assert ses[0] < ses[1] < ses[2]


def test_richardson_errors():
    with pytest.raises(ValueError):
        richardson_coefficients([1, 1], 1)
    with pytest.raises(ValueError):
        richardson_coefficients([1, 2], 2)
    assert richardson_coefficients([1, 2], 1) == pytest.approx([2, -1])


def test_virtual_distillation_cases():
    psi = pure_state(np.array([1, 1, 0, 1j]))
    assert virtual_distillation_estimate(psi, "XI") == pytest.approx(expectation(psi, "XI"))
    assert virtual_distillation_estimate(maximally_mixed(2), "ZZ") == pytest.approx(0, abs=1e-15)
    q = 0.1
    rho = (1 - q) * basis_state(2, 0) + q * basis_state(2, 3)
    ideal = expectation(basis_state(2, 0), "ZI")
    vd = virtual_distillation_estimate(rho, "ZI")
    assert abs(vd - ideal) < abs(expectation(rho, "ZI") - ideal)
    w = (1 - q) ** 2 / ((1 - q) ** 2 + q**2)
    assert vd == pytest.approx(w - (1 - w))
    with pytest.raises(ValueError):
        virtual_distillation_estimate(np.zeros((4, 4)), "ZI")


def test_weak_noiseless_matches_direct_sampling():
    c = build_mixing_circuit(3, 2, seed=1)
    M = ObservableSet.from_text(["XII", "IXI", "IIX"])
    assert [noiseless_expectation(c, O) for O in M] == [0, 0, 0]
    r = weak_mitigate("pec", c, DepolarizingSpec(1.0), M, 0.1, 0.1, seed=0)
    base = len(M) * hoeffding_shots(len(M), 0.1, 0.1)
    assert base / 4 <= r.shots <= 4 * base
    assert np.all(np.abs(r.estimates) <= 0.1)


def test_weak_identity_pec_within_budget():
    r = weak_mitigate(
        "pec", build_identity_circuit(3, 1), DepolarizingSpec(0.9), ObservableSet.single_z(3), 0.1, 0.1, seed=0
    )
    assert not r.cap_exceeded
    assert r.shots <= 10**4
    assert np.all(np.abs(r.estimates - 1) <= 0.1)


def test_weak_blow_up_regime():
    r = weak_mitigate(
        "pec", build_mixing_circuit(6, 4, seed=0), DepolarizingSpec(0.9), ObservableSet.single_z(6), 0.1, 0.1,
        seed=0, shot_cap=10**7,
    )
    assert r.cap_exceeded
    assert r.required_shots > 10**7
    assert r.shots <= 10**7


def test_weak_joint_guarantee_ten_observables():
    c = build_mixing_circuit(4, 2, seed=6)
    labels = ["ZIII", "IZII", "IIZI", "IIIZ", "XXII", "IIXX", "ZZZZ", "XIXI", "IYIY", "YYII"]
    M = ObservableSet.from_text(labels)
    truth = np.array([noiseless_expectation(c, O) for O in M])
    ok = 0
    for seed in range(20):
        r = weak_mitigate("pec", c, DepolarizingSpec(1.0), M, 0.1, 0.1, seed=seed)
        ok += bool(np.all(np.abs(r.estimates - truth) <= 0.1))
    # joint success probability is at least 0.9, so 20 runs see at most a few misses
    assert ok >= 16


@pytest.mark.parametrize("protocol", ["zne", "vd"])
def test_weak_other_protocols(protocol):
    c = build_identity_circuit(2, 1)
    r = weak_mitigate(protocol, c, DepolarizingSpec(0.95), ObservableSet.single_z(2), 0.1, 0.2, seed=1)
    assert not r.cap_exceeded and r.shots > 0
    assert np.all(np.abs(r.estimates - 1) < 0.15)


def test_weak_input_errors():
    c = build_identity_circuit(2, 1)
    with pytest.raises(ValueError):
        weak_mitigate("pec", c, DepolarizingSpec(0.9), ObservableSet.single_z(3), 0.1, 0.1)
    with pytest.raises(ValueError):
        weak_mitigate("magic", c, DepolarizingSpec(0.9), ObservableSet.single_z(2), 0.1, 0.1)
    with pytest.raises(ValueError):
        weak_mitigate("pec", c, DepolarizingSpec(0.9), ObservableSet.single_z(2), 1.5, 0.1)
    with pytest.raises(ValueError):
        MitigationResult([0.0], 0.1, 0.1, 0, "pec")
    with pytest.raises(ValueError):
        ObservableSet.from_text(["ZI", "ZZZ"])


def test_median_of_means_plan_meets_target():
    pl = plan_median_of_means(1.0, 0.1, 0.01)
    assert pl.failure <= 0.01 and pl.blocks % 2 == 1 and pl.block_size >= 30


def test_strong_check_exact_reference():
    c = build_parity_circuit("101")
    psi = ideal_distribution(c)
    assert strong_check(psi, psi, epsilon=0.01).passed
    v = strong_check(psi, psi, kappa=1.0)
    assert v.passed and v.statistic == pytest.approx(1)


def test_strong_check_uniform_vs_parity():
    psi = basis_probabilities(evolve(basis_state(4), build_parity_circuit("110")))
    uni = np.full(16, 1 / 16)
    v = strong_check(uni, psi, epsilon=0.4)
    assert v.statistic == pytest.approx(0.5) and v.verdict == "fail"
    assert strong_check(uni, psi, kappa=2.0).passed
    assert strong_check(uni, psi, kappa=1.5).verdict == "fail"


def test_kappa_certificate():
    assert certified_tv_from_kappa(2.0) == pytest.approx(math.sqrt(0.5), abs=1e-12)
    psi = np.array([0.5, 0.25, 0.25, 0.0])
    mu = np.array([0.3, 0.3, 0.2, 0.2])
    for kappa in (1.7, 2.0, 3.0):
        v = strong_check(mu, psi, kappa=kappa)
        if v.passed:
            assert v.certified_tv == pytest.approx(math.sqrt(1 - 1 / kappa))
            assert strong_check(mu, psi, epsilon=v.certified_tv).passed


def test_strong_check_sampled():
    psi = np.array([0.5, 0.25, 0.25, 0.0])

    def exact_sampler(m, rng):
        return rng.choice(4, size=m, p=psi)

    assert strong_check(exact_sampler, psi, epsilon=0.05, shots=200_000, seed=1).passed
    assert strong_check(exact_sampler, psi, kappa=1.1, shots=200_000, seed=1).passed

    def blind(m, rng):
        return np.zeros(m, dtype=int)

    assert strong_check(blind, psi, kappa=3.0, shots=1000, seed=2).verdict == "inconclusive"
    with pytest.raises(ValueError):
        strong_check(psi, psi)
