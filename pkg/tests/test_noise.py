import itertools

import numpy as np
import pytest

from emlab.circuits import LayeredCircuit, Layer
from emlab.dense import apply_channel_dense, basis_state, evolve, maximally_mixed, pauli_matrix, random_density_matrix
from emlab.noise import (
    DepolarizingSpec,
    KrausChannel,
    PauliChannel,
    amplitude_damping,
    depolarizing_damping,
    is_pauli_noise,
    noise_from_json,
    noise_to_json,
    pauli_eigenvalue,
    single_qubit_depolarizing_as_pauli_channel,
)
from emlab.pauli import PauliString, identity_tableau, trace_product

L = PauliString.from_label
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def test_depolarizing_damping_examples():
    assert depolarizing_damping(DepolarizingSpec(0.9), L("XIZ")) == pytest.approx(0.81, abs=1e-15)
    assert depolarizing_damping(DepolarizingSpec(0.3), L("III")) == 1.0
    assert depolarizing_damping(DepolarizingSpec(0.3, "global"), L("II")) == 1.0
    assert depolarizing_damping(DepolarizingSpec(0.7, "global", 2), L("XZ")) == 0.7


def test_depolarizing_ranges():
    DepolarizingSpec(-1 / 3)
    DepolarizingSpec(-1 / 15, "global", 2)
    with pytest.raises(ValueError):
        DepolarizingSpec(-0.34)
    with pytest.raises(ValueError):
        DepolarizingSpec(-0.1, "global", 2)
    with pytest.raises(ValueError):
        DepolarizingSpec(1.01)
    with pytest.raises(ValueError):
        DepolarizingSpec(0.5, "regional")


@pytest.mark.parametrize(
    "p, qi, qo", [(1.0, 1.0, 0.0), (0.9, 0.925, 0.025), (-1 / 3, 0.0, 1 / 3)]
)
def test_single_qubit_depolarizing_as_pauli_channel(p, qi, qo):
    ch = single_qubit_depolarizing_as_pauli_channel(p)
    assert ch.q["I"] == pytest.approx(qi, abs=1e-15)
    for a in "XYZ":
        assert ch.q[a] == pytest.approx(qo, abs=1e-15)


def test_single_qubit_depolarizing_out_of_range():
    with pytest.raises(ValueError):
        single_qubit_depolarizing_as_pauli_channel(-0.5)


def test_amplitude_damping_actions():
    g = 0.3
    ch = amplitude_damping(g)
    assert np.allclose(apply_channel_dense(ch, Z), (1 - g) * Z)
    assert np.allclose(apply_channel_dense(ch, I2), I2 + g * Z)
    assert np.allclose(apply_channel_dense(ch, X), np.sqrt(1 - g) * X)
    rho = random_density_matrix(1, seed=3)
    assert np.allclose(apply_channel_dense(amplitude_damping(0.0), rho), rho)
    assert np.allclose(apply_channel_dense(amplitude_damping(1.0), rho), basis_state(1, 0))
    with pytest.raises(ValueError):
        amplitude_damping(1.5)


def test_non_unitality_sign():
    assert np.linalg.norm(apply_channel_dense(amplitude_damping(0.2), I2) - I2) > 0
    for ch in (DepolarizingSpec(0.4), single_qubit_depolarizing_as_pauli_channel(0.2)):
        assert np.allclose(apply_channel_dense(ch, np.eye(4)), np.eye(4), atol=1e-15)


def test_kraus_completeness_enforced():
    with pytest.raises(ValueError):
        KrausChannel((np.eye(2) * 1.1,))


def test_apply_channel_examples():
    rho = random_density_matrix(3, seed=1)
    assert np.allclose(apply_channel_dense(DepolarizingSpec(0.0, "global"), rho), maximally_mixed(3), atol=1e-15)
    assert np.allclose(apply_channel_dense(PauliChannel({"I": 1.0}, local=True), rho), rho)
    out = apply_channel_dense(DepolarizingSpec(0.9), basis_state(1, 0))
    assert np.allclose(out, np.diag([0.95, 0.05]), atol=1e-15)


def test_apply_channel_dimension_mismatch():
    with pytest.raises(ValueError):
        apply_channel_dense(DepolarizingSpec(0.5, "global", 2), maximally_mixed(3))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_pauli_transfer_consistency(n):
    rng = np.random.default_rng(n)
    q = rng.dirichlet(np.ones(4))
    chans = [
        DepolarizingSpec(0.8),
        DepolarizingSpec(0.6, "global", n),
        single_qubit_depolarizing_as_pauli_channel(0.7),
        PauliChannel(dict(zip("IXYZ", q)), local=True),
    ]
    for ch in chans:
        for x, z in itertools.product(range(2**n), repeat=2):
            P = PauliString(n, x, z)
            M = pauli_matrix(P)
            proj = np.trace(M @ apply_channel_dense(ch, M)).real / 2**n
            assert proj == pytest.approx(pauli_eigenvalue(ch, P), abs=1e-12)
            if isinstance(ch, DepolarizingSpec):
                assert proj == pytest.approx(depolarizing_damping(ch, P), abs=1e-12)
    assert trace_product(L("X" * n), L("X" * n)) == 2**n


def test_depolarizing_matches_its_pauli_channel():
    for P in [L("XY"), L("ZI"), L("II"), L("YY")]:
        a = pauli_eigenvalue(DepolarizingSpec(0.85), P)
        b = pauli_eigenvalue(single_qubit_depolarizing_as_pauli_channel(0.85), P)
        assert a == pytest.approx(b, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_layered_damping_multiplies(n):
    D, p = 3, 0.8
    ident = LayeredCircuit(n, [Layer(identity_tableau(n), DepolarizingSpec(p)) for _ in range(D)])
    for x, z in itertools.product(range(2**n), repeat=2):
        P = PauliString(n, x, z)
        M = pauli_matrix(P)
        out = evolve(M, ident)
        assert np.allclose(out, p ** (D * P.weight) * M, atol=1e-12)


def test_json_round_trip():
    specs = [
        DepolarizingSpec(0.9),
        DepolarizingSpec(0.7, "global", 3),
        PauliChannel({"I": 0.9, "X": 0.1}, local=True),
        PauliChannel({"II": 0.5, "XZ": 0.5}),
        amplitude_damping(0.2),
    ]
    for s in specs:
        back = noise_from_json(noise_to_json(s))
        assert noise_to_json(back) == noise_to_json(s)
    assert noise_to_json(DepolarizingSpec(0.9)) == {"kind": "depolarizing-local", "p": 0.9}
    with pytest.raises(ValueError):
        noise_from_json({"kind": "dephasing"})


def test_pauli_channel_validation():
    with pytest.raises(ValueError):
        PauliChannel({"I": 0.5, "X": 0.4})
    with pytest.raises(ValueError):
        PauliChannel({"I": 1.1, "X": -0.1})
    with pytest.raises(ValueError):
        PauliChannel({"I": 0.5, "XX": 0.5})
    assert is_pauli_noise(DepolarizingSpec(0.5))
    assert not is_pauli_noise(amplitude_damping(0.5))
    with pytest.raises(TypeError):
        pauli_eigenvalue(amplitude_damping(0.5), L("Z"))
