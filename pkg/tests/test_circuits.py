import numpy as np
import pytest

from emlab.circuits import (
    CircuitFamilySpec,
    Layer,
    LayeredCircuit,
    attach_noise,
    brickwork_pairs,
    build_brickwork,
    build_circuit,
    build_identity_circuit,
    build_mixing_circuit,
    build_parity_circuit,
    drop_noise,
    lattice_side,
)
from emlab.dense import apply_channel_dense, apply_clifford, basis_probabilities, basis_state, evolve, purity
from emlab.noise import DepolarizingSpec, PauliChannel, amplitude_damping
from emlab.pauli import PauliString, conjugate, uniform_clifford_ensemble, verify_pauli_mixing


def test_mixing_builder_basics():
    assert build_mixing_circuit(3, 0, seed=1).D == 0
    a, b = build_mixing_circuit(3, 4, seed=9), build_mixing_circuit(3, 4, seed=9)
    assert a == b
    assert a != build_mixing_circuit(3, 4, seed=10)
    assert a.is_clifford and a.is_noiseless and a.connectivity == "all-to-all"


def test_mixing_layers_are_pauli_mixing_over_seeds():
    cnt = np.zeros(15, dtype=int)
    P = PauliString.from_label("XI")
    for s in range(4500):
        Q = conjugate(build_mixing_circuit(2, 1, seed=s).layers[0].unitary, P)
        cnt[((Q.x << 2) | Q.z) - 1] += 1
    from scipy import stats

    assert stats.chisquare(cnt).pvalue > 1e-3
    assert verify_pauli_mixing(uniform_clifford_ensemble(2), 2, 1500, seed=2).is_uniform(1e-3)


def test_brickwork_pairs_layout():
    assert brickwork_pairs(4, 1, 0) == [(0, 1), (2, 3)]
    assert brickwork_pairs(4, 1, 1) == [(1, 2)]
    # 3x3 lattice: first axis strides by 3
    assert brickwork_pairs(9, 2, 0) == [(0, 3), (1, 4), (2, 5)]
    assert brickwork_pairs(9, 2, 2) == [(0, 1), (3, 4), (6, 7)]


def test_brickwork_first_layer_support():
    c = build_brickwork(4, 1, 1, seed=3)
    T = c.layers[0].unitary
    for q in range(4):
        img = conjugate(T, PauliString.single(4, q, "X"))
        partner = {0: {0, 1}, 1: {0, 1}, 2: {2, 3}, 3: {2, 3}}[q]
        assert set(img.support()) <= partner


@pytest.mark.parametrize("D", [1, 2, 3])
def test_brickwork_light_cone(D):
    n = 9
    c = build_brickwork(n, D, 1, seed=D)
    P = PauliString.single(n, 4, "Z")
    for layer in c.layers:
        P = conjugate(layer.unitary, P)
    assert len(P.support()) <= 2 * D + 1
    assert c == build_brickwork(n, D, 1, seed=D)


def test_lattice_shape_errors():
    assert lattice_side(16, 2) == 4
    assert lattice_side(27, 3) == 3
    with pytest.raises(ValueError):
        lattice_side(10, 2)
    with pytest.raises(ValueError):
        build_brickwork(10, 2, 2)


def test_parity_circuit_examples():
    c = build_parity_circuit("00")
    probs = basis_probabilities(evolve(basis_state(3), c))
    assert np.allclose(probs, [0.25, 0, 0.25, 0, 0.25, 0, 0.25, 0])
    c = build_parity_circuit("11")
    rho = evolve(basis_state(3), c)
    support = {format(int(k), "03b") for k in np.nonzero(basis_probabilities(rho) > 1e-12)[0]}
    assert support == {"000", "011", "101", "110"}
    assert purity(rho) == pytest.approx(1, abs=1e-12)
    amps = rho[:, 0] / np.sqrt(rho[0, 0])
    nz = amps[np.abs(amps) > 1e-9]
    assert np.allclose(nz, nz[0])
    assert all(layer.unitary is not None for layer in c.layers)
    for layer in c.layers:
        layer.unitary.validate()
    with pytest.raises(ValueError):
        build_parity_circuit("012")


def test_attach_and_drop_noise():
    c = build_mixing_circuit(3, 3, seed=1)
    noisy = attach_noise(c, DepolarizingSpec(0.9))
    assert all(layer.noise is not None for layer in noisy.layers)
    assert drop_noise(noisy) == c
    one = attach_noise(c, DepolarizingSpec(1.0))
    for x in range(8):
        assert np.allclose(evolve(basis_state(3, x), one), evolve(basis_state(3, x), c), atol=1e-12)
    with pytest.raises(ValueError):
        attach_noise(c, DepolarizingSpec(0.5, "global", 2))
    with pytest.raises(ValueError):
        attach_noise(c, PauliChannel({"II": 1.0}))


def test_interleaving_contract():
    c = attach_noise(build_mixing_circuit(3, 3, seed=5), amplitude_damping(0.3))
    rho = basis_state(3, 2)
    manual = rho
    for layer in c.layers:
        manual = apply_channel_dense(layer.noise, apply_clifford(manual, layer.unitary))
    assert np.allclose(evolve(rho, c), manual, atol=1e-12)


def test_identity_family_closed_form():
    p, D = 0.7, 2
    c = attach_noise(build_identity_circuit(2, D), DepolarizingSpec(p))
    assert purity(evolve(basis_state(2), c)) == pytest.approx(((1 + p ** (2 * D)) / 2) ** 2, abs=1e-12)


def test_prefix_and_total_tableau():
    c = build_mixing_circuit(2, 4, seed=8)
    assert c.prefix(2).D == 2
    P = PauliString.from_label("XZ")
    Q = P
    for layer in c.layers:
        Q = conjugate(layer.unitary, Q)
    assert conjugate(c.total_tableau(), P) == Q


def test_manifest_contents():
    c = attach_noise(build_mixing_circuit(2, 2, seed=4), DepolarizingSpec(0.9))
    m = c.manifest()
    assert m["family"] == "mixing" and m["n"] == 2 and m["D"] == 2 and m["seed"] == 4
    assert len(m["layers"]) == 2
    assert m["layers"][0]["noise"] == {"kind": "depolarizing-local", "p": 0.9}
    assert m["layers"][0]["unitary"] == c.layers[0].unitary.digest()


def test_family_spec_parsing():
    spec = CircuitFamilySpec.from_dict({"family": "brickwork", "n": 4, "D": 2, "d": 1, "seed": 3})
    assert build_circuit(spec) == build_brickwork(4, 2, 1, seed=3)
    assert build_circuit(CircuitFamilySpec("parity", 0, secret="101")).n == 4
    for bad in (
        {"family": "spiral", "n": 3},
        {"family": "brickwork", "n": 4},
        {"family": "parity", "n": 3},
        {"family": "mixing", "n": 3, "depth": 2},
    ):
        with pytest.raises((ValueError, TypeError)):
            CircuitFamilySpec.from_dict(bad)


def test_layer_dimension_checks():
    with pytest.raises(ValueError):
        LayeredCircuit(3, [Layer(build_mixing_circuit(2, 1, seed=0).layers[0].unitary)])
    with pytest.raises(ValueError):
        LayeredCircuit(2, [Layer(np.eye(8))])
    dense = LayeredCircuit(1, [Layer(np.array([[0, 1], [1, 0]], dtype=complex))])
    assert not dense.is_clifford
    assert np.allclose(evolve(basis_state(1), dense), basis_state(1, 1))
