"""
What error mitigation costs
===========================

PEC undoes local depolarizing noise exactly on average, at the price of a
per-shot variance of Gamma^(2nD). Below we watch that variance grow, let the
adaptive driver hit its shot cap, and compare with the Fano floor computed
from the entropy bound.
"""

import math

from emlab.circuits import attach_noise, build_identity_circuit, build_mixing_circuit
from emlab.limits import fano_m_min, mitigation_cost_chart
from emlab.mitigation import (
    ObservableSet,
    noiseless_expectation,
    noisy_expectation,
    pec_estimate,
    pec_inverse_representation,
    weak_mitigate,
    zne_estimate,
)
from emlab.noise import DepolarizingSpec
from emlab.pauli import PauliString, conjugate
from emlab.purity import decay_sweep

p, n = 0.9, 3
gamma = pec_inverse_representation(p).gamma
print(f"Gamma(p={p}) = {gamma:.5f}")

# An observable whose ideal value is +1, so the noise damage is visible.
# Every PEC shot is +-Gamma^(nD), hence the variance is Gamma^(2nD) - 1 here.
for D in (1, 2, 3, 4):
    c = attach_noise(build_mixing_circuit(n, D, seed=D), DepolarizingSpec(p))
    O = conjugate(c.total_tableau(), PauliString.single(n, 0, "Z"))
    r = pec_estimate(c, O, 50_000, seed=D)
    print(
        f"D={D}: noisy {noisy_expectation(c, O):+.3f}  PEC {r.estimate:+.3f} +- {r.stderr[0]:.3f}  "
        f"ideal {noiseless_expectation(c, O):+.0f}  var {r.details['variance']:8.2f}  "
        f"Gamma^(2nD) {gamma ** (2 * n * D):8.2f}"
    )

# ZNE on the same kind of circuit: linear and quadratic Richardson fits.
c = attach_noise(build_identity_circuit(2, 3), DepolarizingSpec(p))
for order, scales in ((1, [1, 2]), (2, [1, 2, 3])):
    print(f"ZNE order {order}: {zne_estimate(c, scales, 'ZI', order=order).estimate:.5f} (ideal 1)")

# The adaptive driver: cheap for shallow circuits, capped for deep ones.
ok = weak_mitigate("pec", build_identity_circuit(3, 1), DepolarizingSpec(p), ObservableSet.single_z(3), 0.1, 0.1, seed=0)
print(f"\nidentity n=3 D=1: {ok.shots} shots, estimates {ok.estimates.round(3)}")
deep = weak_mitigate("pec", build_mixing_circuit(6, 4, seed=0), DepolarizingSpec(p), ObservableSet.single_z(6), 0.1, 0.1, seed=0)
print(f"mixing n=6 D=4: cap exceeded={deep.cap_exceeded}, needed about {deep.required_shots:.3g} shots")

# No protocol can beat the Fano floor built from the purity decay.
print(f"\nFano worked example: {fano_m_min(2**4, 1 / 3, 0.01)} copies")
curve = decay_sweep("mixing", [4, 8, 12], [2, 4, 6], DepolarizingSpec(p), trials=4000, seed=1)
for row in mitigation_cost_chart(curve, 0.1):
    if row.method == "fano:N=2^n":
        print(f"n={row.n:2d} D={row.D}: log2 m_min >= {row.m_min_log2:6.2f}  (nD = {row.n * row.D})")
print("log2 of Gamma^(2nD) per unit nD:", round(2 * math.log2(gamma), 4))
