"""
Purity decay in noisy layered Clifford circuits
===============================================

Random Clifford layers spread every Pauli over all qubits, so local noise
eats purity at a rate set by n*D. Idle layers leave each qubit alone, and
the rate depends on D only. This script shows both regimes side by side.
"""

import math

from emlab.circuits import attach_noise, build_identity_circuit, build_mixing_circuit
from emlab.dense import basis_state, evolve, purity
from emlab.noise import DepolarizingSpec
from emlab.purity import decay_sweep, expected_purity_recursion, pauli_path_purity

p = 0.9
noise = DepolarizingSpec(p)

# A single 3-qubit circuit: the Pauli-path sum and the dense simulator agree.
c = attach_noise(build_mixing_circuit(3, 4, seed=1), noise)
print("path sum  :", pauli_path_purity(c).value)
print("dense     :", purity(evolve(basis_state(3), c)))

# Averaged over circuits, the mixing family follows a one-line recursion.
for D in (1, 2, 4, 8):
    print(f"D={D}: expected purity {expected_purity_recursion(3, p, D):.5f}")

# Idle qubits: purity is a product of single-qubit factors.
ident = attach_noise(build_identity_circuit(3, 4), noise)
print("identity  :", pauli_path_purity(ident).value, "closed form", ((1 + p**8) / 2) ** 3)

# Monte Carlo over Pauli paths for larger n, then regress the exponents.
ns, Ds = [4, 6, 8, 10], [2, 3, 4, 5]
mix = decay_sweep("mixing", ns, Ds, noise, trials=4000, seed=0)
ide = decay_sweep("identity", ns, Ds, noise, trials=4000, seed=0)

print("\nmixing   n  D  purity      mass exponent")
for pt in mix.points:
    print(f"        {pt.n:2d} {pt.D:2d}  {pt.purity:.3e}  {pt.mass_exponent:7.3f}")

fm = mix.fit("mass_exponent", "nD")
fd = ide.fit("per_qubit_exponent", "D")
fn = ide.fit("per_qubit_exponent", "nD")
print(f"\nmixing exponent vs nD : slope {fm.slope:.4f}  R2 {fm.r2:.4f}")
print(f"identity vs D         : slope {fd.slope:.4f}  R2 {fd.r2:.4f}  (2 log2(1/p) = {2 * math.log2(1 / p):.4f})")
print(f"identity vs nD        : R2 {fn.r2:.4f}")
