"""
Relative entropy under amplitude damping
========================================

Amplitude damping pushes states towards |0..0>, not towards I/2^n, so the
purity no longer tells the whole story. We track D(rho || I/2^n) directly
with dense simulation and fit its decay rate for each n.
"""

from emlab.purity import nonunital_decay_experiment

cur = nonunital_decay_experiment([2, 3, 4, 5], [1, 2, 3, 4, 5], 0.2, trials=300, seed=0)

print(" n   " + "  ".join(f"D={D}" for D in cur.Ds))
for n in cur.ns:
    print(f"{n:2d}  " + "  ".join(f"{v:.3f}" for v in cur.mean(n)))

# The entropy can never exceed n + log2 purity.
print("\nbound violations:", cur.lemma_violations)

trend = cur.trend_test()
for n, e in trend["exponents"].items():
    print(f"n={n}: exponent {e:.3f} +- {trend['bootstrap_stderr'][n]:.3f}")
print("fraction of bootstrap replicates with increasing exponents:", trend["fraction_increasing"])
