"""
Samples versus expectation values on parity states
==================================================

A parity state hides an n-bit secret s. Measuring it gives (x, x.s) pairs,
and a handful of samples pins s down. Z-type expectation values answered by
an adversarial oracle with tolerance tau reveal s only when the query hits it
exactly, so a budget of B queries finds it with probability about B / 2^n.
"""

from emlab.circuits import build_parity_circuit
from emlab.dense import basis_probabilities, basis_state, evolve
from emlab.parity import (
    ParityDistribution,
    SQOracleState,
    StatQuery,
    expectation_Zb,
    parity_sample,
    sq_oracle_answer,
    weak_to_strong_experiment,
    yatracos_select,
)

# The circuit: Hadamards on the data qubits, then CNOTs into the target.
print("P_11 support:", [format(z, "03b") for z, q in enumerate(basis_probabilities(evolve(basis_state(3), build_parity_circuit("11")))) if q > 1e-12])

# Sampling route: 1000 samples and minimum-distance selection over 1024 secrets.
n, s = 10, 0b1011001110
z = parity_sample(s, n, seed=0, size=1000)
res = yatracos_select(z, [ParityDistribution(t, n) for t in range(2**n)])
print(f"secret {s:010b}, selected {res.index:010b}")

# SQ route: the oracle answers 1/2 unless the query is the secret itself.
oracle = SQOracleState("1011", 4)
for b in ("10111", "01101", "00001"):
    ans = sq_oracle_answer(oracle, StatQuery.zb(int(b, 2), 0.1))
    print(f"query Z^{b}: truth {(1 + expectation_Zb('1011', b)) / 2:.2f}, answer {ans:.2f}")

rep, _ = weak_to_strong_experiment(12, 0.1, 256, seed=0, reps=200, sampling_reps=50, sampling_n=10)
print(f"\nsampling success {rep['sampling_success_rate']:.2f} with {rep['samples_used']} samples")
print(f"SQ success {rep['sq_success_rate']:.3f} with 256 queries (B/2^n = {rep['hit_probability']:.4f})")
