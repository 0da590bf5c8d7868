"""Oracle-equivalence checks: every fast path against a slow reference.

Each check returns a :class:`CheckResult`; :func:`run_suite` runs them all
with derived seeds so the table is reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .circuits import LayeredCircuit, Layer, attach_noise, build_mixing_circuit
from .dense import (
    apply_channel_dense,
    basis_state,
    clifford_unitary,
    divergences,
    evolve,
    expectation,
    maximally_mixed,
    pauli_matrix,
    purity,
    random_density_matrix,
    relative_entropy,
)
from .limits import fano_m_min, le_cam_bound
from .mitigation import noiseless_expectation, noisy_expectation, pec_exact_expectation
from .noise import DepolarizingSpec, PauliChannel, pauli_eigenvalue
from .parity import (
    ParityDistribution,
    _fast_parity_scores,
    _general_scores,
    expectation_Zb,
    expectation_Zb_bruteforce,
    parity_sample,
    parity_tv,
    parity_tv_bruteforce,
)
from .pauli import PauliString, conjugate, sample_random_clifford, uniform_clifford_ensemble, verify_pauli_mixing
from .purity import expected_purity_recursion, pauli_path_purity, weight_spectrum
from .records import derive_seed

__all__ = ["CheckResult", "CHECKS", "run_suite", "format_table", "VALIDATE_COLUMNS"]

# timings stay out of the CSV so reruns are byte-identical
VALIDATE_COLUMNS = ("check", "passed", "worst", "tolerance", "sense")


@dataclass(frozen=True)
class CheckResult:
    check: str
    passed: bool
    worst: float
    tolerance: float
    seconds: float = 0.0
    sense: str = "at-most"


def _random_pauli(n: int, rng) -> PauliString:
    return PauliString(n, int(rng.integers(0, 2**n)), int(rng.integers(0, 2**n)), 0)


def check_conjugation(seed: int) -> tuple:
    """Tableau conjugation against ``U P U^dagger`` with dense matrices."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 4))
        T = sample_random_clifford(n, rng)
        U = clifford_unitary(T)
        P = _random_pauli(n, rng)
        lhs = U @ pauli_matrix(P) @ U.conj().T
        worst = max(worst, float(np.abs(lhs - pauli_matrix(conjugate(T, P))).max()))
    return worst, 1e-10


def check_pauli_mixing(seed: int) -> tuple:
    """Image histogram under uniform Cliffords; the smallest p-value must exceed 1e-3."""
    rep = verify_pauli_mixing(uniform_clifford_ensemble(2), 2, 3000, seed=seed)
    return min(rep.p_value.values()), 1e-3, "at-least"


def check_path_vs_dense(seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(20):
        n = int(rng.integers(1, 5))
        D = int(rng.integers(1, 5))
        p = float(rng.choice([0.7, 0.9, 0.99]))
        c = attach_noise(build_mixing_circuit(n, D, seed=derive_seed(seed, i)), DepolarizingSpec(p))
        x = int(rng.integers(0, 2**n))
        fast = pauli_path_purity(c, x).value
        slow = purity(evolve(basis_state(n, x), c))
        worst = max(worst, abs(fast - slow))
    return worst, 1e-10


def check_weight_spectrum(seed: int) -> tuple:
    """Spectrum sums to the purity and starts at ``2^-n``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(1, 5))
        rho = random_density_matrix(n, seed=rng)
        ws = weight_spectrum(rho)
        worst = max(worst, abs(ws.C.sum() - purity(rho)), abs(ws.C[0] - 2.0**-n))
    c = attach_noise(build_mixing_circuit(3, 3, seed=seed), DepolarizingSpec(0.8))
    path = weight_spectrum(c).C
    dense = weight_spectrum(evolve(basis_state(3), c)).C
    worst = max(worst, float(np.abs(path - dense).max()))
    return worst, 1e-10


def check_design_average(seed: int) -> tuple:
    """Average exact purity over sampled circuits against the recursion (z-score)."""
    n, p, D, m = 2, 0.9, 2, 2000
    vals = np.array([
        pauli_path_purity(attach_noise(build_mixing_circuit(n, D, seed=derive_seed(seed, i)), DepolarizingSpec(p))).value
        for i in range(m)
    ])
    z = abs(vals.mean() - expected_purity_recursion(n, p, D)) / (vals.std(ddof=1) / math.sqrt(m))
    return float(z), 4.0


def check_divergence_chain(seed: int) -> tuple:
    """``D <= D_2 <= D_max`` and ``D <= n + log2 purity`` on random states."""
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for n in (1, 2, 3):
        sigma = maximally_mixed(n)
        for _ in range(20):
            rho = random_density_matrix(n, rank=int(rng.integers(1, 2**n + 1)), seed=rng)
            r = divergences(rho, sigma)
            bound = n + math.log2(purity(rho))
            worst = max(worst, r.relative_entropy - r.renyi[2.0], r.renyi[2.0] - r.max_relative,
                        relative_entropy(rho) - bound)
    return worst, 1e-9


def check_channel_eigenvalues(seed: int) -> tuple:
    """Pauli-channel eigenvalues against dense application to each Pauli."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    q = rng.dirichlet(np.ones(4))
    chans = [DepolarizingSpec(0.8), DepolarizingSpec(0.6, "global", 2),
             PauliChannel(dict(zip("IXYZ", q)), local=True)]
    for ch in chans:
        for _ in range(8):
            P = _random_pauli(2, rng)
            M = pauli_matrix(P)
            out = apply_channel_dense(ch, M)
            worst = max(worst, float(np.abs(out - pauli_eigenvalue(ch, P) * M).max()))
    return worst, 1e-12


def check_heisenberg(seed: int) -> tuple:
    """Heisenberg-picture expectations against dense evolution."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(10):
        n = int(rng.integers(1, 4))
        c = attach_noise(build_mixing_circuit(n, 2, seed=derive_seed(seed, i)), DepolarizingSpec(0.85))
        P = _random_pauli(n, rng)
        x = int(rng.integers(0, 2**n))
        worst = max(worst, abs(noisy_expectation(c, P, x) - expectation(evolve(basis_state(n, x), c), P)))
        clean = LayeredCircuit(n, [Layer(layer.unitary, None) for layer in c.layers])
        worst = max(worst, abs(noiseless_expectation(c, P, x) - expectation(evolve(basis_state(n, x), clean), P)))
    return worst, 1e-10


def check_pec_exact(seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(4):
        n = 1 + i % 2
        c = attach_noise(build_mixing_circuit(n, 1 + i // 2, seed=derive_seed(seed, i)), DepolarizingSpec(0.9))
        P = _random_pauli(n, rng)
        worst = max(worst, abs(pec_exact_expectation(c, P) - noiseless_expectation(c, P)))
    return worst, 1e-10


def check_parity_bridge(seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in range(1, 7):
        s = int(rng.integers(0, 2**n))
        for b in range(2 ** (n + 1)):
            worst = max(worst, abs(expectation_Zb(s, b, n) - expectation_Zb_bruteforce(s, b, n)))
    return worst, 1e-12


def check_parity_tv(seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(40):
        n = int(rng.integers(1, 9))
        s, t = (int(v) for v in rng.integers(0, 2**n, size=2))
        worst = max(worst, abs(parity_tv(s, t, n) - parity_tv_bruteforce(s, t, n)))
    return worst, 1e-12


def check_yatracos_paths(seed: int) -> tuple:
    """Closed-form parity scores against the generic Yatracos computation."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 6))
        secrets = rng.choice(2**n, size=int(rng.integers(2, 2**n + 1)), replace=False).astype(np.int64)
        z = parity_sample(int(rng.integers(0, 2**n)), n, rng, size=int(rng.integers(5, 80)))
        a = _fast_parity_scores(z, secrets)
        b = _general_scores(z, [ParityDistribution(int(s), n).probabilities() for s in secrets])
        worst = max(worst, float(np.abs(a - b).max()))
    return worst, 1e-12


def check_fano_example(seed: int) -> tuple:
    return float(abs(fano_m_min(16, 1 / 3, 0.01) - 167) + abs(le_cam_bound(0.5) - 0.25)), 0.0


CHECKS: dict[str, Callable[[int], tuple]] = {
    "tableau-conjugation-vs-dense": check_conjugation,
    "uniform-clifford-pauli-mixing": check_pauli_mixing,
    "pauli-path-vs-dense-purity": check_path_vs_dense,
    "weight-spectrum-sum": check_weight_spectrum,
    "design-average-vs-recursion": check_design_average,
    "divergence-ordering-and-purity-bound": check_divergence_chain,
    "pauli-channel-eigenvalues": check_channel_eigenvalues,
    "heisenberg-vs-dense-expectation": check_heisenberg,
    "pec-exact-vs-noiseless": check_pec_exact,
    "parity-zb-vs-bruteforce": check_parity_bridge,
    "parity-tv-vs-bruteforce": check_parity_tv,
    "yatracos-closed-form-vs-generic": check_yatracos_paths,
    "fano-and-le-cam-examples": check_fano_example,
}


def run_suite(seed: int = 0, only=None) -> list[CheckResult]:
    """Run every check, or the names in ``only``.

    A check passes when its value is at most the tolerance, or at least it
    for checks reporting a p-value.
    """
    out = []
    for i, (name, fn) in enumerate(CHECKS.items()):
        if only is not None and name not in only:
            continue
        t0 = time.perf_counter()
        worst, tol, *rest = fn(derive_seed(seed, i))
        sense = rest[0] if rest else "at-most"
        ok = worst >= tol if sense == "at-least" else worst <= tol
        out.append(CheckResult(name, bool(ok), float(worst), float(tol), time.perf_counter() - t0, sense))
    return out


def format_table(results) -> str:
    w = max(len(r.check) for r in results)
    lines = [f"{'check':<{w}}  result  value         bound"]
    for r in results:
        bound = (">= " if r.sense == "at-least" else "<= ") + format(r.tolerance, ".3g")
        lines.append(f"{r.check:<{w}}  {'pass' if r.passed else 'FAIL':<6}  {r.worst:<12.4g}  {bound}")
    return "\n".join(lines)
