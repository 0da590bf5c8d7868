"""Sample-complexity lower bounds for noisy state discrimination.

The ensemble is the basis states ``|x><x|`` for ``x < N`` together with the
maximally mixed state, each sent through the same noisy circuit. Every
divergence is measured against ``I / 2**n`` in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import LayeredCircuit, attach_noise
from .dense import DENSE_MAX_QUBITS, basis_state, evolve, maximally_mixed, relative_entropy
from .noise import is_pauli_noise
from .purity import PATH_EXACT_MAX_QUBITS, DecayCurve, pauli_path_purity

__all__ = [
    "FANO_FORMULA",
    "HypothesisEnsemble",
    "LowerBoundReport",
    "CostRow",
    "COST_COLUMNS",
    "build_discrimination_ensemble",
    "fano_m_min",
    "fano_lower_bound",
    "le_cam_bound",
    "mitigation_cost_chart",
]

FANO_FORMULA = "m_min = ceil(((1 - delta) * log2(N) - 1) / max_x D(rho_x || I/2^n)), at least 1"


@dataclass
class HypothesisEnsemble:
    """Noisy images of ``N`` basis states plus the maximally mixed state.

    ``divergences[i]`` belongs to ``labels[i]``; the last label is ``"mixed"``.
    ``surrogate`` is True when the values are the purity bound
    ``n + log2 Tr(rho^2)`` rather than exact relative entropies.
    """

    n: int
    N: int
    labels: list
    divergences: np.ndarray
    surrogate: bool
    circuit: LayeredCircuit | None = None
    exact: np.ndarray | None = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("need at least one basis hypothesis")
        self.divergences = np.asarray(self.divergences, dtype=float)
        if np.any(self.divergences < -1e-9):
            raise ValueError("negative divergence")
        self.divergences = np.clip(self.divergences, 0, None)

    def max_divergence(self, include_mixed: bool = False) -> float:
        d = self.divergences if include_mixed else self.divergences[: self.N]
        return float(np.max(d))

    def hypothesis_count(self, include_mixed: bool = False) -> int:
        return self.N + (1 if include_mixed else 0)


def build_discrimination_ensemble(
    circuit: LayeredCircuit,
    noise=None,
    N: int | None = None,
    method: str = "auto",
    trials: int = 10_000,
    seed=None,
) -> HypothesisEnsemble:
    """Hypotheses ``x = 0 .. N-1`` plus ``I / 2**n`` through the noisy circuit.

    ``method="dense"`` computes exact relative entropies (``n <= 12``);
    ``method="surrogate"`` uses ``n + log2(purity)`` from the Pauli-path sum,
    which needs Pauli noise and Clifford layers. ``"auto"`` prefers dense.
    For the surrogate route the mixed state maps to itself (unital noise),
    so its divergence is 0. ``noise`` replaces the circuit's own noise.
    """
    n = circuit.n
    N = 2**n if N is None else int(N)
    if N > 2**n:
        raise ValueError(f"{N} hypotheses exceed the {2**n} basis states of {n} qubits")
    if N < 1:
        raise ValueError("need at least one basis hypothesis")
    noisy = circuit if noise is None else attach_noise(circuit, noise)
    if method == "auto":
        method = "dense" if n <= DENSE_MAX_QUBITS else "surrogate"
    labels = list(range(N)) + ["mixed"]
    if method == "dense":
        if n > DENSE_MAX_QUBITS:
            raise ValueError("dense ensemble limited to 12 qubits")
        div = [relative_entropy(evolve(basis_state(n, x), noisy)) for x in range(N)]
        div.append(relative_entropy(evolve(maximally_mixed(n), noisy)))
        return HypothesisEnsemble(n, N, labels, np.array(div), False, noisy, np.array(div))
    if method == "surrogate":
        if not all(layer.noise is None or is_pauli_noise(layer.noise) for layer in noisy.layers):
            raise TypeError("the purity surrogate needs Pauli noise")
        mode = "exact" if n <= PATH_EXACT_MAX_QUBITS else "monte-carlo"
        pur = pauli_path_purity(noisy, 0, mode=mode, trials=trials, seed=seed).value
        bound = n + math.log2(pur)
        div = np.array([bound] * N + [0.0])
        return HypothesisEnsemble(n, N, labels, div, True, noisy)
    raise ValueError(f"unknown method {method!r}")


@dataclass
class LowerBoundReport:
    """Minimum number of copies; ``m_min`` is ``inf`` if nothing distinguishes."""

    m_min: float
    method: str
    N: int
    delta: float | None
    max_divergence: float | None
    surrogate: bool = False
    formula: str = FANO_FORMULA
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        m = self.m_min
        return {
            "m_min": m if math.isfinite(m) else "inf",
            "method": self.method,
            "N": self.N,
            "delta": self.delta,
            "max_divergence": self.max_divergence,
            "surrogate": self.surrogate,
            "formula": self.formula,
            **self.extra,
        }


def fano_m_min(N: int, delta: float, max_divergence: float) -> float:
    """Fano bound on the number of copies for ``N`` equiprobable hypotheses."""
    if N < 2:
        raise ValueError("Fano bound needs at least two hypotheses")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if max_divergence < 0:
        raise ValueError("divergence must be non-negative")
    num = (1 - delta) * math.log2(N) - 1
    if num <= 0:
        return 1
    if max_divergence == 0:
        return math.inf
    # guard against 166.99999999 style round-off at exact integers
    ratio = num / max_divergence
    return max(1, math.ceil(ratio - 1e-9 * max(1.0, ratio)))


def fano_lower_bound(ensemble: HypothesisEnsemble, delta: float, include_mixed: bool = False) -> LowerBoundReport:
    """Fano bound for the ensemble; ``include_mixed`` counts ``N + 1`` hypotheses."""
    N = ensemble.hypothesis_count(include_mixed)
    dmax = ensemble.max_divergence(include_mixed)
    return LowerBoundReport(
        fano_m_min(N, delta, dmax), "fano", N, delta, dmax, ensemble.surrogate,
        extra={"include_mixed": include_mixed},
    )


def le_cam_bound(tv: float) -> float:
    """Smallest error probability of any test between two hypotheses at TV ``tv``."""
    if not 0 <= tv <= 1:
        raise ValueError("total variation must lie in [0, 1]")
    return (1 - tv) / 2


@dataclass(frozen=True)
class CostRow:
    family: str
    n: int
    D: int
    m_min_log2: float
    method: str
    surrogate_flag: bool


COST_COLUMNS = ("family", "n", "D", "m_min_log2", "method", "surrogate_flag")


def mitigation_cost_chart(decay, delta: float) -> list[CostRow]:
    """Fano ``log2 m_min`` per decay row, for ``N = 2^n`` and ``N = 2^n + 1``.

    ``decay`` is a :class:`DecayCurve` or a list of dicts with ``family``,
    ``n``, ``D`` and ``entropy_bound``. The divergence used is the purity
    bound, so every row is a surrogate (an under-estimate of the true bound).
    """
    if isinstance(decay, DecayCurve):
        rows = [
            {"family": decay.family, "n": p.n, "D": p.D, "entropy_bound": p.entropy_bound}
            for p in decay.points
        ]
    else:
        rows = list(decay)
    out = []
    for r in rows:
        if "entropy_bound" not in r:
            raise KeyError("decay rows need an entropy_bound column")
        n, D, B = int(r["n"]), int(r["D"]), float(r["entropy_bound"])
        for N, tag in ((2**n, "fano:N=2^n"), (2**n + 1, "fano:N=2^n+1")):
            m = fano_m_min(N, delta, max(B, 0.0))
            out.append(CostRow(r.get("family", ""), n, D, math.log2(m), tag, True))
    return out

