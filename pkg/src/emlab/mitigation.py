"""Error-mitigation protocols and the weak/strong mitigation interfaces.

Observables are Pauli sums with ``sum |c| <= 1``. For Clifford circuits with
Pauli-diagonal noise every Pauli term propagates backwards as a single signed
Pauli, so shot outcomes are drawn from exactly known +-1 expectations; nothing
here needs the dense simulator except virtual distillation and the exact
insertion-sum check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import stats

from .circuits import Layer, LayeredCircuit, attach_noise, drop_noise
from .dense import (
    apply_clifford,
    basis_probabilities,
    basis_state,
    bretagnolle_huber_bound,
    evolve,
    expectation,
    pauli_matrix,
    purity,
    tv_distance,
)
from .noise import DepolarizingSpec, apply_channel_dense, pauli_eigenvalue
from .pauli import PauliString, PauliSum, as_rng

__all__ = [
    "ObservableSet",
    "MitigationResult",
    "QuasiProbRep",
    "pec_inverse_representation",
    "noisy_expectation",
    "noiseless_expectation",
    "pec_estimate",
    "pec_exact_expectation",
    "richardson_coefficients",
    "zne_estimate",
    "virtual_distillation_estimate",
    "MoMPlan",
    "plan_median_of_means",
    "hoeffding_shots",
    "weak_mitigate",
    "StrongVerdict",
    "strong_check",
    "ideal_distribution",
    "certified_tv_from_kappa",
]

MIN_BLOCK = 30


@dataclass(frozen=True)
class ObservableSet:
    """A finite list of bounded observables with display labels."""

    observables: tuple[PauliSum, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        obs = tuple(o if isinstance(o, PauliSum) else _as_sum(o) for o in self.observables)
        if not obs:
            raise ValueError("empty observable set")
        n = obs[0].n
        if any(o.n != n for o in obs):
            raise ValueError("observables act on different qubit counts")
        object.__setattr__(self, "observables", obs)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(o.label() for o in obs))
        elif len(self.labels) != len(obs):
            raise ValueError("one label per observable")

    @classmethod
    def from_text(cls, texts: Sequence[str]) -> "ObservableSet":
        return cls(tuple(PauliSum.from_text(t) for t in texts), tuple(texts))

    @classmethod
    def single_z(cls, n: int) -> "ObservableSet":
        """``Z_i`` on every qubit."""
        return cls(tuple(PauliSum.from_pauli(PauliString.single(n, q, "Z")) for q in range(n)))

    @property
    def n(self) -> int:
        return self.observables[0].n

    def __len__(self) -> int:
        return len(self.observables)

    def __iter__(self):
        return iter(self.observables)


def _as_sum(o) -> PauliSum:
    if isinstance(o, PauliString):
        return PauliSum.from_pauli(o)
    if isinstance(o, str):
        return PauliSum.from_text(o)
    raise TypeError(f"cannot use {type(o).__name__} as an observable")


@dataclass
class MitigationResult:
    """Output of one mitigation run.

    ``shots`` counts every circuit execution, pilot runs included.
    ``cap_exceeded`` marks partial results cut off by the shot budget;
    ``required_shots`` is then the planner's estimate of what was needed.
    """

    estimates: np.ndarray
    epsilon: float | None
    delta: float | None
    shots: int
    protocol: str
    kappa: float | None = None
    stderr: np.ndarray | None = None
    cap_exceeded: bool = False
    required_shots: int | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.estimates = np.atleast_1d(np.asarray(self.estimates, dtype=float))
        if self.stderr is not None:
            self.stderr = np.atleast_1d(np.asarray(self.stderr, dtype=float))
        if self.shots < 1:
            raise ValueError("a mitigation result needs at least one shot")
        for name in ("epsilon", "delta"):
            v = getattr(self, name)
            if v is not None and not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1)")

    @property
    def estimate(self) -> float:
        return float(self.estimates[0])

    def as_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "estimates": self.estimates.tolist(),
            "stderr": None if self.stderr is None else self.stderr.tolist(),
            "epsilon": self.epsilon,
            "delta": self.delta,
            "shots": self.shots,
            "kappa": self.kappa,
            "cap_exceeded": self.cap_exceeded,
            "required_shots": self.required_shots,
            **self.details,
        }


# ------------------------------------------------------------- Heisenberg path


@dataclass(frozen=True)
class _BackPath:
    """Backward propagation of one Pauli term.

    ``cuts[t]`` is the (signed) operator just after noise layer ``t + 1``;
    ``damping`` the product of all noise eigenvalues along the way and
    ``final`` the operator that meets the input state.
    """

    cuts: tuple[PauliString, ...]
    damping: float
    final: PauliString

    def input_value(self, x: int = 0) -> float:
        P = self.final
        if P.x:
            return 0.0
        return float(P.sign * (-1) ** ((P.z & x).bit_count() & 1))


def _back_path(circuit: LayeredCircuit, P: PauliString, noise_override=None) -> _BackPath:
    if not circuit.is_clifford:
        raise TypeError("needs a Clifford circuit")
    inv = [None if layer.unitary is None else layer.unitary.inverse() for layer in circuit.layers]
    cuts = [None] * circuit.D
    damp = 1.0
    O = P
    for t in range(circuit.D - 1, -1, -1):
        cuts[t] = O
        noise = circuit.layers[t].noise if noise_override is None else noise_override[t]
        if noise is not None:
            damp *= pauli_eigenvalue(noise, O)
        if inv[t] is not None:
            O = inv[t].conjugate(O)
    return _BackPath(tuple(cuts), damp, O)


def noisy_expectation(circuit: LayeredCircuit, O, x: int = 0) -> float:
    """``Tr(O Phi(|x><x|))`` for a Clifford circuit with Pauli-diagonal noise."""
    O = _as_sum(O) if not isinstance(O, PauliSum) else O
    total = 0.0
    for c, P in O.terms:
        bp = _back_path(circuit, P)
        total += c * bp.damping * bp.input_value(x)
    return total


def noiseless_expectation(circuit: LayeredCircuit, O, x: int = 0) -> float:
    return noisy_expectation(drop_noise(circuit), O, x)


# ------------------------------------------------------------------------ PEC


@dataclass(frozen=True)
class QuasiProbRep:
    """Signed weights ``a_sigma`` of Pauli conjugations that invert a channel."""

    weights: dict[str, float]

    @property
    def gamma(self) -> float:
        return float(sum(abs(a) for a in self.weights.values()))

    @property
    def letters(self) -> tuple[str, ...]:
        return tuple(self.weights)

    def probabilities(self) -> np.ndarray:
        w = np.array([abs(a) for a in self.weights.values()])
        return w / w.sum()

    def signs(self) -> np.ndarray:
        return np.array([1.0 if a >= 0 else -1.0 for a in self.weights.values()])


def pec_inverse_representation(p: float) -> QuasiProbRep:
    """Quasi-probability form of the inverse single-qubit depolarizing map."""
    if not 0 < p <= 1:
        raise ValueError("depolarizing parameter must be in (0, 1] to invert")
    a_i = (p + 3) / (4 * p)
    a_o = (p - 1) / (4 * p)
    return QuasiProbRep({"I": a_i, "X": a_o, "Y": a_o, "Z": a_o})


def _pec_noise(circuit: LayeredCircuit) -> float:
    ps = {layer.noise.p for layer in circuit.layers if layer.noise is not None
          and isinstance(layer.noise, DepolarizingSpec) and layer.noise.scope == "local"}
    others = [layer.noise for layer in circuit.layers if layer.noise is not None
              and not (isinstance(layer.noise, DepolarizingSpec) and layer.noise.scope == "local")]
    if others:
        raise TypeError("PEC is implemented for local depolarizing noise only")
    if len(ps) > 1:
        raise ValueError("PEC needs the same depolarizing parameter on every layer")
    return ps.pop() if ps else 1.0


# letter index: I=0, X=1, Y=2, Z=3
_ANTI = np.array([[0, 0, 0, 0], [0, 0, 1, 1], [0, 1, 0, 1], [0, 1, 1, 0]], dtype=np.int8)
_LETTER_INDEX = {"I": 0, "X": 1, "Y": 2, "Z": 3}


def _pec_shots(circuit: LayeredCircuit, O: PauliSum, shots: int, rng) -> np.ndarray:
    """Single-shot PEC values for ``O`` (one Pauli term is sampled per shot)."""
    p = _pec_noise(circuit)
    rep = pec_inverse_representation(p)
    gamma = rep.gamma
    n = circuit.n
    noisy_t = [t for t, layer in enumerate(circuit.layers) if layer.noise is not None]
    L = n * len(noisy_t)
    coeffs = np.array([c for c, _ in O.terms])
    norm1 = float(np.abs(coeffs).sum())
    if norm1 == 0:
        return np.zeros(shots)
    term_idx = rng.choice(len(coeffs), size=shots, p=np.abs(coeffs) / norm1)
    out = np.empty(shots)
    probs = rep.probabilities()
    sgn = rep.signs()
    for k, (c, P) in enumerate(O.terms):
        sel = np.nonzero(term_idx == k)[0]
        if not len(sel):
            continue
        m = len(sel)
        bp = _back_path(circuit, P)
        mu0 = bp.damping * bp.input_value()
        letters = np.array(
            [[_LETTER_INDEX[bp.cuts[t].letter(q)] for q in range(n)] for t in noisy_t], dtype=np.int8
        ).reshape(-1)
        ins = rng.choice(4, size=(m, L), p=probs)
        weight_sign = np.prod(sgn[ins], axis=1) if L else np.ones(m)
        flips = _ANTI[ins, letters[None, :]].sum(axis=1) & 1 if L else np.zeros(m, dtype=int)
        mu = mu0 * np.where(flips == 1, -1.0, 1.0)
        outcome = np.where(rng.random(m) < (1 + mu) / 2, 1.0, -1.0)
        out[sel] = np.sign(c) * norm1 * gamma**L * weight_sign * outcome
    return out


def pec_estimate(circuit: LayeredCircuit, O, shots: int, seed=None) -> MitigationResult:
    """Probabilistic error cancellation for local depolarizing noise.

    Each shot inserts one Pauli per qubit after every noise layer, drawn from
    ``|a| / Gamma``, and reports ``sign * Gamma^L * outcome``.
    """
    if shots < 1:
        raise ValueError("shots must be positive")
    O = _as_sum(O) if not isinstance(O, PauliSum) else O
    vals = _pec_shots(circuit, O, shots, as_rng(seed))
    var = float(np.var(vals, ddof=1)) if shots > 1 else math.inf
    p = _pec_noise(circuit)
    L = circuit.n * sum(layer.noise is not None for layer in circuit.layers)
    return MitigationResult(
        [float(np.mean(vals))], None, None, shots, "pec",
        stderr=[math.sqrt(var / shots)],
        details={"variance": var, "gamma": pec_inverse_representation(p).gamma, "locations": L},
    )


def pec_exact_expectation(circuit: LayeredCircuit, O, x: int = 0) -> float:
    """Sum of ``prod a_sigma * Tr(O Phi_sigma(rho))`` over every insertion pattern.

    Each term is evaluated by dense evolution, so this is an independent
    oracle for the PEC estimator. Cost is ``4^(nL)`` dense runs.
    """
    O = _as_sum(O) if not isinstance(O, PauliSum) else O
    p = _pec_noise(circuit)
    rep = pec_inverse_representation(p)
    n = circuit.n
    noisy_t = [t for t, layer in enumerate(circuit.layers) if layer.noise is not None]
    L = n * len(noisy_t)
    if 4**L > 1 << 16:
        raise ValueError("too many insertion patterns for an exact sum")
    letters = rep.letters
    weights = rep.weights
    total = 0.0
    for pattern in itertools.product(range(4), repeat=L):
        w = math.prod(weights[letters[i]] for i in pattern)
        rho = basis_state(n, x)
        k = 0
        for t, layer in enumerate(circuit.layers):
            if layer.unitary is not None:
                rho = apply_clifford(rho, layer.unitary)
            if layer.noise is not None:
                rho = apply_channel_dense(layer.noise, rho)
                label = "".join(letters[i] for i in pattern[k : k + n])
                k += n
                S = pauli_matrix(PauliString.from_label(label))
                rho = S @ rho @ S
        total += w * expectation(rho, O)
    return total


# ------------------------------------------------------------------------ ZNE


def richardson_coefficients(scales: Sequence[float], order: int) -> np.ndarray:
    """Weights ``g`` with ``sum g_j f(scale_j)`` = degree-``order`` fit at zero."""
    s = np.asarray(scales, dtype=float)
    if order < 0:
        raise ValueError("order must be non-negative")
    if len(np.unique(s)) != len(s):
        raise ValueError("degenerate extrapolation nodes: scales repeat")
    if len(s) < order + 1:
        raise ValueError(f"order {order} needs at least {order + 1} distinct scales")
    V = np.vander(s, order + 1, increasing=True)
    if np.linalg.matrix_rank(V) < order + 1:
        raise ValueError("degenerate extrapolation nodes")
    return np.linalg.pinv(V)[0]


def _scaled(circuit: LayeredCircuit, lam: float) -> LayeredCircuit:
    layers = []
    for layer in circuit.layers:
        nz = layer.noise
        if nz is not None:
            if not isinstance(nz, DepolarizingSpec):
                raise TypeError("noise scaling p -> p^lambda needs depolarizing noise")
            if nz.p < 0:
                raise ValueError("noise scaling needs p >= 0")
            nz = DepolarizingSpec(nz.p**lam, nz.scope, nz.n)
        layers.append(Layer(layer.unitary, nz))
    return replace(circuit, layers=tuple(layers))


def _pm1_samples(mu: float, m: int, rng) -> np.ndarray:
    return np.where(rng.random(m) < (1 + mu) / 2, 1.0, -1.0)


def _sum_shots(circuit: LayeredCircuit, O: PauliSum, m: int, rng) -> np.ndarray:
    """Plain (unmitigated) single-shot samples of ``O``."""
    coeffs = np.array([c for c, _ in O.terms])
    norm1 = float(np.abs(coeffs).sum())
    if norm1 == 0:
        return np.zeros(m)
    idx = rng.choice(len(coeffs), size=m, p=np.abs(coeffs) / norm1)
    out = np.empty(m)
    for k, (c, P) in enumerate(O.terms):
        sel = np.nonzero(idx == k)[0]
        if len(sel):
            mu = noisy_expectation(circuit, PauliSum.from_pauli(P))
            out[sel] = np.sign(c) * norm1 * _pm1_samples(mu, len(sel), rng)
    return out


def zne_estimate(
    circuit: LayeredCircuit,
    scales: Sequence[float],
    O,
    shots: int | None = None,
    order: int = 1,
    seed=None,
) -> MitigationResult:
    """Zero-noise extrapolation with noise scaled as ``p -> p^lambda``.

    ``shots`` is per scale; ``shots=None`` uses exact expectations. The
    reported stderr is ``sqrt(sum g_j^2 var_j / shots)``.
    """
    O = _as_sum(O) if not isinstance(O, PauliSum) else O
    g = richardson_coefficients(scales, order)
    rng = as_rng(seed)
    vals, vars_ = [], []
    for lam in scales:
        c = _scaled(circuit, lam)
        if shots is None:
            vals.append(noisy_expectation(c, O))
            vars_.append(0.0)
        else:
            if shots < 2:
                raise ValueError("need at least two shots per scale")
            x = _sum_shots(c, O, shots, rng)
            vals.append(float(np.mean(x)))
            vars_.append(float(np.var(x, ddof=1)))
    vals = np.array(vals)
    est = float(g @ vals)
    se = 0.0 if shots is None else math.sqrt(float(np.sum(g**2 * np.array(vars_)) / shots))
    total = 1 if shots is None else shots * len(scales)
    return MitigationResult(
        [est], None, None, total, "zne", stderr=[se],
        details={"scales": list(map(float, scales)), "order": order, "node_values": vals.tolist(),
                 "coefficients": g.tolist()},
    )


# ------------------------------------------------------- virtual distillation


def virtual_distillation_estimate(rho: np.ndarray, O) -> float:
    """``Tr(O rho^2) / Tr(rho^2)``."""
    O = _as_sum(O) if not isinstance(O, PauliSum) else O
    pur = purity(rho)
    if pur < 1e-12:
        raise ValueError("purity too small for virtual distillation")
    return expectation(rho @ rho, O) / pur


# --------------------------------------------------------- weak mitigation


@dataclass(frozen=True)
class MoMPlan:
    """``blocks`` odd count of blocks of ``block_size`` samples each."""

    blocks: int
    block_size: int
    eta: float
    failure: float

    @property
    def shots(self) -> int:
        return self.blocks * self.block_size


def _block_failure(b: int, var: float, eps: float, R: float | None) -> float:
    """Bound on ``P(|block mean - mean| > eps)``: Chebyshev, or Bernstein if bounded."""
    cheb = var / (b * eps * eps) if var > 0 else 0.0
    if R is None:
        return min(1.0, cheb)
    bern = 2 * math.exp(-b * eps * eps / (2 * var + 2 * R * eps / 3))
    return min(1.0, cheb if var > 0 else 1.0, bern)


def plan_median_of_means(
    var: float, eps: float, delta: float, R: float | None = None, max_blocks: int = 201
) -> MoMPlan:
    """Cheapest odd block count and block size meeting ``(eps, delta)``.

    The median fails only if at least half the blocks fail, which is a
    binomial tail in the per-block failure bound.
    """
    best = None
    for K in range(1, max_blocks + 1, 2):

        def fails(b):
            eta = _block_failure(b, var, eps, R)
            return stats.binom.sf(K // 2, K, eta), eta

        lo, hi = MIN_BLOCK, MIN_BLOCK
        while fails(hi)[0] > delta:
            hi *= 2
            if hi > 1 << 62:
                raise OverflowError("no feasible plan")
        if hi > MIN_BLOCK:
            lo = hi // 2
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if fails(mid)[0] <= delta:
                    hi = mid
                else:
                    lo = mid
        f, eta = fails(hi)
        plan = MoMPlan(K, hi, eta, f)
        if best is None or plan.shots < best.shots:
            best = plan
        if K * MIN_BLOCK > best.shots:
            break
    return best


def hoeffding_shots(n_obs: int, eps: float, delta: float, R: float = 1.0) -> int:
    """Plain-averaging shots per observable for values in ``[-R, R]``."""
    return math.ceil(2 * R * R * math.log(2 * n_obs / delta) / (eps * eps))


def _median_of_means(x: np.ndarray, K: int, b: int) -> float:
    return float(np.median(x[: K * b].reshape(K, b).mean(axis=1)))


class _Sampler:
    """Per-observable single-shot sampler for one protocol."""

    def __init__(self, protocol, circuit, noise, O: PauliSum, scales, order):
        self.protocol = protocol
        self.O = O
        self.units = 1
        norm1 = float(sum(abs(c) for c, _ in O.terms))
        if protocol == "pec":
            self.circuit = attach_noise(circuit, noise)
            p = _pec_noise(self.circuit)
            L = circuit.n * self.circuit.D
            self.R = norm1 * pec_inverse_representation(p).gamma ** L + norm1
            self.draw = lambda m, rng: _pec_shots(self.circuit, O, m, rng)
        elif protocol == "zne":
            self.circuit = attach_noise(circuit, noise)
            g = richardson_coefficients(scales, order)
            sc = [_scaled(self.circuit, lam) for lam in scales]
            self.units = len(scales)
            self.R = 2 * norm1 * float(np.abs(g).sum())

            def draw(m, rng):
                return sum(gi * _sum_shots(c, O, m, rng) for gi, c in zip(g, sc))

            self.draw = draw
        elif protocol == "vd":
            # two-copy functional: one +/-1 shot for Tr(O rho^2), one for Tr(rho^2)
            rho = evolve(basis_state(circuit.n), attach_noise(circuit, noise))
            num = expectation(rho @ rho, O)
            den = purity(rho)
            self.units = 2
            self.R = None
            self.ratio = (num, den)

            def draw(m, rng):
                a = norm1 * _pm1_samples(num / norm1 if norm1 else 0.0, m, rng)
                b = _pm1_samples(den, m, rng)
                return np.stack([a, b])

            self.draw = draw
        else:
            raise ValueError(f"unknown protocol {protocol!r}")

    def statistic(self, x: np.ndarray) -> np.ndarray:
        """Per-shot linearised values used for variance estimates."""
        if self.protocol != "vd":
            return x
        a, b = x
        ma, mb = a.mean(), b.mean()
        if mb <= 0:
            return np.full(a.shape, np.inf)
        r = ma / mb
        return (a - r * b) / mb + r

    def mom(self, x: np.ndarray, K: int, b: int) -> float:
        if self.protocol != "vd":
            return _median_of_means(x, K, b)
        a = x[0, : K * b].reshape(K, b).mean(axis=1)
        d = x[1, : K * b].reshape(K, b).mean(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return float(np.median(np.where(d > 0, a / d, np.inf)))


def weak_mitigate(
    protocol: str,
    circuit: LayeredCircuit,
    noise,
    M: ObservableSet,
    epsilon: float,
    delta: float,
    seed=None,
    shot_cap: int = 10**7,
    scales: Sequence[float] = (1.0, 2.0, 3.0),
    order: int = 1,
    pilot: int = 500,
    max_rounds: int = 8,
) -> MitigationResult:
    """Estimate every observable in ``M`` to ``epsilon`` jointly with prob. ``1 - delta``.

    Each observable gets confidence ``delta / len(M)``. A pilot run gives a
    variance estimate, inflated to its 99% chi-square upper bound, the
    median-of-means planner sizes the blocks from that, and the
    block size is doubled (with fresh shots) until the variance seen in the
    data is no larger than the variance planned for. If the plan needs more
    than ``shot_cap`` shots in total the run stops and the pilot estimates are
    returned with ``cap_exceeded=True``.

    The guarantee is statistical: for ZNE it concerns the extrapolated value,
    whose bias is not controlled here.
    """
    if not 0 < epsilon < 1 or not 0 < delta < 1:
        raise ValueError("epsilon and delta must lie in (0, 1)")
    if pilot < 2:
        raise ValueError("the pilot needs at least two shots")
    if M.n != circuit.n:
        raise ValueError("observables and circuit act on different qubit counts")
    rng = as_rng(seed)
    dprime = delta / len(M)
    samplers = [_Sampler(protocol, drop_noise(circuit), noise, O, scales, order) for O in M]
    used = 0
    pilots = []
    plans = []
    inflate = float(stats.chi2.ppf(0.99, pilot - 1) / (pilot - 1))
    for s in samplers:
        x = s.draw(pilot, rng)
        used += pilot * s.units
        pilots.append(x)
        v = float(np.var(s.statistic(x), ddof=1)) * inflate
        plans.append((v, plan_median_of_means(v, epsilon, dprime, s.R)))
    need = used + sum(pl.shots * s.units for (_, pl), s in zip(plans, samplers))
    if need > shot_cap:
        est = [s.mom(x, 1, x.shape[-1]) for s, x in zip(samplers, pilots)]
        se = [math.sqrt(v / inflate / pilot) for v, _ in plans]
        return MitigationResult(
            est, epsilon, delta, used, protocol, stderr=se, cap_exceeded=True, required_shots=int(need),
            details={"observables": list(M.labels), "shot_cap": shot_cap},
        )
    estimates, errors, block_info = [], [], []
    for s, (v, pl) in zip(samplers, plans):
        for _ in range(max_rounds):
            if used + pl.shots * s.units > shot_cap:
                pad = [math.nan] * (len(M) - len(estimates))
                return MitigationResult(
                    [*estimates, *pad], epsilon, delta, used, protocol,
                    stderr=[*errors, *pad], cap_exceeded=True,
                    required_shots=int(used + pl.shots * s.units),
                    details={"observables": list(M.labels), "shot_cap": shot_cap},
                )
            x = s.draw(pl.shots, rng)
            used += pl.shots * s.units
            seen = float(np.var(s.statistic(x), ddof=1))
            if seen <= v:
                break
            v = seen
            bigger = plan_median_of_means(v, epsilon, dprime, s.R)
            pl = MoMPlan(bigger.blocks, max(bigger.block_size, 2 * pl.block_size), bigger.eta, bigger.failure)
        estimates.append(s.mom(x, pl.blocks, pl.block_size))
        errors.append(math.sqrt(seen / (pl.blocks * pl.block_size)))
        block_info.append({"blocks": pl.blocks, "block_size": pl.block_size, "variance": v})
    return MitigationResult(
        estimates, epsilon, delta, used, protocol, stderr=errors,
        details={"observables": list(M.labels), "plans": block_info, "shot_cap": shot_cap},
    )


# -------------------------------------------------------- strong mitigation


@dataclass(frozen=True)
class StrongVerdict:
    """Outcome of a strong-mitigation check: ``pass``, ``fail`` or ``inconclusive``."""

    mode: str
    verdict: str
    statistic: float
    threshold: float
    certified_tv: float | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def strong_check(
    mu,
    psi: np.ndarray,
    epsilon: float | None = None,
    kappa: float | None = None,
    shots: int = 100_000,
    seed=None,
    confidence: float = 0.95,
) -> StrongVerdict:
    """Check a sampler ``mu`` against the exact distribution ``psi``.

    ``mu`` is either an exact probability vector or a callable
    ``(m, rng) -> outcome indices``. Give ``epsilon`` for the additive (TV)
    test or ``kappa`` for the multiplicative test ``psi(z) / mu(z) <= kappa``.
    A multiplicative pass also certifies TV ``<= sqrt(1 - 1/kappa)``.
    """
    if (epsilon is None) == (kappa is None):
        raise ValueError("give exactly one of epsilon or kappa")
    psi = np.asarray(psi, dtype=float)
    K = len(psi)
    support = np.nonzero(psi > 0)[0]
    exact = not callable(mu)
    if exact:
        mu_hat = np.asarray(mu, dtype=float)
        m = None
    else:
        rng = as_rng(seed)
        draws = np.asarray(mu(shots, rng))
        m = len(draws)
        mu_hat = np.bincount(draws, minlength=K) / m
    if epsilon is not None:
        tv = tv_distance(mu_hat, psi)
        if exact:
            verdict = "pass" if tv <= epsilon else "fail"
            slack = 0.0
        else:
            # E[TV(emp, mu)] <= sqrt(K / m) / 2 plus a McDiarmid tail
            slack = 0.5 * math.sqrt(K / m) + math.sqrt(math.log(2 / (1 - confidence)) / (2 * m))
            if tv + slack <= epsilon:
                verdict = "pass"
            elif tv - slack > epsilon:
                verdict = "fail"
            else:
                verdict = "inconclusive"
        return StrongVerdict("additive", verdict, tv, epsilon, details={"slack": slack, "shots": m})
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    if exact:
        if np.any(mu_hat[support] <= 0):
            ratio = math.inf
        else:
            ratio = float(np.max(psi[support] / mu_hat[support]))
        verdict = "pass" if ratio <= kappa + 1e-12 else "fail"
        cert = math.sqrt(1 - 1 / kappa) if verdict == "pass" else None
        return StrongVerdict("multiplicative", verdict, ratio, kappa, cert)
    counts = np.rint(mu_hat * m).astype(int)
    if np.any(counts[support] == 0):
        return StrongVerdict(
            "multiplicative", "inconclusive", math.inf, kappa,
            details={"reason": "support point never sampled", "shots": m},
        )
    alpha = (1 - confidence) / len(support)
    lo = stats.beta.ppf(alpha / 2, counts[support], m - counts[support] + 1)
    hi = stats.beta.ppf(1 - alpha / 2, counts[support] + 1, m - counts[support])
    plug = float(np.max(psi[support] / mu_hat[support]))
    if np.max(psi[support] / lo) <= kappa:
        verdict = "pass"
    elif np.max(psi[support] / hi) > kappa:
        verdict = "fail"
    else:
        verdict = "inconclusive"
    cert = math.sqrt(1 - 1 / kappa) if verdict == "pass" else None
    return StrongVerdict("multiplicative", verdict, plug, kappa, cert, {"shots": m})


def ideal_distribution(circuit: LayeredCircuit, x: int = 0) -> np.ndarray:
    """Noiseless computational-basis distribution of ``circuit`` on ``|x>``."""
    return basis_probabilities(evolve(basis_state(circuit.n, x), drop_noise(circuit)))


def certified_tv_from_kappa(kappa: float) -> float:
    """TV bound implied by ``psi / mu <= kappa`` (KL at most ``log2 kappa`` bits)."""
    return bretagnolle_huber_bound(math.log2(kappa))

