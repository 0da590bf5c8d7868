"""Parity distributions, a statistical-query oracle and hypothesis selection.

An outcome ``x ⋈ y`` of ``n + 1`` bits is stored as the integer
``(x << 1) | y``; bit strings print ``x`` first. A secret ``s`` is an n-bit
integer (or bit string) and ``P_s`` is uniform over outcomes with
``y = x . s mod 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dense import tv_distance
from .records import derive_seed, run_tasks

__all__ = [
    "PARITY_MAX_BITS",
    "YATRACOS_C",
    "ParityDistribution",
    "StatQuery",
    "SQOracleState",
    "YatracosResult",
    "parse_bits",
    "parity_sample",
    "expectation_Zb",
    "expectation_Zb_bruteforce",
    "sq_oracle_answer",
    "yatracos_sample_size",
    "yatracos_select",
    "parity_tv",
    "parity_tv_bruteforce",
    "mixed_target",
    "weak_to_strong_experiment",
    "PARITY_COLUMNS",
]

PARITY_COLUMNS = ("rep", "route", "n", "secret", "guess", "success", "cost", "selected_tv")

PARITY_MAX_BITS = 14
YATRACOS_C = 8


def parse_bits(v, width: int | None = None) -> int:
    """Bit string (``"0110"``) or int to int; checks ``width`` when given."""
    if isinstance(v, str):
        if any(c not in "01" for c in v) or (width is not None and len(v) != width):
            raise ValueError(f"expected a {width}-bit string, got {v!r}")
        return int(v, 2) if v else 0
    v = int(v)
    if v < 0 or (width is not None and v >> width):
        raise ValueError(f"{v} does not fit in {width} bits")
    return v


def _dot(a, b) -> np.ndarray | int:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return (np.bitwise_count(np.asarray(a, dtype=np.int64) & np.asarray(b, dtype=np.int64)) & 1).astype(np.int64)
    return (int(a) & int(b)).bit_count() & 1


@dataclass(frozen=True)
class ParityDistribution:
    """``P_s`` over ``n + 1``-bit outcomes."""

    s: int
    n: int

    def __post_init__(self):
        object.__setattr__(self, "s", parse_bits(self.s, self.n))

    def probabilities(self) -> np.ndarray:
        x = np.arange(2**self.n, dtype=np.int64)
        p = np.zeros(2 ** (self.n + 1))
        p[(x << 1) | _dot(x, self.s)] = 2.0**-self.n
        return p

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.int64)
        return (z & 1) == _dot(z >> 1, self.s)


def parity_sample(s, n: int | None = None, seed=None, size: int | None = None):
    """Draw ``x`` uniformly and return ``x ⋈ (x . s)``.

    Returns a bit string, or an int array of encoded outcomes when ``size``
    is given.
    """
    if n is None:
        if not isinstance(s, str):
            raise ValueError("give n when the secret is an integer")
        n = len(s)
    s = parse_bits(s, n)
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    m = 1 if size is None else size
    x = rng.integers(0, 2**n, size=m, dtype=np.int64)
    z = (x << 1) | _dot(x, s)
    if size is None:
        return format(int(z[0]), f"0{n + 1}b")
    return z


def expectation_Zb(s, b, n: int | None = None) -> float:
    """``<psi_s| Z^b |psi_s>``: 1 if ``b_x = b_y * s`` bitwise, else 0."""
    if n is None:
        if not isinstance(s, str):
            raise ValueError("give n when the secret is an integer")
        n = len(s)
    s = parse_bits(s, n)
    b = parse_bits(b, n + 1)
    bx, by = b >> 1, b & 1
    return 1.0 if bx == (s if by else 0) else 0.0


def expectation_Zb_bruteforce(s, b, n: int) -> float:
    """The same expectation by summing the character over all ``x``."""
    s = parse_bits(s, n)
    b = parse_bits(b, n + 1)
    x = np.arange(2**n, dtype=np.int64)
    z = (x << 1) | _dot(x, s)
    return float(np.mean(1 - 2 * _dot(z, b)))


@dataclass(frozen=True)
class StatQuery:
    """``q(x, y) -> {0, 1}`` with tolerance ``tau``.

    ``q`` receives int arrays ``x`` and ``y`` and must return a 0/1 array.
    ``b`` is set for the Z-type query ``q_b(z) = (1 + (-1)^(b.z)) / 2``.
    """

    q: Callable[[np.ndarray, np.ndarray], np.ndarray]
    tau: float
    b: int | None = None

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tolerance must be non-negative")

    @classmethod
    def zb(cls, b: int, tau: float) -> "StatQuery":
        def q(x, y):
            z = (np.asarray(x, dtype=np.int64) << 1) | np.asarray(y, dtype=np.int64)
            return 1 - _dot(z, b)

        return cls(q, tau, int(b))


@dataclass
class SQOracleState:
    """Oracle holding a secret; ``log`` has one ``(b, truth, answer)`` per query."""

    secret: int
    n: int
    policy: str = "adversarial-clamp"
    seed: int | None = None
    counter: int = 0
    log: list = field(default_factory=list)

    def __post_init__(self):
        if self.policy not in ("adversarial-clamp", "honest-noisy"):
            raise ValueError(f"unknown oracle policy {self.policy!r}")
        self.secret = parse_bits(self.secret, self.n)
        self._rng = np.random.default_rng(self.seed)

    def true_value(self, query: StatQuery) -> float:
        if query.b is not None:
            return (1 + expectation_Zb(self.secret, query.b, self.n)) / 2
        x = np.arange(2**self.n, dtype=np.int64)
        vals = np.asarray(query.q(x, _dot(x, self.secret)))
        if np.any((vals != 0) & (vals != 1)):
            raise ValueError("statistical query must be 0/1 valued")
        return float(vals.mean())


def sq_oracle_answer(state: SQOracleState, query: StatQuery) -> float:
    """Answer within ``tau`` of ``E_{P_s}[q]`` according to the oracle policy.

    The clamp policy reports 1/2 whenever that is allowed and otherwise moves
    the truth ``tau`` towards 1/2, revealing as little as possible.
    """
    truth = state.true_value(query)
    tau = query.tau
    if state.policy == "honest-noisy":
        ans = truth + (state._rng.uniform(-tau, tau) if tau > 0 else 0.0)
    elif abs(truth - 0.5) <= tau:
        ans = 0.5
    else:
        ans = truth - math.copysign(tau, truth - 0.5)
    state.counter += 1
    state.log.append((query.b, truth, ans))
    return ans


# ------------------------------------------------------------------ Yatracos


@dataclass(frozen=True)
class YatracosResult:
    """``index`` into the hypothesis list and the minimum-distance score."""

    index: int
    hypothesis: object
    score: float
    samples: int
    samples_required: int | None
    guarantee_applies: bool | None


def yatracos_sample_size(k: int, eps: float, delta: float, C: float = YATRACOS_C) -> int:
    """``ceil(C (ln k + ln(1/delta)) / eps^2)``."""
    return math.ceil(C * (math.log(k) + math.log(1 / delta)) / eps**2)


def _fast_parity_scores(z: np.ndarray, secrets: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Minimum-distance scores for distinct parity hypotheses.

    With ``A_jk = supp P_j minus supp P_k`` (``j < k``), ``P_i(A_jk)`` is 1/2
    for ``i = j``, 0 for ``i = k`` and 1/4 otherwise, while the empirical mass
    is ``e_j - G_jk`` with ``e_j`` the fraction of samples in ``supp P_j``
    and ``G_jk`` the fraction in both supports.
    """
    m = len(z)
    k = len(secrets)
    x, y = z >> 1, z & 1
    E = (_dot(x[:, None], secrets[None, :]) == y[:, None]).astype(np.float32)
    e = E.sum(axis=0, dtype=np.float64) / m
    row_term = np.zeros(k)
    col_term = np.zeros(k)
    NEG, POS = -np.inf, np.inf
    top = np.full((k, 2), NEG)
    top_col = np.full((k, 2), -1, dtype=np.int64)
    bot = np.full((k, 2), POS)
    bot_col = np.full((k, 2), -1, dtype=np.int64)
    cols = np.arange(k)
    for start in range(0, k, chunk):
        J = np.arange(start, min(k, start + chunk))
        G = (E[:, J].T @ E).astype(np.float64) / m
        A = e[J, None] - G
        upper = cols[None, :] > J[:, None]
        Au = np.where(upper, A, np.nan)
        with np.errstate(all="ignore"):
            has = upper.any(axis=1)
            row_term[J[has]] = np.nanmax(np.abs(0.5 - Au[has]), axis=1)
            col_term = np.maximum(col_term, _colmax(np.abs(Au)))
        hi = np.where(upper, A, NEG)
        lo = np.where(upper, A, POS)
        r = np.arange(len(J))
        c1 = np.argmax(hi, axis=1)
        v1 = hi[r, c1]
        hi[r, c1] = NEG
        c2 = np.argmax(hi, axis=1)
        v2 = hi[r, c2]
        top[J] = np.stack([v1, v2], axis=1)
        top_col[J] = np.stack([c1, c2], axis=1)
        c1 = np.argmin(lo, axis=1)
        w1 = lo[r, c1]
        lo[r, c1] = POS
        c2 = np.argmin(lo, axis=1)
        w2 = lo[r, c2]
        bot[J] = np.stack([w1, w2], axis=1)
        bot_col[J] = np.stack([c1, c2], axis=1)
    mx = _exclusive_extreme(top, top_col, k, largest=True)
    mn = _exclusive_extreme(bot, bot_col, k, largest=False)
    third = np.zeros(k)
    ok = np.isfinite(mx)
    third[ok] = np.maximum(mx[ok] - 0.25, 0.25 - mn[ok])
    return np.maximum(np.maximum(row_term, col_term), third)


def _colmax(a: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        out = np.where(np.isnan(a), -np.inf, a).max(axis=0)
    return np.maximum(out, 0.0)


def _exclusive_extreme(vals, cols, k, largest: bool) -> np.ndarray:
    """For each i, the extreme upper-triangle entry outside row i and column i.

    ``vals``/``cols`` hold each row's two most extreme entries. A row whose
    best entry lies in column i falls back to its second best; the scan over
    rows sorted by best entry skips at most those rows plus row i itself.
    """
    sign = 1.0 if largest else -1.0
    v1 = sign * vals[:, 0]
    v2 = sign * vals[:, 1]
    c1 = cols[:, 0]
    valid = np.isfinite(v1)
    alt = np.full(k, -np.inf)
    np.maximum.at(alt, c1[valid], v2[valid])
    skip: dict[int, set] = {}
    for j in np.nonzero(valid)[0].tolist():
        skip.setdefault(int(c1[j]), set()).add(j)
    order = [j for j in np.argsort(-v1, kind="stable").tolist() if valid[j]]
    out = alt.copy()
    for i in range(k):
        excl = skip.get(i, ())
        for j in order:
            if j != i and j not in excl:
                out[i] = max(out[i], v1[j])
                break
    return sign * out


def _general_scores(z: np.ndarray, hyps: list[np.ndarray]) -> np.ndarray:
    k = len(hyps)
    Q = np.array(hyps, dtype=float)
    emp = np.bincount(z, minlength=Q.shape[1]) / len(z)
    scores = np.zeros(k)
    for j in range(k):
        for l in range(j + 1, k):
            A = Q[j] > Q[l]
            dev = np.abs(Q[:, A].sum(axis=1) - emp[A].sum())
            scores = np.maximum(scores, dev)
    return scores


def yatracos_select(
    samples,
    hypotheses: Sequence,
    eps: float | None = None,
    delta: float | None = None,
    C: float = YATRACOS_C,
) -> YatracosResult:
    """Minimum-distance choice over the Yatracos sets ``{q_i > q_j}``, ``i < j``.

    ``hypotheses`` are :class:`ParityDistribution` values (fast closed-form
    path) or probability vectors over encoded outcomes. The result is always
    a member of the list. When ``eps`` and ``delta`` are given the report says
    whether the sample count meets ``C (ln k + ln 1/delta) / eps^2``.
    """
    if len(hypotheses) == 0:
        raise ValueError("empty hypothesis list")
    z = np.asarray(samples, dtype=np.int64)
    if z.ndim != 1 or len(z) == 0:
        raise ValueError("need a non-empty 1-d sample array")
    k = len(hypotheses)
    if all(isinstance(h, ParityDistribution) for h in hypotheses):
        ns = {h.n for h in hypotheses}
        if len(ns) != 1:
            raise ValueError("parity hypotheses of different lengths")
        secrets = np.array([h.s for h in hypotheses], dtype=np.int64)
        if len(np.unique(secrets)) != k:
            raise ValueError("duplicate parity hypotheses")
        scores = _fast_parity_scores(z, secrets) if k > 1 else np.zeros(1)
    else:
        hyps = [h.probabilities() if isinstance(h, ParityDistribution) else np.asarray(h, dtype=float)
                for h in hypotheses]
        scores = _general_scores(z, hyps)
    i = int(np.argmin(scores))
    need = yatracos_sample_size(k, eps, delta, C) if (eps and delta and k > 1) else None
    return YatracosResult(i, hypotheses[i], float(scores[i]), len(z), need,
                          None if need is None else len(z) >= need)


def parity_tv(s, s2, n: int | None = None) -> float:
    """Exact TV between two parity distributions: 0 or 1/2."""
    if n is None:
        if not (isinstance(s, str) and isinstance(s2, str)):
            raise ValueError("give n when secrets are integers")
        if len(s) != len(s2):
            raise ValueError("secrets of different lengths")
        n = len(s)
    return 0.0 if parse_bits(s, n) == parse_bits(s2, n) else 0.5


def parity_tv_bruteforce(s, s2, n: int) -> float:
    return tv_distance(ParityDistribution(s, n).probabilities(), ParityDistribution(s2, n).probabilities())


def mixed_target(s, n: int, weight: float = 1 / 8) -> np.ndarray:
    """``(1 - weight) P_s + weight * uniform``: TV ``weight / 2`` from ``P_s``."""
    return (1 - weight) * ParityDistribution(s, n).probabilities() + weight / 2 ** (n + 1)


# --------------------------------------------------------------- experiment


def _sampling_rep(task):
    n, m, weight, seed = task
    rng = np.random.default_rng(seed)
    s = int(rng.integers(0, 2**n))
    noisy = rng.random(m) < weight
    z = parity_sample(s, n, rng, size=m)
    z[noisy] = rng.integers(0, 2 ** (n + 1), size=int(noisy.sum()))
    hyps = [ParityDistribution(t, n) for t in range(2**n)]
    res = yatracos_select(z, hyps)
    tv = tv_distance(mixed_target(s, n, weight), hyps[res.index].probabilities())
    return s, res.index, tv


def _sq_rep(task):
    n, tau, budget, seed = task
    rng = np.random.default_rng(seed)
    s = int(rng.integers(0, 2**n))
    oracle = SQOracleState(s, n, "adversarial-clamp")
    order = rng.choice(2**n, size=budget, replace=False)
    guess = None
    for bx in order:
        ans = sq_oracle_answer(oracle, StatQuery.zb((int(bx) << 1) | 1, tau))
        if ans > 0.5:
            guess = int(bx)
            break
    if guess is None:
        # nothing revealed: guess among the candidates never queried
        rest = np.setdiff1d(np.arange(2**n), order, assume_unique=True)
        guess = int(rng.choice(rest)) if len(rest) else int(rng.integers(0, 2**n))
    return s, guess, oracle.counter


def weak_to_strong_experiment(
    n: int,
    tau: float,
    query_budget: int,
    seed: int = 0,
    reps: int = 500,
    sampling_reps: int | None = None,
    eps: float = 0.1,
    delta: float = 0.1,
    samples: int | None = None,
    target_weight: float = 1 / 8,
    sampling_n: int | None = None,
    workers: int | None = 1,
) -> tuple[dict, list[dict]]:
    """Sampling route versus Z-type statistical queries on random secrets.

    Sampling route: ``samples`` (default ``ceil(n / eps^2)``) draws from a
    target at TV ``target_weight / 2`` from ``P_s``, then Yatracos over all
    ``2^n`` parities. SQ route: ``query_budget`` distinct revealing-form
    queries ``b = b_x ⋈ 1`` against the clamping oracle, then a uniform guess
    among unqueried secrets. ``sampling_n`` runs the sampling route at a
    different size. Returns the report and one row per repetition.
    """
    if query_budget < 1:
        raise ValueError("query budget must be positive")
    if n > PARITY_MAX_BITS:
        raise ValueError(f"parity experiments are limited to n <= {PARITY_MAX_BITS}")
    if query_budget > 2**n:
        raise ValueError("query budget exceeds the number of candidate secrets")
    ns = n if sampling_n is None else sampling_n
    if ns > PARITY_MAX_BITS:
        raise ValueError(f"parity experiments are limited to n <= {PARITY_MAX_BITS}")
    m = math.ceil(ns / eps**2) if samples is None else int(samples)
    sreps = reps if sampling_reps is None else sampling_reps
    rows = []
    s_out = run_tasks(_sampling_rep, [(ns, m, target_weight, derive_seed(seed, 1, r)) for r in range(sreps)], workers)
    q_out = run_tasks(_sq_rep, [(n, tau, query_budget, derive_seed(seed, 2, r)) for r in range(reps)], workers)
    s_hits = sum(g == s for s, g, _ in s_out)
    q_hits = sum(g == s for s, g, _ in q_out)
    q_used = sum(u for _, _, u in q_out)
    for r, (s, g, tv) in enumerate(s_out):
        rows.append({"rep": r, "route": "sampling", "n": ns, "secret": s, "guess": g, "success": g == s,
                     "cost": m, "selected_tv": tv})
    for r, (s, g, u) in enumerate(q_out):
        rows.append({"rep": r, "route": "sq", "n": n, "secret": s, "guess": g, "success": g == s,
                     "cost": u, "selected_tv": math.nan})
    report = {
        "n": n,
        "tau": tau,
        "budget": query_budget,
        "sampling_success_rate": s_hits / sreps if sreps else math.nan,
        "sq_success_rate": q_hits / reps if reps else math.nan,
        "samples_used": m,
        "queries_used": q_used,
        "seed": seed,
        "sampling_n": ns,
        "sampling_reps": sreps,
        "sq_reps": reps,
        "hit_probability": query_budget / 2**n,
        "yatracos_constant": YATRACOS_C,
        "yatracos_samples_required": yatracos_sample_size(2**ns, eps, delta),
        "target_tv": target_weight / 2,
        "max_selected_tv": max((r[2] for r in s_out), default=math.nan),
    }
    return report, rows
