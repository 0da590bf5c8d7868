"""Purity of noisy Clifford circuits by Pauli-path propagation.

Writing the input basis state as ``2^-n sum_b (+-1) Z^b``, a Clifford layer
maps each Pauli to a single Pauli and a Pauli-diagonal channel rescales it, so
distinct paths stay orthogonal and

    Tr(rho_out^2) = 2^-n sum_b prod_t lambda_t(P_t(b))^2.

Signs never enter, so paths are propagated as phase-free symplectic vectors.
For ``n <= 31`` a vector is one int64 ``(x << n) | z``; larger registers use a
bit matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .circuits import (
    LayeredCircuit,
    attach_noise,
    build_brickwork,
    build_identity_circuit,
    build_mixing_circuit,
)
from .dense import (
    apply_clifford,
    basis_state,
    evolve,
    pauli_coefficients,
    purity as dense_purity,
    relative_entropy,
)
from .noise import (
    DepolarizingSpec,
    KrausChannel,
    PauliChannel,
    _local_eigenvalues,
    amplitude_damping,
    apply_channel_dense,
    noise_from_json,
    noise_to_json,
)
from .pauli import CliffordTableau, PauliString, as_rng, sample_random_clifford
from .records import ExperimentRecord, derive_seed, run_tasks

__all__ = [
    "UnsupportedNoiseError",
    "PurityEstimate",
    "WeightSpectrum",
    "LinearFit",
    "DecayPoint",
    "DecayCurve",
    "PATH_EXACT_MAX_QUBITS",
    "pauli_path_purity",
    "path_values",
    "weight_spectrum",
    "expected_weight_damping",
    "expected_purity_recursion",
    "mass_exponent",
    "per_qubit_exponent",
    "linear_fit",
    "decay_sweep",
    "nonunital_decay_experiment",
    "NonunitalCurve",
    "dense_purity_of",
]

PATH_EXACT_MAX_QUBITS = 20


class UnsupportedNoiseError(TypeError):
    """Raised when a noise layer is not Pauli-diagonal."""


# ---------------------------------------------------------------- propagation


class _PackedPaths:
    """Batch of phase-free Paulis stored as ``(x << n) | z`` int64 values."""

    def __init__(self, n: int, v: np.ndarray):
        self.n = n
        self.v = np.asarray(v, dtype=np.int64)
        self.low = (1 << n) - 1

    @classmethod
    def z_strings(cls, n, b):
        return cls(n, np.asarray(b, dtype=np.int64))

    def apply(self, T: CliffordTableau) -> None:
        n = self.n
        imgs = T.packed_images()
        # bit position k of v -> generator index
        gen_of_bit = [n + (n - 1 - k) if k < n else (n - 1 - (k - n)) for k in range(2 * n)]
        out = np.zeros_like(self.v)
        for start in range(0, 2 * n, 8):
            width = min(8, 2 * n - start)
            table = np.zeros(1 << width, dtype=np.int64)
            for j in range(width):
                img = imgs[gen_of_bit[start + j]]
                step = 1 << j
                table[step : 2 * step] = table[:step] ^ img
            out ^= table[(self.v >> start) & ((1 << width) - 1)]
        self.v = out

    def xz(self):
        return self.v >> self.n, self.v & self.low

    def weight(self) -> np.ndarray:
        x, z = self.xz()
        return np.bitwise_count(x | z).astype(np.int64)

    def letter_counts(self):
        x, z = self.xz()
        cx = np.bitwise_count(x & ~z).astype(np.int64)
        cy = np.bitwise_count(x & z).astype(np.int64)
        cz = np.bitwise_count(~x & z & self.low).astype(np.int64)
        return cx, cy, cz

    def anticommutes(self, Q: PauliString) -> np.ndarray:
        swapped = (int(Q.z) << self.n) | int(Q.x)
        return (np.bitwise_count(self.v & swapped) & 1).astype(bool)

    def is_identity(self) -> np.ndarray:
        return self.v == 0


class _BitPaths:
    """Same interface for any n, as a ``(batch, 2n)`` uint8 matrix."""

    def __init__(self, n: int, bits: np.ndarray):
        self.n = n
        self.bits = np.asarray(bits, dtype=np.uint8)

    @classmethod
    def z_strings(cls, n, b_bits):
        m = np.zeros((b_bits.shape[0], 2 * n), dtype=np.uint8)
        m[:, n:] = b_bits
        return cls(n, m)

    def apply(self, T: CliffordTableau) -> None:
        S = T.symplectic_matrix().astype(np.int64)
        self.bits = ((self.bits.astype(np.int64) @ S) & 1).astype(np.uint8)

    def xz(self):
        return self.bits[:, : self.n], self.bits[:, self.n :]

    def weight(self):
        x, z = self.xz()
        return (x | z).sum(axis=1).astype(np.int64)

    def letter_counts(self):
        x, z = self.xz()
        cx = (x & (1 - z)).sum(axis=1)
        cy = (x & z).sum(axis=1)
        cz = ((1 - x) & z).sum(axis=1)
        return cx.astype(np.int64), cy.astype(np.int64), cz.astype(np.int64)

    def anticommutes(self, Q: PauliString):
        n = self.n
        qx = np.array([(Q.x >> (n - 1 - q)) & 1 for q in range(n)], dtype=np.int64)
        qz = np.array([(Q.z >> (n - 1 - q)) & 1 for q in range(n)], dtype=np.int64)
        x, z = self.xz()
        return ((x.astype(np.int64) @ qz + z.astype(np.int64) @ qx) & 1).astype(bool)

    def is_identity(self):
        return ~self.bits.any(axis=1)


def _eigenvalues(noise, paths) -> np.ndarray:
    """Pauli-transfer eigenvalue of ``noise`` on every path."""
    if noise is None:
        return None
    if isinstance(noise, DepolarizingSpec):
        if noise.scope == "local":
            return float(noise.p) ** paths.weight()
        if noise.n is not None and noise.n != paths.n:
            raise ValueError(f"global channel on {noise.n} qubits, circuit on {paths.n}")
        return np.where(paths.is_identity(), 1.0, float(noise.p))
    if isinstance(noise, PauliChannel):
        if noise.local:
            lam = _local_eigenvalues(noise.q)
            cx, cy, cz = paths.letter_counts()
            return (lam["X"] ** cx) * (lam["Y"] ** cy) * (lam["Z"] ** cz)
        if noise.n != paths.n:
            raise ValueError(f"Pauli channel on {noise.n} qubits, circuit on {paths.n}")
        out = 0.0
        for label, q in noise.q.items():
            if q:
                anti = paths.anticommutes(PauliString.from_label(label))
                out = out + q * np.where(anti, -1.0, 1.0)
        return out
    raise UnsupportedNoiseError(
        f"{getattr(noise, 'kind', type(noise).__name__)} noise is not Pauli-diagonal; "
        "use the dense simulator (emlab.dense.evolve) instead"
    )


def _check_path_circuit(circuit: LayeredCircuit) -> None:
    if not circuit.is_clifford:
        raise TypeError("Pauli-path propagation needs Clifford (tableau) layers")
    for layer in circuit.layers:
        if isinstance(layer.noise, KrausChannel):
            _eigenvalues(layer.noise, None)


def path_values(circuit: LayeredCircuit, b, record_depths=None) -> np.ndarray:
    """``prod_t lambda_t^2`` for the Z-string paths ``b``.

    ``b`` is an int array of masks (``n <= 31``) or a ``(batch, n)`` bit array.
    With ``record_depths`` the result has one row per requested depth, each
    being the value after that many layers.
    """
    _check_path_circuit(circuit)
    n = circuit.n
    b = np.asarray(b)
    paths = _BitPaths.z_strings(n, b) if b.ndim == 2 else _PackedPaths.z_strings(n, b)
    depths = [circuit.D] if record_depths is None else sorted(set(int(d) for d in record_depths))
    if depths and depths[-1] > circuit.D:
        raise ValueError("requested depth exceeds the circuit depth")
    acc = np.ones(len(b))
    out = []
    want = iter(depths)
    nxt = next(want, None)
    if nxt == 0:
        out.append(acc.copy())
        nxt = next(want, None)
    for t, layer in enumerate(circuit.layers, start=1):
        if layer.unitary is not None:
            paths.apply(layer.unitary)
        lam = _eigenvalues(layer.noise, paths)
        if lam is not None:
            acc = acc * lam * lam
        while nxt == t:
            out.append(acc.copy())
            nxt = next(want, None)
    res = np.array(out)
    return res[0] if record_depths is None else res


@dataclass(frozen=True)
class PurityEstimate:
    value: float
    stderr: float
    mode: str
    trials: int

    def entropy_bound(self, n: int) -> float:
        return n + math.log2(self.value)


def _sample_nonzero_masks(n: int, m: int, rng) -> np.ndarray:
    if n <= 31:
        return rng.integers(1, 1 << n, size=m, dtype=np.int64)
    bits = rng.integers(0, 2, size=(m, n), dtype=np.uint8)
    bad = ~bits.any(axis=1)
    while bad.any():
        bits[bad] = rng.integers(0, 2, size=(int(bad.sum()), n), dtype=np.uint8)
        bad = ~bits.any(axis=1)
    return bits


def pauli_path_purity(
    circuit: LayeredCircuit,
    input_state: str | int = 0,
    mode: str = "exact",
    trials: int = 10_000,
    seed=None,
) -> PurityEstimate:
    """Output purity of ``circuit`` on a computational basis input.

    ``mode="exact"`` sums all ``2**n`` paths (``n <= 20``). ``mode="monte-carlo"``
    draws ``trials`` non-zero masks uniformly and adds the identity path
    exactly, giving ``2^-n + (1 - 2^-n) * mean``. The basis label does not
    change the purity; it is validated and otherwise unused.
    """
    n = circuit.n
    if isinstance(input_state, str):
        if len(input_state) != n or any(c not in "01" for c in input_state):
            raise ValueError("input state must be an n-bit string")
    elif not 0 <= int(input_state) < 2**n:
        raise ValueError("input basis index out of range")
    if mode == "exact":
        if n > PATH_EXACT_MAX_QUBITS:
            raise ValueError(f"exact path sum limited to {PATH_EXACT_MAX_QUBITS} qubits")
        vals = path_values(circuit, np.arange(2**n, dtype=np.int64))
        return PurityEstimate(float(math.fsum(vals) / 2**n), 0.0, "exact-path", 2**n)
    if mode in ("monte-carlo", "mc"):
        if trials < 1:
            raise ValueError("need at least one trial")
        rng = as_rng(seed)
        vals = path_values(circuit, _sample_nonzero_masks(n, trials, rng))
        w = 1 - 2.0**-n
        se = w * float(np.std(vals, ddof=1)) / math.sqrt(trials) if trials > 1 else math.inf
        return PurityEstimate(2.0**-n + w * float(np.mean(vals)), se, "monte-carlo-path", trials)
    raise ValueError(f"unknown mode {mode!r}")


# --------------------------------------------------------------- spectra etc.


@dataclass(frozen=True)
class WeightSpectrum:
    """``C[k]`` is the purity carried by weight-k Paulis."""

    n: int
    C: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.C))

    def normalized_nonidentity(self) -> np.ndarray:
        c = np.asarray(self.C[1:], dtype=float)
        s = c.sum()
        return c / s if s > 0 else c


def _weights_table(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return np.bitwise_count(idx[:, None] | idx[None, :]).astype(np.int64)


def weight_spectrum(state) -> WeightSpectrum:
    """Purity split by Pauli weight.

    ``state`` is a dense density matrix (``n <= 10``) or a Clifford circuit
    with Pauli noise acting on ``|0..0>`` (exact path sum).
    """
    if isinstance(state, LayeredCircuit):
        n = state.n
        if n > PATH_EXACT_MAX_QUBITS:
            raise ValueError("path weight spectrum limited to 20 qubits")
        _check_path_circuit(state)
        b = np.arange(2**n, dtype=np.int64)
        paths = _PackedPaths.z_strings(n, b)
        acc = np.ones(len(b))
        for layer in state.layers:
            if layer.unitary is not None:
                paths.apply(layer.unitary)
            lam = _eigenvalues(layer.noise, paths)
            if lam is not None:
                acc = acc * lam * lam
        C = np.bincount(paths.weight(), weights=acc, minlength=n + 1) / 2**n
        return WeightSpectrum(n, C)
    rho = np.asarray(state)
    n = rho.shape[0].bit_length() - 1
    if n > 10:
        raise ValueError("dense weight spectrum limited to 10 qubits")
    c = pauli_coefficients(rho)
    C = np.bincount(_weights_table(n).ravel(), weights=(np.abs(c) ** 2).ravel(), minlength=n + 1)
    return WeightSpectrum(n, C / 2**n)


def expected_weight_damping(n: int, p: float) -> float:
    """Average of ``p^(2w)`` over the non-identity n-qubit Paulis."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return ((1 + 3 * p * p) ** n - 1) / (4**n - 1)


def expected_purity_recursion(n: int, p: float, D: int) -> float:
    """Mean purity after ``D`` i.i.d. uniform Clifford layers with local depolarizing."""
    if D < 0:
        raise ValueError("depth must be non-negative")
    q = expected_weight_damping(n, p)
    return 2.0**-n + (1 - 2.0**-n) * q**D


# ------------------------------------------------------------- exponents/fits


def mass_exponent(purity: float, n: int) -> float:
    """``-log2`` of the surviving non-identity purity fraction.

    ``(2^n Tr rho^2 - 1) / (2^n - 1)`` is 1 for a pure state and 0 for the
    maximally mixed state; for i.i.d. mixing layers it averages to ``q^D``.
    """
    frac = (2.0**n * purity - 1) / (2.0**n - 1)
    return -math.log2(frac) if frac > 0 else math.inf


def per_qubit_exponent(purity: float, n: int) -> float:
    """``-log2(2 Tr(rho^2)^(1/n) - 1)``: the single-qubit analogue of :func:`mass_exponent`.

    For a product of identical qubits this is that one qubit's mass exponent,
    ``2 D log2(1/p)`` for idle qubits under local depolarizing.
    """
    g = 2.0 * purity ** (1.0 / n) - 1
    return -math.log2(g) if g > 0 else math.inf


@dataclass(frozen=True)
class LinearFit:
    """Ordinary least squares ``y = slope * x + intercept``."""

    slope: float
    intercept: float
    r2: float
    slope_stderr: float
    slope_ci: tuple[float, float]
    npoints: int

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "slope_stderr": self.slope_stderr,
            "slope_ci95": list(self.slope_ci),
            "npoints": self.npoints,
        }


def linear_fit(x, y, level: float = 0.95) -> LinearFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    if len(x) < 2 or np.ptp(x) == 0:
        raise ValueError("need at least two distinct x values to fit")
    res = stats.linregress(x, y)
    dof = len(x) - 2
    if dof > 0:
        t = stats.t.ppf(0.5 + level / 2, dof)
        ci = (res.slope - t * res.stderr, res.slope + t * res.stderr)
    else:
        ci = (res.slope, res.slope)
    return LinearFit(float(res.slope), float(res.intercept), float(res.rvalue**2), float(res.stderr), ci, len(x))


# ---------------------------------------------------------------- decay sweep


@dataclass(frozen=True)
class DecayPoint:
    n: int
    D: int
    purity: float
    stderr: float
    seed: int

    @property
    def entropy_bound(self) -> float:
        return self.n + math.log2(self.purity)

    @property
    def mass_exponent(self) -> float:
        return mass_exponent(self.purity, self.n)

    @property
    def per_qubit_exponent(self) -> float:
        return per_qubit_exponent(self.purity, self.n)


_FIT_QUANTITIES = {
    "mass_exponent": lambda pt: pt.mass_exponent,
    "per_qubit_exponent": lambda pt: pt.per_qubit_exponent,
    "entropy_bound": lambda pt: pt.entropy_bound,
    "log2_entropy_bound": lambda pt: math.log2(pt.entropy_bound) if pt.entropy_bound > 0 else -math.inf,
}
_REGRESSORS = {"nD": lambda pt: pt.n * pt.D, "D": lambda pt: pt.D, "n": lambda pt: pt.n}


@dataclass
class DecayCurve:
    """Purity sweep over an ``(n, D)`` grid for one family and noise."""

    family: str
    noise_kind: str
    param: float
    estimator: str
    points: list[DecayPoint]
    trials: int
    seed: int
    noise: dict = field(default_factory=dict)

    def fit(self, quantity: str, regressor: str, points=None) -> LinearFit:
        f = _FIT_QUANTITIES[quantity]
        g = _REGRESSORS[regressor]
        pts = self.points if points is None else points
        return linear_fit([g(p) for p in pts], [f(p) for p in pts])

    def standard_fits(self) -> dict:
        """Headline fits: mass exponent for all-to-all families, per-qubit for idle ones."""
        out = {}
        for q in ("mass_exponent", "per_qubit_exponent"):
            for r in ("nD", "D"):
                try:
                    out[f"{q}~{r}"] = self.fit(q, r).as_dict()
                except ValueError:
                    pass
        return out

    def records(self) -> list[ExperimentRecord]:
        rows = []
        for pt in self.points:
            se_b = pt.stderr / (pt.purity * math.log(2)) if pt.purity > 0 else math.inf
            for name, value, se in (
                ("purity", pt.purity, pt.stderr),
                ("entropy_bound", pt.entropy_bound, se_b),
                ("mass_exponent", pt.mass_exponent, _delta_se(mass_exponent, pt)),
                ("per_qubit_exponent", pt.per_qubit_exponent, _delta_se(per_qubit_exponent, pt)),
            ):
                rows.append(
                    ExperimentRecord(
                        self.family, pt.n, pt.D, self.noise_kind, self.param,
                        f"{self.estimator}:{name}", value, se, pt.seed,
                    )
                )
        return rows

    def summary(self) -> dict:
        return {
            "family": self.family,
            "noise": self.noise,
            "estimator": self.estimator,
            "trials": self.trials,
            "seed": self.seed,
            "fits": self.standard_fits(),
        }


def _delta_se(fn, pt: DecayPoint) -> float:
    if pt.stderr == 0:
        return 0.0
    h = max(pt.stderr * 1e-3, 1e-300)
    try:
        d = (fn(pt.purity + h, pt.n) - fn(pt.purity - h, pt.n)) / (2 * h)
    except (ValueError, ZeroDivisionError):
        return math.inf
    return abs(d) * pt.stderr if math.isfinite(d) else math.inf


_FAMILY_CODE = {"mixing": 1, "identity": 2, "brickwork": 3}


def _decay_task(args):
    family, n, depth, d, noise_json, circuit_index, paths, depths, seed = args
    noise = noise_from_json(noise_json)
    rng = np.random.default_rng(seed)
    if family == "mixing":
        base = build_mixing_circuit(n, depth, rng)
    elif family == "brickwork":
        base = build_brickwork(n, depth, d, rng)
    else:
        base = build_identity_circuit(n, depth)
    circ = attach_noise(base, noise)
    b = _sample_nonzero_masks(n, paths, rng)
    vals = path_values(circ, b, record_depths=depths)
    return circuit_index, vals.mean(axis=1), vals.var(axis=1, ddof=1) if paths > 1 else np.zeros(len(depths))


def decay_sweep(
    family: str,
    ns,
    Ds,
    noise,
    trials: int = 10_000,
    seed: int = 0,
    circuits: int | None = None,
    d: int = 1,
    workers: int | None = 1,
) -> DecayCurve:
    """Monte-Carlo Pauli-path purity over an ``(n, D)`` grid.

    Each of ``circuits`` independent circuits of depth ``max(Ds)`` gets
    ``trials // circuits`` paths, and every shallower depth reuses its
    prefix. The identity family needs a single circuit. ``stderr`` is the
    spread across circuits, which includes the path noise.
    """
    if family not in _FAMILY_CODE:
        raise ValueError(f"decay sweeps support {sorted(_FAMILY_CODE)}, not {family!r}")
    ns = sorted(set(int(n) for n in ns))
    Ds = sorted(set(int(D) for D in Ds))
    if not ns or not Ds:
        raise ValueError("empty sweep grid")
    if isinstance(noise, KrausChannel):
        raise UnsupportedNoiseError("decay sweeps need Pauli noise; use nonunital_decay_experiment")
    noise_json = noise_to_json(noise)
    if family == "identity":
        n_circ = 1
    else:
        n_circ = min(trials, 100) if circuits is None else int(circuits)
    paths = max(1, trials // n_circ)
    depth = max(Ds)
    tasks = []
    for n in ns:
        for c in range(n_circ):
            s = derive_seed(seed, _FAMILY_CODE[family], n, c)
            tasks.append((family, n, depth, d, noise_json, c, paths, Ds, s))
    results = run_tasks(_decay_task, tasks, workers)
    points = []
    k = 0
    for n in ns:
        chunk = results[k : k + n_circ]
        k += n_circ
        means = np.array([r[1] for r in chunk])  # (circuits, depths)
        w = 1 - 2.0**-n
        per_circ = 2.0**-n + w * means
        for j, D in enumerate(Ds):
            val = float(math.fsum(per_circ[:, j]) / n_circ)
            if n_circ > 1:
                se = float(np.std(per_circ[:, j], ddof=1) / math.sqrt(n_circ))
            else:
                se = w * math.sqrt(chunk[0][2][j] / paths)
            points.append(DecayPoint(n, D, val, se, derive_seed(seed, _FAMILY_CODE[family], n)))
    kind = noise_json["kind"]
    param = float(noise_json.get("p", math.nan))
    return DecayCurve(family, kind, param, "monte-carlo-path", points, trials, seed, noise_json)


# ------------------------------------------------------------ non-unital runs


@dataclass
class NonunitalCurve:
    """Dense Monte-Carlo of alternating Clifford layers and amplitude damping.

    ``purity[n]`` and ``relent[n]`` are ``(circuits, len(Ds))`` arrays of
    per-circuit values; ``lemma_violations`` counts rows where the relative
    entropy exceeded ``n + log2 purity``.
    """

    ns: list[int]
    Ds: list[int]
    gamma: float
    circuits: int
    seed: int
    purity: dict[int, np.ndarray]
    relent: dict[int, np.ndarray]
    lemma_violations: int = 0

    def mean(self, n: int, which: str = "relent") -> np.ndarray:
        return getattr(self, which)[n].mean(axis=0)

    def stderr(self, n: int, which: str = "relent") -> np.ndarray:
        a = getattr(self, which)[n]
        return a.std(axis=0, ddof=1) / math.sqrt(a.shape[0]) if a.shape[0] > 1 else np.zeros(a.shape[1])

    def exponent(self, n: int, rows=None) -> float:
        """``-slope`` of ``log2`` mean relative entropy against ``D``."""
        a = self.relent[n] if rows is None else self.relent[n][rows]
        m = a.mean(axis=0)
        if np.any(m <= 0):
            return math.inf
        return -linear_fit(self.Ds, np.log2(m)).slope

    def exponents(self) -> dict[int, float]:
        return {n: self.exponent(n) for n in self.ns}

    def trend_test(self, level: float = 0.95, boots: int = 400) -> dict:
        """Bootstrap test that the exponent strictly increases with ``n``.

        Circuits are resampled independently per ``n``; the test passes when
        at least ``level`` of the replicates give a strictly increasing
        sequence of exponents.
        """
        rng = np.random.default_rng(derive_seed(self.seed, 99))
        hits = 0
        reps = {n: [] for n in self.ns}
        for _ in range(boots):
            seq = []
            for n in self.ns:
                rows = rng.integers(0, self.circuits, size=self.circuits)
                e = self.exponent(n, rows)
                reps[n].append(e)
                seq.append(e)
            hits += all(b > a for a, b in zip(seq, seq[1:]))
        frac = hits / boots
        ex = self.exponents()
        return {
            "exponents": ex,
            "bootstrap_stderr": {n: float(np.std(reps[n], ddof=1)) for n in self.ns},
            "fraction_increasing": frac,
            "level": level,
            "passed": frac >= level,
            "slope_vs_n": linear_fit(self.ns, [ex[n] for n in self.ns]).as_dict()
            if len(self.ns) > 1
            else None,
        }

    def records(self) -> list[ExperimentRecord]:
        rows = []
        for n in self.ns:
            s = derive_seed(self.seed, 7, n)
            for which, name in (("purity", "purity"), ("relent", "relative_entropy")):
                m, se = self.mean(n, which), self.stderr(n, which)
                for j, D in enumerate(self.Ds):
                    rows.append(
                        ExperimentRecord(
                            "mixing", n, D, "amplitude-damping", self.gamma,
                            f"dense:{name}", float(m[j]), float(se[j]), s,
                        )
                    )
        return rows

    def summary(self) -> dict:
        out = {"gamma": self.gamma, "circuits": self.circuits, "seed": self.seed,
               "lemma_violations": self.lemma_violations}
        try:
            out["trend"] = self.trend_test()
        except ValueError:
            out["trend"] = None
        return out


def _nonunital_task(args):
    n, Ds, gamma, seed = args
    rng = np.random.default_rng(seed)
    ch = amplitude_damping(gamma)
    rho = basis_state(n, 0)
    want = set(Ds)
    pur, rel, viol = [], [], 0
    for t in range(1, max(Ds) + 1):
        T = sample_random_clifford(n, rng)
        rho = apply_channel_dense(ch, apply_clifford(rho, T))
        if t in want:
            pp = dense_purity(rho)
            dd = relative_entropy(rho)
            if dd > n + math.log2(pp) + 1e-9:
                viol += 1
            pur.append(pp)
            rel.append(dd)
    return np.array(pur), np.array(rel), viol


def nonunital_decay_experiment(
    ns,
    Ds,
    gamma: float,
    trials: int = 2000,
    seed: int = 0,
    workers: int | None = 1,
) -> NonunitalCurve:
    """Dense trajectories of ``trials`` random Clifford circuits per ``n``.

    Each trajectory is read off at every depth in ``Ds``. Relative entropy is
    taken against ``I / 2**n``.
    """
    ns = sorted(set(int(n) for n in ns))
    Ds = sorted(set(int(D) for D in Ds))
    if not ns or not Ds or min(Ds) < 1:
        raise ValueError("need a non-empty grid with depths >= 1")
    if max(ns) > 8:
        raise ValueError("non-unital experiment is dense and limited to 8 qubits")
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must be in [0, 1]")
    tasks = [(n, Ds, gamma, derive_seed(seed, 7, n, c)) for n in ns for c in range(trials)]
    res = run_tasks(_nonunital_task, tasks, workers)
    purity, relent, viol = {}, {}, 0
    k = 0
    for n in ns:
        chunk = res[k : k + trials]
        k += trials
        purity[n] = np.array([r[0] for r in chunk])
        relent[n] = np.array([r[1] for r in chunk])
        viol += sum(r[2] for r in chunk)
    return NonunitalCurve(ns, Ds, gamma, trials, seed, purity, relent, viol)


def dense_purity_of(circuit: LayeredCircuit, input_state: int = 0) -> float:
    """Purity by full density-matrix evolution (oracle for the path sum)."""
    return dense_purity(evolve(basis_state(circuit.n, input_state), circuit))

