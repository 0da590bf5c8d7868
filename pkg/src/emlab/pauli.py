"""Exact n-qubit Pauli and Clifford algebra.

Pauli strings are stored as a pair of integer bit masks. Qubit ``i`` lives in
bit ``n - 1 - i`` so that a mask read as a binary number is the same index a
dense state vector uses (qubit 0 is the most significant tensor factor).

``PauliString.phase`` is the exponent ``k`` of ``i**k`` in front of the
letter form, e.g. ``-iXZY`` has ``k = 3``. Internally products are computed in
the ``X^x Z^z`` ordering, where ``Y = i X Z``.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

__all__ = [
    "PauliString",
    "CliffordTableau",
    "PauliEnsemble",
    "MixingReport",
    "weight",
    "multiply",
    "trace_product",
    "conjugate",
    "commutes",
    "identity_tableau",
    "hadamard",
    "phase_gate",
    "cnot",
    "sample_random_clifford",
    "clifford_group_order",
    "uniform_clifford_ensemble",
    "identity_ensemble",
    "brickwork_ensemble",
    "brickwork_layer",
    "verify_pauli_mixing",
    "as_rng",
    "PauliSum",
]

_PHASE_PREFIX = {0: "", 1: "i", 2: "-", 3: "-i"}
_PREFIX_PHASE = {"": 0, "+": 0, "i": 1, "+i": 1, "-": 2, "-i": 3}
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}


def as_rng(seed) -> np.random.Generator:
    """Return a Generator for ``seed`` (int, SeedSequence or Generator)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _random_bits(rng: np.random.Generator, nbits: int) -> int:
    if nbits <= 62:
        return int(rng.integers(0, 1 << nbits))
    nbytes = (nbits + 7) // 8
    return int.from_bytes(rng.bytes(nbytes), "little") & ((1 << nbits) - 1)


def _xz_phase(x: int, z: int, k: int) -> int:
    # letter-form phase -> X^x Z^z phase
    return (k + (x & z).bit_count()) & 3


def _letter_phase(x: int, z: int, kxz: int) -> int:
    return (kxz - (x & z).bit_count()) & 3


def _mul_xz(x1: int, z1: int, k1: int, x2: int, z2: int, k2: int):
    # (X^x1 Z^z1)(X^x2 Z^z2) = (-1)^{z1.x2} X^{x1^x2} Z^{z1^z2}
    return x1 ^ x2, z1 ^ z2, (k1 + k2 + 2 * (z1 & x2).bit_count()) & 3


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli operator ``i**phase * P_0 (x) ... (x) P_{n-1}``."""

    n: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("qubit count must be non-negative")
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full:
            raise ValueError(f"masks exceed {self.n} qubits")
        object.__setattr__(self, "phase", self.phase & 3)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse the text form, e.g. ``"-iXZY"`` or ``"+IZ"``."""
        stripped = label.strip()
        i = 0
        while i < len(stripped) and stripped[i] in "+-i":
            i += 1
        prefix, letters = stripped[:i], stripped[i:].upper()
        if prefix not in _PREFIX_PHASE:
            raise ValueError(f"bad phase prefix {prefix!r} in {label!r}")
        n = len(letters)
        x = z = 0
        for q, ch in enumerate(letters):
            try:
                bx, bz = _LETTER_BITS[ch]
            except KeyError:
                raise ValueError(f"bad Pauli letter {ch!r} in {label!r}") from None
            shift = n - 1 - q
            x |= bx << shift
            z |= bz << shift
        return cls(n, x, z, _PREFIX_PHASE[prefix])

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        """Pauli ``letter`` on ``qubit`` and identity elsewhere."""
        bx, bz = _LETTER_BITS[letter.upper()]
        shift = n - 1 - qubit
        return cls(n, bx << shift, bz << shift)

    @classmethod
    def z_string(cls, n: int, b: int) -> "PauliString":
        """``Z^b`` for a bit mask ``b``."""
        return cls(n, 0, b)

    def letter(self, qubit: int) -> str:
        shift = self.n - 1 - qubit
        bx, bz = (self.x >> shift) & 1, (self.z >> shift) & 1
        return "IXZY"[bx + 2 * bz]

    def label(self) -> str:
        return _PHASE_PREFIX[self.phase] + "".join(self.letter(q) for q in range(self.n))

    def __str__(self) -> str:
        return self.label()

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def sign(self) -> int:
        """+1 or -1 for Hermitian strings."""
        if not self.is_hermitian:
            raise ValueError(f"{self.label()} is not Hermitian")
        return 1 if self.phase == 0 else -1

    def unsigned(self) -> "PauliString":
        """Representative in the phase-free quotient group."""
        return PauliString(self.n, self.x, self.z, 0)

    def support(self) -> list[int]:
        m = self.x | self.z
        return [q for q in range(self.n) if (m >> (self.n - 1 - q)) & 1]

    def commutes_with(self, other: "PauliString") -> bool:
        return commutes(self, other)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __neg__(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, self.phase + 2)

    def tensor(self, other: "PauliString") -> "PauliString":
        m = other.n
        return PauliString(
            self.n + m,
            (self.x << m) | other.x,
            (self.z << m) | other.z,
            self.phase + other.phase,
        )


def _check_same_n(*ps) -> int:
    n = ps[0].n
    for p in ps[1:]:
        if p.n != n:
            raise ValueError(f"dimension mismatch: {n} vs {p.n} qubits")
    return n


def weight(P: PauliString) -> int:
    """Number of qubits on which ``P`` acts non-trivially."""
    return P.weight


def multiply(P: PauliString, Q: PauliString) -> PauliString:
    """Operator product ``P @ Q`` with exact phase."""
    n = _check_same_n(P, Q)
    x, z, k = _mul_xz(
        P.x, P.z, _xz_phase(P.x, P.z, P.phase), Q.x, Q.z, _xz_phase(Q.x, Q.z, Q.phase)
    )
    return PauliString(n, x, z, _letter_phase(x, z, k))


def commutes(P: PauliString, Q: PauliString) -> bool:
    _check_same_n(P, Q)
    return ((P.x & Q.z) ^ (P.z & Q.x)).bit_count() % 2 == 0


def trace_product(P: PauliString, Q: PauliString) -> int:
    """``Tr(P Q)`` in the phase-free quotient: ``2**n`` if P = Q else 0."""
    n = _check_same_n(P, Q)
    return 1 << n if (P.x == Q.x and P.z == Q.z) else 0


@dataclass(frozen=True)
class CliffordTableau:
    """Conjugation action of a Clifford unitary ``U``.

    ``images[j]`` is ``U X_j U^dag`` for ``j < n`` and ``images[n + j]`` is
    ``U Z_j U^dag``. All images are Hermitian (phase ``+1`` or ``-1``).
    """

    n: int
    images: tuple[PauliString, ...]
    _symplectic: np.ndarray | None = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if len(self.images) != 2 * self.n:
            raise ValueError(f"need {2 * self.n} generator images, got {len(self.images)}")
        for im in self.images:
            if im.n != self.n:
                raise ValueError("generator image has wrong qubit count")
            if not im.is_hermitian:
                raise ValueError(f"generator image {im.label()} is not Hermitian")

    def validate(self) -> None:
        """Raise if the images violate the Pauli commutation relations."""
        n = self.n
        for a in range(2 * n):
            for b in range(a + 1, 2 * n):
                want = not ((a < n) and (b == a + n))
                if commutes(self.images[a], self.images[b]) != want:
                    raise ValueError(f"images {a} and {b} break the symplectic constraints")
        for im in self.images:
            if im.is_identity:
                raise ValueError("identity generator image")

    @property
    def x_images(self) -> tuple[PauliString, ...]:
        return self.images[: self.n]

    @property
    def z_images(self) -> tuple[PauliString, ...]:
        return self.images[self.n :]

    def conjugate(self, P: PauliString) -> PauliString:
        return conjugate(self, P)

    def compose(self, other: "CliffordTableau") -> "CliffordTableau":
        """Tableau of ``self`` applied after ``other``."""
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n} qubits")
        return CliffordTableau(self.n, tuple(conjugate(self, im) for im in other.images))

    def __matmul__(self, other: "CliffordTableau") -> "CliffordTableau":
        return self.compose(other)

    def symplectic_matrix(self) -> np.ndarray:
        """``(2n, 2n)`` uint8 matrix whose row j is image j as ``[x | z]`` bits.

        Columns are ordered by qubit: ``x_0..x_{n-1}, z_0..z_{n-1}``.
        A row vector ``[a | b]`` for ``X^a Z^b`` maps to ``[a | b] @ M mod 2``.
        """
        if self._symplectic is None:
            n = self.n
            m = np.zeros((2 * n, 2 * n), dtype=np.uint8)
            for j, im in enumerate(self.images):
                m[j, :n] = _mask_to_bits(im.x, n)
                m[j, n:] = _mask_to_bits(im.z, n)
            object.__setattr__(self, "_symplectic", m)
        return self._symplectic

    def inverse(self) -> "CliffordTableau":
        """Tableau of ``U^dag``.

        The symplectic part is ``Omega S^T Omega``; signs are then fixed by
        requiring ``T(T^-1(g)) = g`` on every generator.
        """
        n = self.n
        full = (1 << n) - 1
        packed = [(im.x << n) | im.z for im in self.images]
        imgs = []
        for j in range(2 * n):
            # row j of Omega S^T Omega: bit k of the result is bit (j ^ swap) of
            # image (k ^ swap), with swap exchanging the X and Z halves
            jj = j + n if j < n else j - n
            col_bit = 2 * n - 1 - jj
            v = 0
            for k in range(2 * n):
                kk = k + n if k < n else k - n
                if (packed[kk] >> col_bit) & 1:
                    v |= 1 << (2 * n - 1 - k)
            Q = PauliString(n, v >> n, v & full, 0)
            gen = identity_tableau(n).images[j]
            img = conjugate(self, Q)
            if img.phase != gen.phase:
                Q = -Q
            imgs.append(Q)
        return CliffordTableau(n, tuple(imgs))

    def packed_images(self) -> list[int]:
        """Generator images as ``(x << n) | z`` integers, ignoring signs."""
        return [(im.x << self.n) | im.z for im in self.images]

    def signs(self) -> np.ndarray:
        return np.array([im.sign for im in self.images], dtype=np.int8)

    def labels(self) -> list[str]:
        return [im.label() for im in self.images]

    def key(self) -> tuple:
        """Hashable canonical key (used for group enumeration tests)."""
        return tuple((im.x, im.z, im.phase) for im in self.images)

    def digest(self) -> str:
        text = ",".join(self.labels())
        return hashlib.sha256(f"{self.n}:{text}".encode()).hexdigest()[:16]

    def embed(self, n: int, qubits: Sequence[int]) -> "CliffordTableau":
        """Act with this k-qubit tableau on ``qubits`` of an n-qubit register."""
        k = self.n
        if len(qubits) != k or len(set(qubits)) != k:
            raise ValueError("need one distinct target qubit per tableau qubit")
        base = list(identity_tableau(n).images)
        for j in range(k):
            for off in (0, n):
                src = self.images[j + (0 if off == 0 else k)]
                base[qubits[j] + off] = _embed_pauli(src, n, qubits)
        return CliffordTableau(n, tuple(base))

    def is_identity(self) -> bool:
        return self == identity_tableau(self.n)


def _mask_to_bits(mask: int, n: int) -> np.ndarray:
    return np.array([(mask >> (n - 1 - q)) & 1 for q in range(n)], dtype=np.uint8)


def _embed_pauli(P: PauliString, n: int, qubits: Sequence[int]) -> PauliString:
    k = P.n
    x = z = 0
    for j, q in enumerate(qubits):
        shift_src = k - 1 - j
        shift_dst = n - 1 - q
        x |= ((P.x >> shift_src) & 1) << shift_dst
        z |= ((P.z >> shift_src) & 1) << shift_dst
    return PauliString(n, x, z, P.phase)


def conjugate(T: CliffordTableau, P: PauliString) -> PauliString:
    """``U P U^dag`` from the generator images of ``U``."""
    n = T.n
    if P.n != n:
        raise ValueError(f"dimension mismatch: tableau on {n} qubits, Pauli on {P.n}")
    rx = rz = 0
    rk = _xz_phase(P.x, P.z, P.phase)
    for q in range(n):
        if (P.x >> (n - 1 - q)) & 1:
            im = T.images[q]
            rx, rz, rk = _mul_xz(rx, rz, rk, im.x, im.z, _xz_phase(im.x, im.z, im.phase))
    for q in range(n):
        if (P.z >> (n - 1 - q)) & 1:
            im = T.images[n + q]
            rx, rz, rk = _mul_xz(rx, rz, rk, im.x, im.z, _xz_phase(im.x, im.z, im.phase))
    return PauliString(n, rx, rz, _letter_phase(rx, rz, rk))


def identity_tableau(n: int) -> CliffordTableau:
    xs = tuple(PauliString.single(n, q, "X") for q in range(n))
    zs = tuple(PauliString.single(n, q, "Z") for q in range(n))
    return CliffordTableau(n, xs + zs)


def _with_images(n: int, updates: dict[int, PauliString]) -> CliffordTableau:
    imgs = list(identity_tableau(n).images)
    for j, im in updates.items():
        imgs[j] = im
    return CliffordTableau(n, tuple(imgs))


def hadamard(n: int, q: int) -> CliffordTableau:
    return _with_images(n, {q: PauliString.single(n, q, "Z"), n + q: PauliString.single(n, q, "X")})


def phase_gate(n: int, q: int) -> CliffordTableau:
    return _with_images(n, {q: PauliString.single(n, q, "Y")})


def cnot(n: int, control: int, target: int) -> CliffordTableau:
    if control == target:
        raise ValueError("control and target must differ")
    X = lambda q: PauliString.single(n, q, "X")  # noqa: E731
    Z = lambda q: PauliString.single(n, q, "Z")  # noqa: E731
    return _with_images(n, {control: X(control) * X(target), n + target: Z(control) * Z(target)})


def clifford_group_order(n: int) -> int:
    """Size of the n-qubit Clifford group modulo global phases."""
    order = 4**n * 2 ** (n * n)
    for j in range(1, n + 1):
        order *= 4**j - 1
    return order


def _symp(x1: int, z1: int, x2: int, z2: int) -> int:
    return ((x1 & z2) ^ (z1 & x2)).bit_count() & 1


def sample_random_clifford(n: int, seed=None) -> CliffordTableau:
    """Draw a Clifford uniformly at random (modulo global phase).

    A symplectic basis ``(e_1, f_1, ..., e_n, f_n)`` is built one pair at a
    time: ``e_j`` is uniform over the non-zero vectors of the symplectic
    complement of the pairs chosen so far and ``f_j`` is uniform over the
    vectors of that complement with ``<e_j, f_j> = 1``. Every symplectic
    matrix arises from exactly one such sequence, so the matrix is uniform.
    Independent uniform signs on the 2n images then make the Clifford uniform.
    """
    if n < 1:
        raise ValueError("need at least one qubit")
    rng = as_rng(seed)
    full = (1 << n) - 1
    pairs: list[tuple[int, int, int, int]] = []

    def project(x: int, z: int) -> tuple[int, int]:
        for ex, ez, fx, fz in pairs:
            if _symp(x, z, fx, fz):
                x ^= ex
                z ^= ez
            if _symp(x, z, ex, ez):
                x ^= fx
                z ^= fz
        return x, z

    for _ in range(n):
        while True:
            r = _random_bits(rng, 2 * n)
            ex, ez = project(r >> n, r & full)
            if ex or ez:
                break
        while True:
            r = _random_bits(rng, 2 * n)
            fx, fz = project(r >> n, r & full)
            if _symp(ex, ez, fx, fz):
                break
        pairs.append((ex, ez, fx, fz))

    signs = _random_bits(rng, 2 * n)
    xs, zs = [], []
    for j, (ex, ez, fx, fz) in enumerate(pairs):
        sx = 2 * ((signs >> j) & 1)
        sz = 2 * ((signs >> (n + j)) & 1)
        xs.append(PauliString(n, ex, ez, sx))
        zs.append(PauliString(n, fx, fz, sz))
    return CliffordTableau(n, tuple(xs) + tuple(zs))


def brickwork_layer(n: int, offset: int, rng: np.random.Generator) -> CliffordTableau:
    """One sublayer of independent uniform 2-qubit Cliffords on a 1D chain.

    Gates act on ``(offset, offset + 1), (offset + 2, offset + 3), ...``.
    """
    layer = identity_tableau(n)
    for a in range(offset, n - 1, 2):
        gate = sample_random_clifford(2, rng).embed(n, (a, a + 1))
        layer = gate.compose(layer)
    return layer


@dataclass(frozen=True)
class PauliEnsemble:
    """A seeded distribution over n-qubit Clifford tableaux."""

    label: str
    n: int
    sampler: Callable[[np.random.Generator], CliffordTableau] = field(compare=False)

    def sample(self, seed=None) -> CliffordTableau:
        return self.sampler(as_rng(seed))


def uniform_clifford_ensemble(n: int) -> PauliEnsemble:
    return PauliEnsemble("uniform-clifford", n, lambda rng: sample_random_clifford(n, rng))


def identity_ensemble(n: int) -> PauliEnsemble:
    return PauliEnsemble("identity", n, lambda rng: identity_tableau(n))


def brickwork_ensemble(n: int, depth: int = 1) -> PauliEnsemble:
    def draw(rng):
        t = identity_tableau(n)
        for layer in range(depth):
            t = brickwork_layer(n, layer % 2, rng).compose(t)
        return t

    return PauliEnsemble("brickwork-local", n, draw)


@dataclass
class MixingReport:
    """Empirical image distribution of fixed Paulis under an ensemble.

    ``counts[label]`` has one entry per non-identity Pauli class, indexed by
    ``(x << n) | z`` minus one.
    """

    ensemble: str
    n: int
    trials: int
    counts: dict[str, np.ndarray]
    chi2: dict[str, float]
    p_value: dict[str, float]
    max_abs_z: dict[str, float]

    def is_uniform(self, alpha: float = 0.01) -> bool:
        return all(p > alpha for p in self.p_value.values())


def _class_index(P: PauliString) -> int:
    return ((P.x << P.n) | P.z) - 1


def verify_pauli_mixing(
    E: PauliEnsemble,
    n: int,
    trials: int,
    test_paulis: Iterable[PauliString] | None = None,
    seed=0,
) -> MixingReport:
    """Histogram the conjugated images of test Paulis over ``trials`` draws."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if E.n != n:
        raise ValueError(f"ensemble acts on {E.n} qubits, expected {n}")
    if n > 6:
        raise ValueError("image histogram over 4**n classes is limited to n <= 6")
    if test_paulis is None:
        test_paulis = [PauliString.single(n, 0, "X"), PauliString.single(n, n - 1, "Z")]
    test_paulis = list(test_paulis)
    for P in test_paulis:
        if P.n != n or P.is_identity:
            raise ValueError("test Paulis must be non-identity and act on n qubits")
    rng = as_rng(seed)
    ncls = 4**n - 1
    counts = {P.label(): np.zeros(ncls, dtype=np.int64) for P in test_paulis}
    for _ in range(trials):
        T = E.sample(rng)
        for P in test_paulis:
            counts[P.label()][_class_index(conjugate(T, P))] += 1
    chi2, pval, maxz = {}, {}, {}
    expected = trials / ncls
    sd = np.sqrt(trials * (1 / ncls) * (1 - 1 / ncls))
    for lab, c in counts.items():
        res = stats.chisquare(c)
        chi2[lab] = float(res.statistic)
        pval[lab] = float(res.pvalue)
        maxz[lab] = float(np.max(np.abs(c - expected)) / sd)
    return MixingReport(E.label, n, trials, counts, chi2, pval, maxz)


@dataclass(frozen=True)
class PauliSum:
    """Real combination of Hermitian Pauli strings with ``sum |c| <= 1``.

    The coefficient bound guarantees ``||O|| <= 1``. Signs of the strings are
    folded into the coefficients so every stored term is phase-free.
    """

    n: int
    terms: tuple[tuple[float, PauliString], ...]

    def __post_init__(self):
        folded = []
        for c, P in self.terms:
            if P.n != self.n:
                raise ValueError("term acts on the wrong number of qubits")
            c = float(c) * P.sign
            folded.append((c, P.unsigned()))
        object.__setattr__(self, "terms", tuple(folded))
        if sum(abs(c) for c, _ in folded) > 1 + 1e-12:
            raise ValueError("observable norm bound violated: sum of |coefficients| > 1")

    @classmethod
    def from_pauli(cls, P: PauliString, coeff: float = 1.0) -> "PauliSum":
        return cls(P.n, ((coeff, P),))

    @classmethod
    def from_text(cls, text: str) -> "PauliSum":
        """Parse ``"0.5*ZZ - 0.25*XI + 0.25 YY"`` or a bare label like ``"-ZI"``."""
        s = text.replace(" ", "")
        if not s:
            raise ValueError("empty observable")
        if s[0] not in "+-":
            s = "+" + s
        terms = []
        for sign, coef, label in re.findall(r"([+-])(?:([0-9.eE]+)\*?)?([IXYZ]+)", s):
            c = float(coef) if coef else 1.0
            terms.append((-c if sign == "-" else c, PauliString.from_label(label)))
        rebuilt = "".join(
            m.group(0) for m in re.finditer(r"([+-])(?:([0-9.eE]+)\*?)?([IXYZ]+)", s)
        )
        if rebuilt != s or not terms:
            raise ValueError(f"cannot parse observable {text!r}")
        n = terms[0][1].n
        return cls(n, tuple(terms))

    def label(self) -> str:
        return " ".join(f"{c:+.17g}*{P.label()}" for c, P in self.terms)

    def is_traceless(self) -> bool:
        return all(not P.is_identity or c == 0 for c, P in self.terms)
