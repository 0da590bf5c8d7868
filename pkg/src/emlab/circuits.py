"""Layered circuit families with interleaved noise.

A circuit is a tuple of :class:`Layer` values. Each layer applies its unitary
part (a Clifford tableau, a dense matrix or nothing) and then its noise part.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np

from .noise import DepolarizingSpec, KrausChannel, NoiseSpec, PauliChannel, noise_to_json
from .pauli import (
    CliffordTableau,
    as_rng,
    cnot,
    hadamard,
    identity_tableau,
    sample_random_clifford,
)

__all__ = [
    "FAMILIES",
    "Layer",
    "LayeredCircuit",
    "CircuitFamilySpec",
    "build_mixing_circuit",
    "build_identity_circuit",
    "build_brickwork",
    "brickwork_pairs",
    "build_parity_circuit",
    "build_circuit",
    "attach_noise",
    "drop_noise",
    "lattice_side",
]

FAMILIES = ("mixing", "identity", "brickwork", "parity")


@dataclass(frozen=True, eq=False)
class Layer:
    """One unitary step followed by an optional noise channel."""

    unitary: CliffordTableau | np.ndarray | None = None
    noise: NoiseSpec | None = None

    def hash(self) -> str:
        u = self.unitary
        if u is None:
            return "identity"
        if isinstance(u, CliffordTableau):
            return u.digest()
        return hashlib.sha256(np.ascontiguousarray(u, dtype=complex).tobytes()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class LayeredCircuit:
    n: int
    layers: tuple[Layer, ...] = ()
    connectivity: str = "all-to-all"
    family: str = "custom"
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        for layer in self.layers:
            u = layer.unitary
            if isinstance(u, CliffordTableau) and u.n != self.n:
                raise ValueError(f"layer tableau on {u.n} qubits in an {self.n}-qubit circuit")
            if isinstance(u, np.ndarray) and u.shape != (2**self.n, 2**self.n):
                raise ValueError("dense layer has the wrong dimension")

    @property
    def D(self) -> int:
        return len(self.layers)

    @property
    def is_clifford(self) -> bool:
        return all(layer.unitary is None or isinstance(layer.unitary, CliffordTableau) for layer in self.layers)

    @property
    def is_noiseless(self) -> bool:
        return all(layer.noise is None for layer in self.layers)

    def tableaux(self) -> list[CliffordTableau]:
        """Unitary parts as tableaux (``None`` becomes the identity)."""
        if not self.is_clifford:
            raise TypeError("circuit has non-Clifford layers")
        ident = identity_tableau(self.n)
        return [ident if layer.unitary is None else layer.unitary for layer in self.layers]

    def total_tableau(self) -> CliffordTableau:
        """Tableau of the whole noiseless circuit."""
        t = identity_tableau(self.n)
        for u in self.tableaux():
            t = u.compose(t)
        return t

    def prefix(self, depth: int) -> "LayeredCircuit":
        return replace(self, layers=self.layers[:depth])

    def __eq__(self, other) -> bool:
        if not isinstance(other, LayeredCircuit):
            return NotImplemented
        return self.manifest() == other.manifest()

    def __hash__(self):
        return hash(tuple(layer.hash() for layer in self.layers))

    def manifest(self) -> dict:
        """Reproducibility record: family, size, seed and a hash per layer."""
        return {
            "family": self.family,
            "n": self.n,
            "D": self.D,
            "connectivity": self.connectivity,
            "seed": self.seed,
            "layers": [
                {
                    "unitary": layer.hash(),
                    "noise": None if layer.noise is None else _noise_label(layer.noise),
                }
                for layer in self.layers
            ],
        }


def _noise_label(spec: NoiseSpec):
    try:
        return noise_to_json(spec)
    except TypeError:
        return spec.kind


@dataclass(frozen=True)
class CircuitFamilySpec:
    """Parameters of one circuit family.

    ``d`` is required for ``brickwork`` and ``secret`` for ``parity``.
    """

    family: str
    n: int
    D: int = 1
    d: int | None = None
    secret: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n < 1 and self.family != "parity":
            raise ValueError("need at least one qubit")
        if self.D < 0:
            raise ValueError("depth must be non-negative")
        if self.family == "brickwork" and self.d is None:
            raise ValueError("brickwork family needs a lattice dimension d")
        if self.family == "parity":
            if self.secret is None:
                raise ValueError("parity family needs a secret bit string")
            if any(c not in "01" for c in self.secret):
                raise ValueError("secret must be a bit string")

    @classmethod
    def from_dict(cls, obj: dict) -> "CircuitFamilySpec":
        known = {"family", "n", "D", "d", "secret", "seed"}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown circuit keys {sorted(extra)}")
        return cls(**obj)


def build_mixing_circuit(n: int, D: int, seed=None) -> LayeredCircuit:
    """``D`` independent uniform random Cliffords on all ``n`` qubits."""
    rng = as_rng(seed)
    layers = tuple(Layer(sample_random_clifford(n, rng)) for _ in range(D))
    return LayeredCircuit(n, layers, "all-to-all", "mixing", _seed_value(seed))


def build_identity_circuit(n: int, D: int) -> LayeredCircuit:
    """``D`` identity layers: only the noise acts."""
    return LayeredCircuit(n, tuple(Layer(None) for _ in range(D)), "all-to-all", "identity")


def lattice_side(n: int, d: int) -> int:
    """Side length ``L`` with ``L**d == n``; raises if there is none."""
    if d < 1:
        raise ValueError("lattice dimension must be at least 1")
    L = round(n ** (1 / d))
    for cand in (L - 1, L, L + 1):
        if cand >= 1 and cand**d == n:
            return cand
    raise ValueError(f"{n} qubits do not fill a {d}-dimensional cubic lattice")


def brickwork_pairs(n: int, d: int, step: int) -> list[tuple[int, int]]:
    """Nearest-neighbour pairs acted on at layer ``step``.

    Layers cycle through the ``d`` lattice axes; along each axis the even
    bonds come first and the odd bonds next. Qubit index is row-major over
    the lattice coordinates.
    """
    L = lattice_side(n, d)
    axis = (step // 2) % d
    parity = step % 2
    stride = L ** (d - 1 - axis)
    pairs = []
    for q in range(n):
        coord = (q // stride) % L
        if coord % 2 == parity and coord + 1 < L:
            pairs.append((q, q + stride))
    return pairs


def build_brickwork(n: int, D: int, d: int = 1, seed=None) -> LayeredCircuit:
    """Alternating sublayers of random 2-qubit Cliffords on a ``d``-dim lattice."""
    lattice_side(n, d)
    rng = as_rng(seed)
    layers = []
    for step in range(D):
        t = identity_tableau(n)
        for a, b in brickwork_pairs(n, d, step):
            t = sample_random_clifford(2, rng).embed(n, (a, b)).compose(t)
        layers.append(Layer(t))
    return LayeredCircuit(n, tuple(layers), f"lattice-{d}", "brickwork", _seed_value(seed))


def build_parity_circuit(s: str) -> LayeredCircuit:
    """Clifford circuit on ``len(s) + 1`` qubits preparing the parity state.

    Layer 1 puts the first ``n`` qubits in uniform superposition; layer 2 adds
    ``x . s`` onto the last qubit with one CNOT per set bit of ``s``.
    """
    if any(c not in "01" for c in s):
        raise ValueError("secret must be a bit string")
    n = len(s)
    m = n + 1
    h = identity_tableau(m)
    for q in range(n):
        h = hadamard(m, q).compose(h)
    c = identity_tableau(m)
    for q, bit in enumerate(s):
        if bit == "1":
            c = cnot(m, q, n).compose(c)
    return LayeredCircuit(m, (Layer(h), Layer(c)), "all-to-all", "parity")


def build_circuit(spec: CircuitFamilySpec) -> LayeredCircuit:
    if spec.family == "mixing":
        return build_mixing_circuit(spec.n, spec.D, spec.seed)
    if spec.family == "identity":
        return build_identity_circuit(spec.n, spec.D)
    if spec.family == "brickwork":
        return build_brickwork(spec.n, spec.D, spec.d, spec.seed)
    return build_parity_circuit(spec.secret)


def _check_noise_fits(c: LayeredCircuit, spec: NoiseSpec) -> None:
    if isinstance(spec, DepolarizingSpec) and spec.scope == "global":
        if spec.n is not None and spec.n != c.n:
            raise ValueError(f"global channel on {spec.n} qubits, circuit on {c.n}")
    elif isinstance(spec, PauliChannel) and not spec.local and spec.n != c.n:
        raise ValueError(f"Pauli channel on {spec.n} qubits, circuit on {c.n}")
    elif isinstance(spec, KrausChannel) and spec.k not in (1, c.n):
        raise ValueError(f"{spec.k}-qubit Kraus channel does not fit {c.n} qubits")


def attach_noise(c: LayeredCircuit, spec: NoiseSpec) -> LayeredCircuit:
    """Put ``spec`` after every unitary layer (replacing any existing noise)."""
    _check_noise_fits(c, spec)
    return replace(c, layers=tuple(Layer(layer.unitary, spec) for layer in c.layers))


def drop_noise(c: LayeredCircuit) -> LayeredCircuit:
    return replace(c, layers=tuple(Layer(layer.unitary, None) for layer in c.layers))


def _seed_value(seed):
    if seed is None or isinstance(seed, (int, np.integer)):
        return None if seed is None else int(seed)
    return None

