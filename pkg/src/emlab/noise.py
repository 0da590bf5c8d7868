"""Noise channels in Pauli-transfer and Kraus form.

Every channel here acts either on a full n-qubit register ("global") or as an
identical single-qubit channel on every qubit ("local"). The JSON form of a
noise description is::

    {"kind": "depolarizing-local", "p": 0.9}
    {"kind": "depolarizing-global", "p": 0.9}
    {"kind": "pauli", "q": {"I": 0.9, "X": 0.1}}     # local if labels have length 1
    {"kind": "amplitude-damping", "gamma": 0.2}
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .pauli import PauliString, commutes

__all__ = [
    "COMPLETENESS_TOL",
    "POSITIVITY_TOL",
    "DepolarizingSpec",
    "PauliChannel",
    "KrausChannel",
    "NoiseSpec",
    "depolarizing_damping",
    "pauli_eigenvalue",
    "single_qubit_depolarizing_as_pauli_channel",
    "amplitude_damping",
    "apply_channel_dense",
    "noise_from_json",
    "noise_to_json",
    "is_pauli_noise",
]

COMPLETENESS_TOL = 1e-12
POSITIVITY_TOL = -1e-10

_PAULI_2x2 = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class DepolarizingSpec:
    """``M -> p M + (1 - p) Tr[M] I / d``, locally (d = 2) or globally (d = 2**n)."""

    p: float
    scope: str = "local"
    n: int | None = None

    def __post_init__(self):
        if self.scope not in ("local", "global"):
            raise ValueError(f"scope must be 'local' or 'global', not {self.scope!r}")
        lo = self.lower_limit()
        if not (lo - 1e-15 <= self.p <= 1 + 1e-15):
            raise ValueError(f"depolarizing p={self.p} outside [{lo}, 1]")

    @property
    def d(self) -> int | None:
        if self.scope == "local":
            return 2
        return None if self.n is None else 2**self.n

    def lower_limit(self) -> float:
        if self.scope == "local":
            return -1 / 3
        if self.n is None:
            return -1 / 3
        d = 2**self.n
        return -1 / (d * d - 1)

    @property
    def kind(self) -> str:
        return f"depolarizing-{self.scope}"


@dataclass(frozen=True)
class PauliChannel:
    """``rho -> sum_P q_P P rho P`` with ``q`` a distribution over Q_n.

    ``q`` maps letter labels (no phase) to probabilities. With ``local=True``
    the labels are single letters and the channel is applied on every qubit.
    """

    q: dict
    local: bool = False

    def __post_init__(self):
        if not self.q:
            raise ValueError("empty Pauli channel")
        lengths = {len(k) for k in self.q}
        if len(lengths) != 1:
            raise ValueError("all Pauli labels must have the same length")
        vals = np.array(list(self.q.values()), dtype=float)
        if np.any(vals < -1e-15):
            raise ValueError("Pauli channel probabilities must be non-negative")
        if abs(vals.sum() - 1) > 1e-12:
            raise ValueError(f"Pauli channel probabilities sum to {vals.sum()}, not 1")
        for k in self.q:
            PauliString.from_label(k)
        if self.local and lengths != {1}:
            raise ValueError("a local Pauli channel needs single-qubit labels")

    @property
    def n(self) -> int:
        return len(next(iter(self.q)))

    @property
    def kind(self) -> str:
        return "pauli"


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A channel given by Kraus operators on ``k`` qubits (local if k = 1)."""

    ops: tuple
    label: str = "kraus"
    gamma: float | None = None

    def __post_init__(self):
        ops = tuple(np.asarray(K, dtype=complex) for K in self.ops)
        object.__setattr__(self, "ops", ops)
        dim = ops[0].shape[0]
        if dim & (dim - 1) or any(K.shape != (dim, dim) for K in ops):
            raise ValueError("Kraus operators must be square with power-of-two dimension")
        total = sum(K.conj().T @ K for K in ops)
        if np.max(np.abs(total - np.eye(dim))) > COMPLETENESS_TOL:
            raise ValueError("Kraus operators are not complete (sum K^dag K != I)")

    @property
    def k(self) -> int:
        return self.ops[0].shape[0].bit_length() - 1

    @property
    def kind(self) -> str:
        return self.label

    def is_unital(self, tol: float = 1e-12) -> bool:
        d = self.ops[0].shape[0]
        out = sum(K @ K.conj().T for K in self.ops)
        return bool(np.max(np.abs(out - np.eye(d))) <= tol)


NoiseSpec = Union[DepolarizingSpec, PauliChannel, KrausChannel]


def is_pauli_noise(spec) -> bool:
    return isinstance(spec, (DepolarizingSpec, PauliChannel))


def depolarizing_damping(spec: DepolarizingSpec, P: PauliString) -> float:
    """Scalar multiplying ``P`` under the depolarizing channel."""
    if P.is_identity:
        return 1.0
    if spec.scope == "local":
        return spec.p ** P.weight
    if spec.n is not None and spec.n != P.n:
        raise ValueError(f"global channel on {spec.n} qubits applied to {P.n}-qubit Pauli")
    return float(spec.p)


def _local_eigenvalues(q: dict) -> dict[str, float]:
    # eigenvalue of a single-qubit Pauli channel on each letter
    out = {}
    for a in "IXYZ":
        A = PauliString.from_label(a)
        out[a] = sum(v * (1 if commutes(A, PauliString.from_label(k)) else -1) for k, v in q.items())
    return out


def pauli_eigenvalue(spec, P: PauliString) -> float:
    """Pauli-transfer eigenvalue of a Pauli-diagonal channel on ``P``."""
    if isinstance(spec, DepolarizingSpec):
        return depolarizing_damping(spec, P)
    if isinstance(spec, PauliChannel):
        if spec.local:
            lam = _local_eigenvalues(spec.q)
            return math.prod(lam[P.letter(i)] for i in range(P.n))
        if spec.n != P.n:
            raise ValueError("Pauli channel dimension mismatch")
        return sum(v * (1 if commutes(P, PauliString.from_label(k)) else -1) for k, v in spec.q.items())
    raise TypeError(f"{type(spec).__name__} is not Pauli-diagonal; use the dense simulator")


def single_qubit_depolarizing_as_pauli_channel(p: float) -> PauliChannel:
    """``q_I = (1 + 3p)/4`` and ``q_X = q_Y = q_Z = (1 - p)/4``."""
    DepolarizingSpec(p, "local")
    qi = (1 + 3 * p) / 4
    qo = (1 - p) / 4
    return PauliChannel({"I": qi, "X": qo, "Y": qo, "Z": qo}, local=True)


def amplitude_damping(gamma: float) -> KrausChannel:
    """Single-qubit T1 decay towards |0>."""
    if not 0 <= gamma <= 1:
        raise ValueError(f"gamma={gamma} outside [0, 1]")
    K0 = np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex)
    K1 = np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex)
    return KrausChannel((K0, K1), label="amplitude-damping", gamma=gamma)


def _apply_local_ops(rho: np.ndarray, n: int, ops) -> np.ndarray:
    """Apply the same single-qubit Kraus set to every qubit of ``rho``."""
    t = rho.reshape((2,) * (2 * n))
    for q in range(n):
        acc = None
        for K in ops:
            a = np.tensordot(K, t, axes=([1], [q]))
            a = np.moveaxis(a, 0, q)
            a = np.tensordot(a, K.conj(), axes=([n + q], [1]))
            a = np.moveaxis(a, -1, n + q)
            acc = a if acc is None else acc + a
        t = acc
    return t.reshape(2**n, 2**n)


def _num_qubits(rho: np.ndarray) -> int:
    d = rho.shape[0]
    if rho.ndim != 2 or rho.shape != (d, d) or d & (d - 1):
        raise ValueError(f"not a 2**n square matrix: shape {rho.shape}")
    return d.bit_length() - 1


def apply_channel_dense(ch: NoiseSpec, rho: np.ndarray) -> np.ndarray:
    """Exact action of a noise layer on a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    n = _num_qubits(rho)
    d = 2**n
    if isinstance(ch, DepolarizingSpec):
        if ch.scope == "global":
            if ch.n is not None and ch.n != n:
                raise ValueError(f"global channel on {ch.n} qubits, state on {n}")
            return ch.p * rho + (1 - ch.p) * np.trace(rho) * np.eye(d) / d
        ch = single_qubit_depolarizing_as_pauli_channel(ch.p)
    if isinstance(ch, PauliChannel):
        if ch.local:
            ops = [math.sqrt(v) * _PAULI_2x2[k] for k, v in ch.q.items() if v > 0]
            return _apply_local_ops(rho, n, ops)
        if ch.n != n:
            raise ValueError(f"Pauli channel on {ch.n} qubits, state on {n}")
        from .dense import pauli_matrix

        out = np.zeros_like(rho)
        for k, v in ch.q.items():
            if v:
                P = pauli_matrix(PauliString.from_label(k))
                out += v * (P @ rho @ P)
        return out
    if isinstance(ch, KrausChannel):
        if ch.k == 1:
            return _apply_local_ops(rho, n, ch.ops)
        if ch.k != n:
            raise ValueError(f"{ch.k}-qubit Kraus channel cannot act on {n} qubits")
        return sum(K @ rho @ K.conj().T for K in ch.ops)
    raise TypeError(f"unknown channel type {type(ch).__name__}")


def noise_to_json(spec: NoiseSpec) -> dict:
    if isinstance(spec, DepolarizingSpec):
        out = {"kind": spec.kind, "p": spec.p}
        if spec.scope == "global" and spec.n is not None:
            out["n"] = spec.n
        return out
    if isinstance(spec, PauliChannel):
        return {"kind": "pauli", "q": dict(spec.q)}
    if isinstance(spec, KrausChannel) and spec.label == "amplitude-damping":
        return {"kind": "amplitude-damping", "gamma": spec.gamma}
    raise TypeError(f"no JSON form for {spec!r}")


def noise_from_json(obj: dict) -> NoiseSpec:
    kind = obj.get("kind")
    if kind == "depolarizing-local":
        return DepolarizingSpec(float(obj["p"]), "local")
    if kind == "depolarizing-global":
        return DepolarizingSpec(float(obj["p"]), "global", obj.get("n"))
    if kind == "pauli":
        q = {str(k): float(v) for k, v in obj["q"].items()}
        return PauliChannel(q, local=len(next(iter(q))) == 1)
    if kind == "amplitude-damping":
        return amplitude_damping(float(obj["gamma"]))
    raise ValueError(f"unknown noise kind {kind!r}")


def all_pauli_labels(n: int):
    """Letter labels of Q_n in ``(x << n) | z`` index order."""
    for idx in range(4**n):
        x, z = idx >> n, idx & ((1 << n) - 1)
        yield PauliString(n, x, z).label()
