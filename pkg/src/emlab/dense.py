"""Exact small-n density-matrix simulation.

This is the brute-force reference every faster estimator is checked against.
States are plain ``(2**n, 2**n)`` complex arrays; qubit 0 is the most
significant bit of a basis index. All logarithms are base 2.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .noise import POSITIVITY_TOL, apply_channel_dense
from .pauli import CliffordTableau, PauliString, PauliSum, as_rng, _xz_phase

__all__ = [
    "DENSE_MAX_QUBITS",
    "SUPPORT_CUTOFF",
    "DivergenceReport",
    "basis_state",
    "maximally_mixed",
    "pure_state",
    "check_density_matrix",
    "pauli_matrix",
    "apply_pauli",
    "clifford_unitary",
    "apply_clifford",
    "evolve",
    "purity",
    "von_neumann_entropy",
    "divergences",
    "relative_entropy",
    "expectation",
    "basis_probabilities",
    "sample_basis",
    "sample_basis_counts",
    "tv_distance",
    "kl_divergence",
    "bretagnolle_huber_bound",
    "random_density_matrix",
    "pauli_coefficients",
    "save_density_matrix",
    "load_density_matrix",
]

DENSE_MAX_QUBITS = 12
SUPPORT_CUTOFF = 1e-10

_LETTER = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _nq(rho: np.ndarray) -> int:
    d = rho.shape[0]
    if rho.ndim != 2 or rho.shape[1] != d or d & (d - 1):
        raise ValueError(f"not a 2**n square matrix: shape {rho.shape}")
    return d.bit_length() - 1


def _check_dense_n(n: int) -> None:
    if n > DENSE_MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds the dense limit of {DENSE_MAX_QUBITS}")


def basis_state(n: int, x: int | str = 0) -> np.ndarray:
    """``|x><x|``; ``x`` is an integer index or a bit string like ``"0110"``."""
    _check_dense_n(n)
    if isinstance(x, str):
        if len(x) != n:
            raise ValueError("bit string length must equal n")
        x = int(x, 2)
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[x, x] = 1
    return rho


def maximally_mixed(n: int) -> np.ndarray:
    _check_dense_n(n)
    return np.eye(2**n, dtype=complex) / 2**n


def pure_state(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def check_density_matrix(rho: np.ndarray, tol: float = 1e-12) -> None:
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit trace and PSD."""
    _nq(rho)
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"density matrix trace is {np.trace(rho).real}, not 1")
    if np.linalg.eigvalsh(rho).min() < POSITIVITY_TOL:
        raise ValueError("density matrix has a negative eigenvalue")


def pauli_matrix(P: PauliString) -> np.ndarray:
    """Dense matrix of ``P`` built from Kronecker products of 2x2 Paulis."""
    _check_dense_n(P.n)
    m = np.ones((1, 1), dtype=complex)
    for q in range(P.n):
        m = np.kron(m, _LETTER[P.letter(q)])
    return (1j**P.phase) * m


@lru_cache(maxsize=32)
def _indices(n: int) -> np.ndarray:
    return np.arange(2**n)


@lru_cache(maxsize=4096)
def _parity_signs(n: int, z: int) -> np.ndarray:
    idx = _indices(n)
    par = np.zeros(2**n, dtype=np.int64)
    zz = z
    bit = 0
    while zz:
        if zz & 1:
            par ^= (idx >> bit) & 1
        zz >>= 1
        bit += 1
    return 1 - 2 * par


def apply_pauli(P: PauliString, v: np.ndarray) -> np.ndarray:
    """``P @ v`` for a vector or matrix ``v`` without forming ``P``."""
    n = P.n
    idx = _indices(n)
    kxz = _xz_phase(P.x, P.z, P.phase)
    signs = _parity_signs(n, P.z)
    w = signs.reshape((-1,) + (1,) * (v.ndim - 1)) * v  # Z^z
    w = w[idx ^ P.x]  # X^x
    return (1j**kxz) * w


def clifford_unitary(T: CliffordTableau) -> np.ndarray:
    """A dense unitary ``U`` with ``U P U^dag = T(P)`` (global phase arbitrary).

    ``U|0..0>`` is the joint +1 eigenvector of the Z-generator images and
    ``U|x> = T(X^x) U|0..0>``.
    """
    n = T.n
    _check_dense_n(n)
    d = 2**n
    psi0 = None
    for k in range(d):
        v = np.zeros(d, dtype=complex)
        v[k] = 1
        for S in T.z_images:
            v = 0.5 * (v + apply_pauli(S, v))
        nrm = np.linalg.norm(v)
        if nrm > 1e-6:
            psi0 = v / nrm
            break
    if psi0 is None:  # pragma: no cover - impossible for a valid tableau
        raise ValueError("tableau has no stabilizer state")
    U = np.empty((d, d), dtype=complex)
    U[:, 0] = psi0
    # Gray-code order builds each column from its neighbour with one Pauli
    prev = 0
    col = psi0
    for i in range(1, d):
        g = i ^ (i >> 1)
        flip = g ^ prev
        q = n - 1 - (flip.bit_length() - 1)
        col = apply_pauli(T.x_images[q], col)
        U[:, g] = col
        prev = g
    return U


def apply_clifford(rho: np.ndarray, T: CliffordTableau) -> np.ndarray:
    U = clifford_unitary(T)
    return U @ rho @ U.conj().T


def evolve(rho: np.ndarray, circuit) -> np.ndarray:
    """Apply each unitary layer of ``circuit`` followed by its noise layer."""
    n = _nq(rho)
    _check_dense_n(n)
    if circuit.n != n:
        raise ValueError(f"circuit on {circuit.n} qubits, state on {n}")
    out = np.asarray(rho, dtype=complex)
    for layer in circuit.layers:
        u = layer.unitary
        if isinstance(u, CliffordTableau):
            out = apply_clifford(out, u)
        elif u is not None:
            u = np.asarray(u)
            out = u @ out @ u.conj().T
        if layer.noise is not None:
            out = apply_channel_dense(layer.noise, out)
    return out


def purity(rho: np.ndarray) -> float:
    """``Tr(rho^2)``."""
    return float(np.real(np.vdot(rho, rho)))


def _eigh(rho):
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    return w, v


def von_neumann_entropy(rho: np.ndarray) -> float:
    w = _eigh(rho)[0]
    w = w[w > SUPPORT_CUTOFF]
    return float(-np.sum(w * np.log2(w)))


@dataclass
class DivergenceReport:
    """Divergences ``D(rho || sigma)`` in bits.

    ``support_ok`` is False when ``supp(rho)`` is not inside ``supp(sigma)``;
    the relative entropy, the ``alpha > 1`` Renyi values and ``max_relative``
    are then ``inf``.
    """

    relative_entropy: float
    renyi: dict[float, float] = field(default_factory=dict)
    max_relative: float = 0.0
    support_ok: bool = True


def _matrix_function(w, v, f):
    return (v * f(w)) @ v.conj().T


def divergences(rho: np.ndarray, sigma: np.ndarray, alphas=(2.0,)) -> DivergenceReport:
    """Relative, Petz-Renyi and max-relative entropies in bits."""
    if rho.shape != sigma.shape:
        raise ValueError("rho and sigma have different dimensions")
    wr, vr = _eigh(rho)
    ws, vs = _eigh(sigma)
    wr = np.clip(wr, 0, None)
    ws = np.clip(ws, 0, None)
    sup_s = ws > SUPPORT_CUTOFF
    # weight of rho outside supp(sigma)
    vs_null = vs[:, ~sup_s]
    leak = float(np.real(np.trace(vs_null.conj().T @ rho @ vs_null))) if vs_null.size else 0.0
    support_ok = leak <= SUPPORT_CUTOFF

    renyi = {}
    for a in alphas:
        a = float(a)
        if a <= 0 or a == 1:
            raise ValueError("Renyi order must be in (0, 1) or (1, inf)")
        if a > 1 and not support_ok:
            renyi[a] = math.inf
            continue
        ra = _matrix_function(wr, vr, lambda x: np.where(x > 0, x, 0) ** a)
        sa = _matrix_function(
            ws[sup_s], vs[:, sup_s], lambda x: x ** (1 - a)
        )
        val = float(np.real(np.trace(ra @ sa)))
        renyi[a] = math.log2(val) / (a - 1) if val > 0 else math.inf

    if not support_ok:
        return DivergenceReport(math.inf, renyi, math.inf, False)

    pos = wr > SUPPORT_CUTOFF
    h = float(np.sum(wr[pos] * np.log2(wr[pos])))
    # Tr(rho log sigma) over supp(sigma)
    rho_s = vs[:, sup_s].conj().T @ rho @ vs[:, sup_s]
    cross = float(np.real(np.sum(np.diag(rho_s) * np.log2(ws[sup_s]))))
    rel = max(h - cross, 0.0) if h - cross > -1e-9 else h - cross

    inv_sqrt = vs[:, sup_s] / np.sqrt(ws[sup_s])
    m = inv_sqrt.conj().T @ rho @ inv_sqrt
    lam = np.linalg.eigvalsh((m + m.conj().T) / 2).max()
    dmax = math.log2(lam) if lam > 0 else -math.inf
    return DivergenceReport(rel, renyi, dmax, True)


def relative_entropy(rho: np.ndarray, sigma: np.ndarray | None = None) -> float:
    """``D(rho || sigma)`` in bits; ``sigma`` defaults to ``I / 2**n``."""
    n = _nq(rho)
    if sigma is None:
        w = np.clip(_eigh(rho)[0], 0, None)
        w = w[w > SUPPORT_CUTOFF]
        return float(n + np.sum(w * np.log2(w)))
    return divergences(rho, sigma, alphas=()).relative_entropy


def expectation(rho: np.ndarray, O: PauliSum | PauliString | str) -> float:
    """``Tr(O rho)`` for a Pauli-sum observable."""
    if isinstance(O, str):
        O = PauliSum.from_text(O)
    if isinstance(O, PauliString):
        O = PauliSum.from_pauli(O)
    n = _nq(rho)
    if O.n != n:
        raise ValueError(f"observable on {O.n} qubits, state on {n}")
    total = 0j
    for c, P in O.terms:
        total += c * np.trace(apply_pauli(P, rho))
    if abs(total.imag) > 1e-10:
        raise ValueError("expectation has an imaginary part; observable not Hermitian?")
    return float(total.real)


def basis_probabilities(rho: np.ndarray) -> np.ndarray:
    p = np.clip(np.real(np.diag(rho)), 0, None)
    return p / p.sum()


def sample_basis(rho: np.ndarray, seed=None) -> str:
    """One computational-basis measurement outcome as a bit string."""
    n = _nq(rho)
    rng = as_rng(seed)
    k = int(rng.choice(2**n, p=basis_probabilities(rho)))
    return format(k, f"0{n}b") if n else ""


def sample_basis_counts(rho: np.ndarray, shots: int, seed=None) -> np.ndarray:
    """Outcome histogram (indexed by basis integer) of ``shots`` measurements."""
    rng = as_rng(seed)
    return rng.multinomial(shots, basis_probabilities(rho))


def _as_dist(P):
    if isinstance(P, dict):
        return P
    return np.asarray(P, dtype=float)


def tv_distance(P, Q) -> float:
    """Total variation distance of two distributions (arrays or dicts)."""
    P, Q = _as_dist(P), _as_dist(Q)
    if isinstance(P, dict) or isinstance(Q, dict):
        if not (isinstance(P, dict) and isinstance(Q, dict)):
            raise ValueError("cannot compare a dict distribution with an array")
        keys = set(P) | set(Q)
        return 0.5 * sum(abs(P.get(k, 0.0) - Q.get(k, 0.0)) for k in keys)
    if P.shape != Q.shape:
        raise ValueError("distributions have different supports")
    return float(0.5 * np.abs(P - Q).sum())


def kl_divergence(P, Q) -> float:
    """Classical relative entropy in bits (``inf`` if supports disagree)."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape:
        raise ValueError("distributions have different supports")
    mask = P > 0
    if np.any(Q[mask] <= 0):
        return math.inf
    return float(np.sum(P[mask] * np.log2(P[mask] / Q[mask])))


def bretagnolle_huber_bound(kl_bits: float) -> float:
    """Upper bound ``sqrt(1 - exp(-KL))`` on TV, with KL supplied in bits."""
    if math.isinf(kl_bits):
        return 1.0
    return math.sqrt(max(0.0, 1.0 - 2.0 ** (-kl_bits)))


def random_density_matrix(n: int, rank: int | None = None, seed=None) -> np.ndarray:
    """Random state ``G G^dag / Tr`` with Ginibre ``G`` of the given rank."""
    rng = as_rng(seed)
    d = 2**n
    r = d if rank is None else rank
    g = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def pauli_coefficients(rho: np.ndarray) -> np.ndarray:
    """``Tr(X^x Z^z rho)`` for all ``(x, z)``, as a ``(2**n, 2**n)`` array ``[x, z]``.

    Uses ``Tr(X^x Z^z rho) = sum_k (-1)^{z.k} rho[k, k ^ x]`` and a fast
    Walsh-Hadamard transform over ``k``.
    """
    n = _nq(rho)
    d = 2**n
    idx = np.arange(d)
    # rows: x ; columns: k
    a = rho[idx[None, :], idx[None, :] ^ idx[:, None]].astype(complex)
    h = 1
    while h < d:
        a = a.reshape(d, -1, 2, h)
        s = a[:, :, 0, :] + a[:, :, 1, :]
        t = a[:, :, 0, :] - a[:, :, 1, :]
        a = np.stack([s, t], axis=2).reshape(d, d)
        h *= 2
    return a


def save_density_matrix(path, rho: np.ndarray) -> None:
    """Write ``rho`` as a JSON header followed by row-major complex128 pairs.

    Layout: 4-byte little-endian header length, UTF-8 JSON header with keys
    ``n``, ``endianness``, ``dtype`` and ``order``, then the raw data.
    """
    rho = np.ascontiguousarray(rho, dtype="<c16")
    header = json.dumps(
        {"n": _nq(rho), "endianness": "little", "dtype": "complex128", "order": "row-major"}
    ).encode()
    with open(path, "wb") as fh:
        fh.write(len(header).to_bytes(4, "little"))
        fh.write(header)
        fh.write(rho.tobytes(order="C"))


def load_density_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        hlen = int.from_bytes(fh.read(4), "little")
        header = json.loads(fh.read(hlen).decode())
        data = fh.read()
    n = int(header["n"])
    dt = "<c16" if header.get("endianness", sys.byteorder) == "little" else ">c16"
    arr = np.frombuffer(data, dtype=dt)
    if arr.size != 4**n:
        raise ValueError("density matrix file is truncated")
    return arr.reshape(2**n, 2**n).astype(complex)
