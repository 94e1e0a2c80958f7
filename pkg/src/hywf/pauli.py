"""Pauli-string algebra: decomposing Hermitian matrices into weighted sums.

A Pauli string is a plain str over {I, X, Y, Z}; the weighted sum keeps
real coefficients only, which is all a Hermitian operator needs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .qsim import Gate

PAULI_LETTERS = "IXYZ"

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

WEIGHT_PRUNE_TOL = 1e-12

_basis_cache: dict = {}


def _check_string(s: str) -> str:
    if not s or any(ch not in PAULI_LETTERS for ch in s):
        raise ValidationError(f"invalid Pauli string {s!r}")
    return s


def pauli_matrix(s: str) -> Gate:
    """Kronecker product of the single-qubit Pauli matrices, in order."""
    _check_string(s)
    m = np.array([[1.0 + 0j]])
    for ch in s:
        m = np.kron(m, _SINGLE[ch])
    return Gate(s, len(s), m)


def all_strings(n: int):
    """All 4**n Pauli strings on n qubits, in lexicographic I<X<Y<Z order."""
    return ("".join(p) for p in itertools.product(PAULI_LETTERS, repeat=n))


def _basis_matrices(n: int) -> list:
    if n not in _basis_cache:
        _basis_cache[n] = [(s, pauli_matrix(s).matrix) for s in all_strings(n)]
    return _basis_cache[n]


@dataclass
class WeightedPauliSum:
    """Hermitian operator as sum_a w_a P_a with real weights."""

    num_qubits: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for s, w in self.terms.items():
            _check_string(s)
            if len(s) != self.num_qubits:
                raise ValidationError(
                    f"term {s!r} has length {len(s)}, expected {self.num_qubits}"
                )
            w = float(w)
            if not np.isfinite(w):
                raise ValidationError(f"non-finite weight for {s!r}")
            if abs(w) >= WEIGHT_PRUNE_TOL:
                cleaned[s] = w
        self.terms = cleaned
        self._matrix = None

    def __len__(self) -> int:
        return len(self.terms)

    def to_matrix(self) -> np.ndarray:
        """Dense reconstruction sum_a w_a P_a (cached)."""
        if self._matrix is None:
            self._matrix = reconstruct(self)
        return self._matrix

    def scaled(self, factor: float) -> "WeightedPauliSum":
        return WeightedPauliSum(
            self.num_qubits, {s: w * factor for s, w in self.terms.items()}
        )

    def to_text(self) -> str:
        """Repository form, one ``<string> <weight>`` per line."""
        lines = [f"{s} {w!r}" for s, w in sorted(self.terms.items())]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "WeightedPauliSum":
        terms = {}
        n = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValidationError(f"line {lineno}: expected '<string> <weight>'")
            s, w = parts[0], float(parts[1])
            _check_string(s)
            n = n if n is not None else len(s)
            terms[s] = terms.get(s, 0.0) + w
        if n is None:
            raise ValidationError("empty Pauli sum text")
        return cls(n, terms)


def is_hermitian(m: np.ndarray, tol: float = 1e-9) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(
        np.max(np.abs(m - m.conj().T)) <= tol
    )


def decompose(m: np.ndarray, hermitian_tol: float = 1e-9) -> WeightedPauliSum:
    """Expand a Hermitian 2**n x 2**n matrix over the Pauli basis.

    Weights come from the basis orthogonality, w_a = Tr(P_a m) / 2**n,
    and are real for Hermitian input.
    """
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, hermitian_tol):
        raise ValidationError("matrix is not Hermitian within tolerance")
    dim = m.shape[0]
    n = int(dim).bit_length() - 1
    if dim != 1 << n or dim < 2:
        raise ValidationError(f"dimension {dim} is not a power of two >= 2")
    terms = {}
    for s, p in _basis_matrices(n):
        w = np.einsum("ij,ji->", p, m) / dim
        if abs(w.imag) > 1e-10:
            raise ValidationError(f"non-real weight {w} for {s}")
        if abs(w.real) >= WEIGHT_PRUNE_TOL:
            terms[s] = float(w.real)
    return WeightedPauliSum(n, terms)


def reconstruct(p: WeightedPauliSum) -> np.ndarray:
    """Dense matrix sum_a w_a P_a; the zero matrix for an empty sum."""
    dim = 1 << p.num_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for s, w in p.terms.items():
        out += w * pauli_matrix(s).matrix
    return out


def pad_to_power_of_two(m: np.ndarray) -> np.ndarray:
    """Embed a Hermitian matrix as the top-left block of the next 2**n size.

    Zero padding preserves every eigenvalue of m and adds only zeros,
    so the largest eigenvalue survives whenever it is nonnegative.
    """
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m):
        raise ValidationError("matrix is not Hermitian within tolerance")
    dim = m.shape[0]
    target = 1 << max(1, (dim - 1).bit_length())
    if target == dim:
        return m.copy()
    out = np.zeros((target, target), dtype=m.dtype)
    out[:dim, :dim] = m
    return out
