"""Classical-to-quantum data encoding.

Amplitude encoding loads a normalized real vector into register
amplitudes, zero-padding to the next power of two. The SWAP-test input
preparation builds the two registers used for pair-distance estimation:

* phi, one qubit: (|u| |0> - |v| |1>) / sqrt(W) with W = |u|^2 + |v|^2
* psi, the pair register: the per-vector normalized, zero-padded
  vectors written into the two halves of one register, each half
  carrying weight 1/sqrt(2). The register's qubit 0 acts as the label
  qubit (0 selects the u half, 1 the v half).

W is carried alongside so the distance formula d^2 = 4*W*(Pr(0)-1/2)
can be applied after the SWAP test. State preparation is direct
amplitude injection, a simulator privilege.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import EncodingError
from .qsim import QuantumRegister


def required_qubits(p: int) -> int:
    """Qubits needed to hold a length-p vector: ceil(log2 p), minimum 1."""
    if p < 1:
        raise EncodingError(f"vector length must be >= 1, got {p}")
    return max(1, (int(p) - 1).bit_length())


@dataclass(frozen=True)
class EncodedState:
    register: QuantumRegister
    source_dim: int
    padded_dim: int


def _as_vector(values) -> np.ndarray:
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise EncodingError("empty vector")
    if not np.all(np.isfinite(x)):
        raise EncodingError("non-finite entry in vector")
    return x


def _padded(x: np.ndarray, dim: int | None = None) -> np.ndarray:
    dim = dim if dim is not None else 1 << required_qubits(x.size)
    out = np.zeros(dim)
    out[: x.size] = x
    return out


def amplitude_encode(values) -> EncodedState:
    """Normalize, zero-pad to the next power of two, load into a register."""
    x = _as_vector(values)
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        raise EncodingError("cannot amplitude-encode a zero-norm vector")
    n = required_qubits(x.size)
    padded = _padded(x, 1 << n)
    reg = QuantumRegister(n, (padded / norm).astype(complex))
    return EncodedState(reg, x.size, 1 << n)


class SwapInputs(NamedTuple):
    phi: QuantumRegister
    psi: QuantumRegister
    w: float


def prepare_swap_inputs(u, v) -> SwapInputs:
    """Build the (phi, psi, W) triple for a coordinate pair.

    Both vectors are padded to a common power-of-two length (3D
    coordinates gain a zero fourth component) before the halves are
    written into psi.
    """
    u = _as_vector(u)
    v = _as_vector(v)
    if u.size != v.size:
        raise EncodingError(f"vector lengths differ: {u.size} vs {v.size}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise EncodingError("cannot encode a zero-norm vector")
    w = nu * nu + nv * nv
    phi = QuantumRegister(
        1, np.array([nu, -nv], dtype=complex) / math.sqrt(w)
    )
    pad_dim = 1 << required_qubits(u.size)
    halves = np.concatenate([_padded(u, pad_dim) / nu, _padded(v, pad_dim) / nv])
    psi = QuantumRegister(
        required_qubits(2 * pad_dim), (halves / math.sqrt(2.0)).astype(complex)
    )
    return SwapInputs(phi, psi, w)
