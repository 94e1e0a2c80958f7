"""Dense statevector simulator: registers, gates, circuits, measurement.

Conventions fixed package-wide:

* Qubit 0 is the leftmost label in ``|i0, ..., i_{n-1}>`` and the most
  significant bit of the basis index.
* Registers are immutable after construction; every operation returns a
  new register.
* Global phase is not meaningful; equivalence checks quotient it out
  (see :func:`allclose_up_to_phase`).
* All sampling takes an explicit integer seed.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    CapacityError,
    MissingParameterError,
    UnsupportedGateError,
)

MAX_QUBITS = 24  # 2**24 complex doubles ~ 256 MB, the desk-scale cap

_NORM_TOL = 1e-9
_UNITARY_TOL = 1e-10

_SQRT2 = math.sqrt(2.0)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class QuantumRegister:
    """An n-qubit state: 2**n complex amplitudes over basis bitstrings."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        n = self.num_qubits
        if not 1 <= n <= MAX_QUBITS:
            raise CapacityError(f"register size {n} outside 1..{MAX_QUBITS}")
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << n,):
            raise ValueError(
                f"expected {1 << n} amplitudes for {n} qubits, got {amps.shape}"
            )
        if not np.all(np.isfinite(amps.view(np.float64))):
            raise ValueError("non-finite amplitude")
        norm2 = float(np.sum(amps.real**2 + amps.imag**2))
        if abs(norm2 - 1.0) > _NORM_TOL:
            raise ValueError(f"register norm^2 deviates from 1 by {abs(norm2 - 1.0):.3e}")
        object.__setattr__(self, "amplitudes", _readonly(amps))

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    def probabilities(self) -> np.ndarray:
        p = self.amplitudes.real**2 + self.amplitudes.imag**2
        return p / p.sum()

    def bit_marginal(self, qubit: int) -> float:
        """Probability that ``qubit`` measures 1."""
        p = self.probabilities().reshape([2] * self.num_qubits)
        axes = tuple(a for a in range(self.num_qubits) if a != qubit)
        return float(p.sum(axis=axes)[1])


def init_register(n: int) -> QuantumRegister:
    """Fresh n-qubit register in |0...0>."""
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise CapacityError(f"register size {n} outside 1..{MAX_QUBITS}")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    return QuantumRegister(int(n), amps)


@dataclass(frozen=True)
class Gate:
    """A named unitary acting on ``arity`` qubits."""

    name: str
    arity: int
    matrix: np.ndarray
    param: float | None = None

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        dim = 1 << self.arity
        if m.shape != (dim, dim):
            raise ValueError(f"gate {self.name}: expected {dim}x{dim} matrix")
        dev = np.max(np.abs(m @ m.conj().T - np.eye(dim)))
        if dev > _UNITARY_TOL:
            raise ValueError(f"gate {self.name} is not unitary (dev {dev:.3e})")
        object.__setattr__(self, "matrix", _readonly(m))

    def dagger(self) -> "Gate":
        return Gate(self.name + "†", self.arity, self.matrix.conj().T, self.param)


def _ry_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


_V = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])  # principal sqrt of X

_FIXED_GATES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / _SQRT2,
    "T": np.diag([1, cmath.exp(1j * math.pi / 4)]),
    "Tdag": np.diag([1, cmath.exp(-1j * math.pi / 4)]),
    "V": _V,
    "Vdag": _V.conj().T,
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}

_TOFFOLI = np.eye(8, dtype=complex)
_TOFFOLI[[6, 7]] = _TOFFOLI[[7, 6]]
_FIXED_GATES["TOFFOLI"] = _TOFFOLI

_FREDKIN = np.eye(8, dtype=complex)
_FREDKIN[[5, 6]] = _FREDKIN[[6, 5]]
_FIXED_GATES["FREDKIN"] = _FREDKIN

_ARITY = {name: int(math.log2(m.shape[0])) for name, m in _FIXED_GATES.items()}

# canonical spellings for case-insensitive lookup
_CANONICAL = {name.upper(): name for name in (*_FIXED_GATES, "P", "RY", "CV", "CVdag")}

PARAMETRIC_GATES = ("P", "RY")


def standard_gate(kind: str, param: float | None = None) -> Gate:
    """Look up a gate by name; P and RY require an angle in radians."""
    name = _CANONICAL.get(kind.upper())
    if name is None:
        raise UnsupportedGateError(f"unknown gate kind {kind!r}")
    if name in PARAMETRIC_GATES:
        if param is None:
            raise MissingParameterError(f"gate {name} requires an angle")
        if name == "P":
            matrix = np.diag([1, cmath.exp(1j * param)])
        else:
            matrix = _ry_matrix(param)
        return Gate(name, 1, matrix, float(param))
    if param is not None:
        raise UnsupportedGateError(f"gate {name} takes no parameter")
    if name in ("CV", "CVdag"):
        return controlled(standard_gate(name[1:]))
    return Gate(name, _ARITY[name], _FIXED_GATES[name])


def controlled(gate: Gate, name: str | None = None) -> Gate:
    """Add one control qubit (the new high bit) to a gate."""
    dim = 1 << gate.arity
    m = np.eye(2 * dim, dtype=complex)
    m[dim:, dim:] = gate.matrix
    return Gate(name or "C" + gate.name, gate.arity + 1, m, gate.param)


def apply_gate(reg: QuantumRegister, gate: Gate, targets) -> QuantumRegister:
    """Apply ``gate`` to the listed qubits; targets[0] is the gate's high bit."""
    targets = tuple(int(t) for t in targets)
    if len(targets) != gate.arity:
        raise ValueError(
            f"gate {gate.name} acts on {gate.arity} qubits, got {len(targets)} targets"
        )
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target in {targets}")
    for t in targets:
        if not 0 <= t < reg.num_qubits:
            raise ValueError(f"target {t} out of range for {reg.num_qubits} qubits")
    state = reg.amplitudes.copy()
    n = reg.num_qubits
    if gate.arity == 1:
        _kernels.apply_1q(state, gate.matrix, n, targets[0])
    elif gate.arity == 2:
        _kernels.apply_2q(state, gate.matrix, n, *targets)
    elif gate.arity == 3:
        _kernels.apply_3q(state, gate.matrix, n, *targets)
    else:
        psi = state.reshape([2] * n)
        k = gate.arity
        view = np.moveaxis(psi, targets, tuple(range(-k, 0)))
        shape = view.shape
        view[...] = (view.reshape(-1, 1 << k) @ gate.matrix.T).reshape(shape)
    return QuantumRegister(n, state)


def tensor_product(a, b):
    """Kronecker product of two gates or two registers."""
    if isinstance(a, QuantumRegister) and isinstance(b, QuantumRegister):
        return QuantumRegister(
            a.num_qubits + b.num_qubits, np.kron(a.amplitudes, b.amplitudes)
        )
    if isinstance(a, Gate) and isinstance(b, Gate):
        return Gate(
            f"{a.name}⊗{b.name}", a.arity + b.arity, np.kron(a.matrix, b.matrix)
        )
    raise TypeError("tensor_product takes two registers or two gates")


@dataclass(frozen=True)
class ShotHistogram:
    """Counts of measured bitstrings over a fixed number of shots."""

    shots: int
    counts: dict

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if sum(self.counts.values()) != self.shots:
            raise ValueError("histogram counts do not sum to shots")

    def frequency(self, bitstring: str) -> float:
        return self.counts.get(bitstring, 0) / self.shots

    def mode(self) -> str:
        """Most frequent bitstring; ties broken lexicographically."""
        best = max(self.counts.items(), key=lambda kv: (kv[1], kv[0]))
        top = best[1]
        return min(k for k, v in self.counts.items() if v == top)


def measure_all(
    reg: QuantumRegister,
    shots: int,
    seed: int,
    readout_flip: float = 0.0,
) -> ShotHistogram:
    """Sample all qubits ``shots`` times from the Born distribution.

    After sampling, each classical bit is independently flipped with
    probability ``readout_flip`` (simple readout-noise knob).
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not 0.0 <= readout_flip <= 1.0:
        raise ValueError("readout_flip must be in [0, 1]")
    rng = np.random.default_rng(seed)
    n = reg.num_qubits
    outcomes = rng.choice(reg.dim, size=shots, p=reg.probabilities())
    if readout_flip > 0.0:
        flips = rng.random((shots, n)) < readout_flip
        masks = flips.dot(1 << np.arange(n - 1, -1, -1)).astype(outcomes.dtype)
        outcomes = outcomes ^ masks
    values, freq = np.unique(outcomes, return_counts=True)
    counts = {format(int(v), f"0{n}b"): int(c) for v, c in zip(values, freq)}
    return ShotHistogram(shots, counts)


def expectation(reg: QuantumRegister, op) -> float:
    """<psi| op |psi> for a Hermitian operator.

    ``op`` is anything exposing ``num_qubits`` and ``to_matrix()`` (a
    weighted Pauli sum) or a plain 2**n x 2**n array. The imaginary
    part, below 1e-9 for Hermitian input, is discarded.
    """
    if hasattr(op, "to_matrix"):
        if op.num_qubits != reg.num_qubits:
            raise ValueError(
                f"operator acts on {op.num_qubits} qubits, register has {reg.num_qubits}"
            )
        m = op.to_matrix()
    else:
        m = np.asarray(op, dtype=complex)
        if m.shape != (reg.dim, reg.dim):
            raise ValueError(f"operator shape {m.shape} does not match dim {reg.dim}")
    val = np.vdot(reg.amplitudes, m @ reg.amplitudes)
    return float(val.real)


BELL_VARIANTS = ("phi_plus", "phi_minus", "psi_plus", "psi_minus")


def prepare_named_state(name: str, variant: str | None = None) -> QuantumRegister:
    """Bell, GHZ, or W state.

    Bell and GHZ run their H+CNOT preparation circuits; W is loaded
    directly (no circuit is prescribed for it).
    """
    key = name.strip().lower()
    if key == "bell":
        variant = (variant or "phi_plus").strip().lower()
        if variant not in BELL_VARIANTS:
            raise UnsupportedGateError(f"unknown Bell variant {variant!r}")
        reg = init_register(2)
        x = standard_gate("X")
        if variant in ("phi_minus", "psi_minus"):
            reg = apply_gate(reg, x, (0,))
        if variant in ("psi_plus", "psi_minus"):
            reg = apply_gate(reg, x, (1,))
        reg = apply_gate(reg, standard_gate("H"), (0,))
        return apply_gate(reg, standard_gate("CNOT"), (0, 1))
    if key == "ghz":
        reg = apply_gate(init_register(3), standard_gate("H"), (0,))
        cnot = standard_gate("CNOT")
        reg = apply_gate(reg, cnot, (0, 1))
        return apply_gate(reg, cnot, (0, 2))
    if key == "w":
        amps = np.zeros(8, dtype=complex)
        amps[[1, 2, 4]] = 1.0 / math.sqrt(3.0)
        return QuantumRegister(3, amps)
    raise UnsupportedGateError(f"unknown named state {name!r}")


@dataclass
class Circuit:
    """An ordered gate list on a fixed-width register.

    ``measurements`` optionally names the qubits read out at the end;
    ``None`` means measure everything when the circuit is sampled.
    """

    num_qubits: int
    ops: list = field(default_factory=list)
    measurements: list | None = None

    def __post_init__(self):
        for gate, targets in self.ops:
            targets = tuple(targets)
            if len(set(targets)) != len(targets):
                raise ValueError(f"duplicate target in {targets}")
            for t in targets:
                if not 0 <= t < self.num_qubits:
                    raise ValueError(f"target {t} out of range")
            if len(targets) != gate.arity:
                raise ValueError(f"gate {gate.name} arity mismatch")

    def add(self, gate: Gate, *targets: int) -> "Circuit":
        self.ops.append((gate, tuple(targets)))
        return self

    def run(self, reg: QuantumRegister | None = None) -> QuantumRegister:
        reg = reg if reg is not None else init_register(self.num_qubits)
        for gate, targets in self.ops:
            reg = apply_gate(reg, gate, targets)
        return reg

    def unitary(self) -> np.ndarray:
        """Dense composite matrix (small circuits only)."""
        dim = 1 << self.num_qubits
        u = np.eye(dim, dtype=complex)
        for gate, targets in self.ops:
            u = _embed(gate, targets, self.num_qubits) @ u
        return u

    def gate_names(self) -> set:
        return {gate.name for gate, _ in self.ops}

    def to_text(self) -> str:
        """One op per line: ``GATE target[,target...] [angle]``."""
        lines = []
        for gate, targets in self.ops:
            line = f"{gate.name} {','.join(str(t) for t in targets)}"
            if gate.param is not None:
                line += f" {gate.param!r}"
            lines.append(line)
        if self.measurements is not None:
            lines.append("MEASURE " + ",".join(str(q) for q in self.measurements))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, num_qubits: int | None = None) -> "Circuit":
        ops, measurements, max_q = [], None, -1
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0].upper() == "MEASURE":
                measurements = [int(q) for q in parts[1].split(",")]
                max_q = max(max_q, *measurements)
                continue
            if len(parts) not in (2, 3):
                raise ValueError(f"line {lineno}: expected 'GATE targets [angle]'")
            param = float(parts[2]) if len(parts) == 3 else None
            gate = standard_gate(parts[0], param)
            targets = tuple(int(t) for t in parts[1].split(","))
            max_q = max(max_q, *targets)
            ops.append((gate, targets))
        return cls(num_qubits if num_qubits is not None else max_q + 1, ops, measurements)


def _embed(gate: Gate, targets, n: int) -> np.ndarray:
    """Dense 2**n embedding of a gate on the given qubits."""
    k = gate.arity
    dim = 1 << n
    full = np.zeros((dim, dim), dtype=complex)
    mask = 0
    for t in targets:
        mask |= 1 << (n - 1 - t)
    rest = [i for i in range(dim) if not i & mask]
    shifts = [n - 1 - t for t in targets]
    offsets = np.zeros(1 << k, dtype=np.int64)
    for sub in range(1 << k):
        off = 0
        for j, sh in enumerate(shifts):
            if sub & (1 << (k - 1 - j)):
                off |= 1 << sh
        offsets[sub] = off
    for base in rest:
        rows = base + offsets
        full[np.ix_(rows, rows)] = gate.matrix
    return full


def decompose_gate(kind: str) -> Circuit:
    """Two-qubit-gate circuits for the three-qubit gates.

    TOFFOLI over {H, T, Tdag, CNOT}; FREDKIN over {CNOT, CV, CVdag}.
    Both composites reproduce the dense 8x8 matrices exactly.
    """
    name = kind.upper()
    h, t, tdag = standard_gate("H"), standard_gate("T"), standard_gate("Tdag")
    cnot = standard_gate("CNOT")
    if name == "TOFFOLI":
        c = Circuit(3)
        c.add(h, 2)
        c.add(cnot, 1, 2)
        c.add(tdag, 2)
        c.add(cnot, 0, 2)
        c.add(t, 2)
        c.add(cnot, 1, 2)
        c.add(tdag, 2)
        c.add(cnot, 0, 2)
        c.add(t, 1)
        c.add(t, 2)
        c.add(cnot, 0, 1)
        c.add(h, 2)
        c.add(t, 0)
        c.add(tdag, 1)
        c.add(cnot, 0, 1)
        return c
    if name == "FREDKIN":
        cv, cvdag = standard_gate("CV"), standard_gate("CVdag")
        c = Circuit(3)
        c.add(cnot, 2, 1)
        c.add(cv, 1, 2)
        c.add(cv, 0, 2)
        c.add(cnot, 0, 1)
        c.add(cvdag, 1, 2)
        c.add(cnot, 0, 1)
        c.add(cnot, 2, 1)
        return c
    raise UnsupportedGateError(f"no decomposition for {kind!r}")


def schmidt_rank(reg: QuantumRegister, cut: int) -> int:
    """Rank of the amplitude matrix across the cut (first ``cut`` qubits
    vs the rest); singular values below 1e-9 count as zero."""
    if not 1 <= cut < reg.num_qubits:
        raise ValueError(f"cut {cut} outside 1..{reg.num_qubits - 1}")
    m = reg.amplitudes.reshape(1 << cut, -1)
    svals = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(svals > 1e-9))


def allclose_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-10) -> bool:
    """Entrywise equality after removing one global phase."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        return False
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) == 0.0:
        return bool(np.max(np.abs(a)) <= tol)
    phase = a[idx] / b[idx]
    if abs(abs(phase) - 1.0) > 1e-6:
        return False
    return bool(np.max(np.abs(a - phase * b)) <= tol)
