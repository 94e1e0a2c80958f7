"""SWAP-test fidelity estimation and pair-distance measurement.

The circuit is the ancilla-controlled swap: with the joint register
|0> (x) |phi> (x) |psi>, apply H on the ancilla, one FREDKIN per
swapped qubit pair, H again, then read the ancilla. Pr(0) relates to
the state overlap by Pr(0) = 1/2 + |<phi|psi>|^2 / 2, and for encoded
coordinate pairs the Euclidean distance follows from
d^2 = 4 * W * (Pr(0) - 1/2).

``shots=0`` means exact mode: Pr(0) is read from the statevector.
Exact mode reproduces the classical distance analytically; shot mode
models the sampled experiment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import md
from .encode import prepare_swap_inputs
from .errors import EncodingError
from .qsim import QuantumRegister, apply_gate, measure_all, standard_gate, tensor_product


@dataclass(frozen=True)
class SwapTestResult:
    prob_zero: float
    fidelity: float
    shots: int
    seed: int


@dataclass(frozen=True)
class DistanceEstimate:
    value: float
    exact: float
    shots: int


def _swap_circuit_output(phi: QuantumRegister, psi: QuantumRegister, psi_qubits) -> QuantumRegister:
    joint = tensor_product(tensor_product(_zero(), phi), psi)
    h = standard_gate("H")
    fredkin = standard_gate("FREDKIN")
    joint = apply_gate(joint, h, (0,))
    for i, pq in enumerate(psi_qubits):
        a = 1 + i                      # qubit i of phi
        b = 1 + phi.num_qubits + pq    # qubit pq of psi
        joint = apply_gate(joint, fredkin, (0, a, b))
    return apply_gate(joint, h, (0,))


def _zero() -> QuantumRegister:
    return QuantumRegister(1, np.array([1.0, 0.0], dtype=complex))


def swap_test(
    phi: QuantumRegister,
    psi: QuantumRegister,
    shots: int,
    seed: int,
    psi_qubits=None,
    readout_flip: float = 0.0,
) -> SwapTestResult:
    """Run the SWAP test between phi and (a subset of) psi's qubits.

    By default the whole registers are swapped, which requires equal
    sizes. ``psi_qubits`` selects which psi qubits pair up with phi's
    qubits instead (one per phi qubit, in order); the distance circuit
    uses this to swap against psi's label qubit only.
    """
    if psi_qubits is None:
        if phi.num_qubits != psi.num_qubits:
            raise ValueError(
                "register size mismatch for the controlled swap: "
                f"{phi.num_qubits} vs {psi.num_qubits} (pass psi_qubits to "
                "swap against a subset)"
            )
        psi_qubits = tuple(range(psi.num_qubits))
    else:
        psi_qubits = tuple(int(q) for q in psi_qubits)
        if len(psi_qubits) != phi.num_qubits:
            raise ValueError("psi_qubits must name one psi qubit per phi qubit")
        if any(not 0 <= q < psi.num_qubits for q in psi_qubits):
            raise ValueError("psi_qubits out of range")
    out = _swap_circuit_output(phi, psi, psi_qubits)
    if shots == 0:
        prob_zero = 1.0 - out.bit_marginal(0)
    elif shots >= 1:
        hist = measure_all(out, shots, seed, readout_flip=readout_flip)
        zeros = sum(c for bits, c in hist.counts.items() if bits[0] == "0")
        prob_zero = zeros / shots
    else:
        raise ValueError("shots must be 0 (exact) or >= 1")
    fidelity = min(1.0, max(0.0, 2.0 * prob_zero - 1.0))
    return SwapTestResult(prob_zero, fidelity, shots, seed)


def estimate_distance(u, v, shots: int, seed: int) -> DistanceEstimate:
    """Euclidean distance between two 3D coordinates via the SWAP test.

    A zero-norm coordinate (atom at the origin) cannot be amplitude
    encoded; both points are then shifted by +1 on each axis, which
    leaves the distance unchanged. Sampling noise can push the
    radicand slightly negative; it clamps to zero.
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    exact = md.euclidean_distance(u, v)
    if np.linalg.norm(u) == 0.0 and np.linalg.norm(v) == 0.0:
        raise EncodingError("both coordinates have zero norm")
    if np.linalg.norm(u) == 0.0 or np.linalg.norm(v) == 0.0:
        u = u + 1.0
        v = v + 1.0
    phi, psi, w = prepare_swap_inputs(u, v)
    result = swap_test(phi, psi, shots, seed, psi_qubits=(0,))
    d_squared = 4.0 * w * (result.prob_zero - 0.5)
    return DistanceEstimate(float(np.sqrt(max(0.0, d_squared))), exact, shots)


def distance_matrix_quantum(segment_a, segment_b, shots: int, seed: int):
    """Pairwise distance estimates between two coordinate lists.

    One independent SWAP-test execution per atom pair, each with a
    per-pair seed derived as base seed + pair index.
    """
    seg_a = [np.asarray(p, dtype=float).ravel() for p in segment_a]
    seg_b = [np.asarray(p, dtype=float).ravel() for p in segment_b]
    if not seg_a or not seg_b:
        raise ValueError("segments must be nonempty")
    rows = []
    for i, pu in enumerate(seg_a):
        row = []
        for j, pv in enumerate(seg_b):
            pair_seed = seed + i * len(seg_b) + j
            row.append(estimate_distance(pu, pv, shots, pair_seed))
        rows.append(row)
    return rows
