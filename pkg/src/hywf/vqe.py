"""Variational quantum eigensolver for largest eigenvalues.

The hybrid loop: a hardware-efficient RY+CNOT ansatz prepares trial
states (quantum block), the cost <psi(theta)| H |psi(theta)> feeds a
classical parameter update, and the updated angles loop back into the
circuit. Largest eigenvalues come from minimizing the negated
operator. Exact mode (shots=0) evaluates expectations from the
statevector; shot mode samples every Pauli term independently.

Gradients are central finite differences with step 1e-4 for the
gradient-descent optimizer; the SPSA-like optimizer perturbs along a
single random +/-1 direction, which keeps the evaluation count flat in
shot mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels, md, qsim
from .errors import ValidationError
from .pauli import WeightedPauliSum, decompose, pad_to_power_of_two

FD_STEP = 1e-4
CONVERGENCE_TOL = 1e-8
CONVERGENCE_STREAK = 20
RESTARTS = 5

GRADIENT_DESCENT = "gradient-descent"
SPSA = "spsa-like-random-direction"
ENTANGLERS = ("linear-chain", "ring")


@dataclass(frozen=True)
class HyperparamSetting:
    """One point Pi in hyperparameter space."""

    ansatz_layers: int = 2
    entangler: str = "linear-chain"
    optimizer: str = GRADIENT_DESCENT
    learning_rate: float = 0.2
    max_iters: int = 300
    shots: int = 0  # 0 = exact expectation
    seed: int = 0

    def __post_init__(self):
        if self.ansatz_layers < 1:
            raise ValidationError("ansatz_layers must be >= 1")
        if self.entangler not in ENTANGLERS:
            raise ValidationError(f"entangler must be one of {ENTANGLERS}")
        if self.optimizer not in (GRADIENT_DESCENT, SPSA):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if self.shots < 0:
            raise ValidationError("shots must be 0 (exact) or positive")

    def describe(self) -> str:
        return (
            f"layers={self.ansatz_layers} entangler={self.entangler} "
            f"optimizer={self.optimizer} lr={self.learning_rate} "
            f"iters={self.max_iters} shots={self.shots} seed={self.seed}"
        )


@dataclass(frozen=True)
class Ansatz:
    """RY rotations on every qubit per layer, then CNOT entanglers."""

    num_qubits: int
    layers: int
    entangler_pairs: tuple

    @property
    def num_params(self) -> int:
        return self.num_qubits * self.layers

    def _pairs_array(self) -> np.ndarray:
        return np.asarray(self.entangler_pairs, dtype=np.int64).reshape(-1, 2)

    def states(self, thetas_batch: np.ndarray) -> np.ndarray:
        """Real statevectors for a batch of parameter vectors."""
        thetas_batch = np.atleast_2d(np.asarray(thetas_batch, dtype=np.float64))
        if thetas_batch.shape[1] != self.num_params:
            raise ValidationError(
                f"expected {self.num_params} parameters, got {thetas_batch.shape[1]}"
            )
        return _kernels.ry_ansatz_states(
            thetas_batch, self.num_qubits, self.layers, self._pairs_array()
        )

    def state(self, thetas) -> np.ndarray:
        return self.states(np.asarray(thetas, dtype=float)[None, :])[0]

    def register(self, thetas) -> qsim.QuantumRegister:
        return qsim.QuantumRegister(self.num_qubits, self.state(thetas).astype(complex))

    def circuit(self, thetas) -> qsim.Circuit:
        """Concrete gate sequence for fixed angles."""
        thetas = np.asarray(thetas, dtype=float)
        circ = qsim.Circuit(self.num_qubits)
        for layer in range(self.layers):
            for q in range(self.num_qubits):
                circ.add(qsim.standard_gate("RY", thetas[layer * self.num_qubits + q]), q)
            for ctrl, targ in self.entangler_pairs:
                circ.add(qsim.standard_gate("CNOT"), ctrl, targ)
        return circ


def build_ansatz(n_qubits: int, pi: HyperparamSetting) -> Ansatz:
    if n_qubits < 1:
        raise ValidationError("n_qubits must be >= 1")
    if n_qubits == 1:
        pairs: tuple = ()
    elif pi.entangler == "ring":
        pairs = tuple((q, (q + 1) % n_qubits) for q in range(n_qubits))
    else:
        pairs = tuple((q, q + 1) for q in range(n_qubits - 1))
    return Ansatz(n_qubits, pi.ansatz_layers, pairs)


# basis-change gates bringing X/Y measurement onto the Z axis
_TO_Z_BASIS = {
    "X": qsim.standard_gate("H"),
    "Y": qsim.Gate(
        "HSdag",
        1,
        np.array([[1, -1j], [1, 1j]], dtype=complex) / math.sqrt(2.0),
    ),
}


def _sampled_term(state, letters, shots, seed, readout_flip):
    """Estimate <P> for one Pauli string by measuring in its eigenbasis."""
    reg = qsim.QuantumRegister(len(letters), state.astype(complex))
    for q, letter in enumerate(letters):
        if letter in _TO_Z_BASIS:
            reg = qsim.apply_gate(reg, _TO_Z_BASIS[letter], (q,))
    hist = qsim.measure_all(reg, shots, seed, readout_flip=readout_flip)
    total = 0
    for bits, count in hist.counts.items():
        parity = sum(int(bits[q]) for q, letter in enumerate(letters) if letter != "I")
        total += count if parity % 2 == 0 else -count
    return total / shots


def _cost_batch(states, op, pi, seed, readout_flip):
    """Costs for a batch of real states: exact matrix contraction at
    shots=0, per-term measurement sampling otherwise."""
    if pi.shots == 0:
        m = np.ascontiguousarray(op.to_matrix().real)
        return ((states @ m) * states).sum(axis=1)
    out = np.zeros(states.shape[0])
    for b in range(states.shape[0]):
        total = 0.0
        for t, (letters, weight) in enumerate(sorted(op.terms.items())):
            if set(letters) == {"I"}:
                total += weight
                continue
            est = _sampled_term(
                states[b], letters, pi.shots, seed + 131 * b + t, readout_flip
            )
            total += weight * est
        out[b] = total
    return out


def cost(
    thetas,
    op: WeightedPauliSum,
    pi: HyperparamSetting,
    seed: int | None = None,
    readout_flip: float = 0.0,
) -> float:
    """C(theta) = <psi(theta)| op |psi(theta)> under the setting's mode."""
    ansatz = build_ansatz(op.num_qubits, pi)
    states = ansatz.states(np.asarray(thetas, dtype=float)[None, :])
    value = _cost_batch(states, op, pi, pi.seed if seed is None else seed, readout_flip)
    return float(value[0])


@dataclass
class VqeResult:
    lambda_vqe: float
    best_thetas: np.ndarray
    cost_trace: list = field(default_factory=list)  # (iteration, best cost so far)
    iterations_used: int = 0
    converged: bool = False

    def trace_csv(self) -> str:
        lines = ["iter, cost"] + [f"{i}, {c:.12g}" for i, c in self.cost_trace]
        return "\n".join(lines) + "\n"


_LADDER = 0.5 ** np.arange(10)


def _gd_restart(ansatz, op, pi, theta0, eval_batch, trace, offset, best):
    """Gradient descent with a geometric step-size line search.

    All ladder candidates theta - lr*2^-k*grad are evaluated in one
    batch and the best one wins; a bare first-improvement rule gets
    stuck bouncing across narrow valleys.
    """
    num_params = ansatz.num_params
    theta = theta0.copy()
    current = float(eval_batch(theta[None, :])[0])
    streak = 0
    iterations = 0
    converged = False
    for it in range(pi.max_iters):
        iterations = it + 1
        probes = np.repeat(theta[None, :], 2 * num_params, axis=0)
        for j in range(num_params):
            probes[2 * j, j] += FD_STEP
            probes[2 * j + 1, j] -= FD_STEP
        values = eval_batch(probes)
        grad = (values[0::2] - values[1::2]) / (2.0 * FD_STEP)
        candidates = theta[None, :] - (pi.learning_rate * _LADDER)[:, None] * grad[None, :]
        ladder = eval_batch(candidates)
        pick = int(np.argmin(ladder))
        delta = 0.0
        if ladder[pick] < current:
            delta = current - float(ladder[pick])
            theta, current = candidates[pick], float(ladder[pick])
        if current < best[0]:
            best[0], best[1] = current, theta.copy()
        trace.append((offset + it, best[0]))
        streak = streak + 1 if abs(delta) < CONVERGENCE_TOL else 0
        if streak >= CONVERGENCE_STREAK:
            converged = True
            break
    return iterations, converged


def _spsa_restart(ansatz, op, pi, theta0, eval_batch, trace, offset, best, rng):
    """Random-direction simultaneous-perturbation descent."""
    theta = theta0.copy()
    current = float(eval_batch(theta[None, :])[0])
    if current < best[0]:
        best[0], best[1] = current, theta.copy()
    streak = 0
    iterations = 0
    converged = False
    for it in range(pi.max_iters):
        iterations = it + 1
        c_k = 0.1 / (1 + it) ** 0.101
        a_k = pi.learning_rate / (1 + it) ** 0.602
        delta = rng.choice((-1.0, 1.0), size=theta.shape)
        pair = np.stack([theta + c_k * delta, theta - c_k * delta])
        vplus, vminus = eval_batch(pair)
        ghat = (vplus - vminus) / (2.0 * c_k) * delta
        theta = theta - a_k * ghat
        value = float(eval_batch(theta[None, :])[0])
        change = current - value
        current = value
        if value < best[0]:
            best[0], best[1] = value, theta.copy()
        trace.append((offset + it, best[0]))
        streak = streak + 1 if abs(change) < CONVERGENCE_TOL else 0
        if streak >= CONVERGENCE_STREAK:
            converged = True
            break
    return iterations, converged


def minimize(
    op: WeightedPauliSum,
    pi: HyperparamSetting,
    readout_flip: float = 0.0,
    restarts: int = RESTARTS,
) -> VqeResult:
    """Minimize the expectation of ``op`` over the ansatz family.

    Runs ``restarts`` random initializations (theta uniform in
    (-pi, pi]) and keeps the best-seen cost; the trace records the
    running best, so it is nonincreasing by construction.
    """
    ansatz = build_ansatz(op.num_qubits, pi)
    rng = np.random.default_rng(pi.seed)
    eval_counter = [0]

    def eval_batch(thetas_batch):
        eval_counter[0] += 1
        states = ansatz.states(np.atleast_2d(thetas_batch))
        return _cost_batch(
            states, op, pi, pi.seed + 7919 * eval_counter[0], readout_flip
        )

    trace: list = []
    best: list = [math.inf, np.zeros(ansatz.num_params)]
    total_iters = 0
    any_converged = False
    for _ in range(max(1, restarts)):
        theta0 = rng.uniform(-math.pi, math.pi, size=ansatz.num_params)
        if pi.optimizer == GRADIENT_DESCENT:
            iters, conv = _gd_restart(
                ansatz, op, pi, theta0, eval_batch, trace, total_iters, best
            )
        else:
            iters, conv = _spsa_restart(
                ansatz, op, pi, theta0, eval_batch, trace, total_iters, best, rng
            )
        total_iters += iters
        any_converged = any_converged or conv
    return VqeResult(
        lambda_vqe=float(best[0]),
        best_thetas=best[1],
        cost_trace=trace,
        iterations_used=total_iters,
        converged=any_converged,
    )


def lebm_vqe(
    b: np.ndarray,
    pi: HyperparamSetting,
    readout_flip: float = 0.0,
    restarts: int = RESTARTS,
) -> VqeResult:
    """Largest eigenvalue of a Hermitian matrix via negated minimization.

    Pads to a power-of-two dimension (eigenvalue-preserving for the
    nonnegative-LEBM matrices of the use case), decomposes -b over the
    Pauli basis, and minimizes; the returned lambda is the negated
    minimum. The cost trace remains that of the minimization run.
    """
    padded = pad_to_power_of_two(np.asarray(b))
    op = decompose(-padded)
    result = minimize(op, pi, readout_flip=readout_flip, restarts=restarts)
    return replace(result, lambda_vqe=-result.lambda_vqe)


@dataclass
class BenchmarkReport:
    """Per-matrix classic/VQE eigenvalue pairs and their MSE."""

    matrix_set_id: str
    setting: HyperparamSetting
    pairs: list  # (lambda_classic, lambda_vqe)
    mse: float

    def to_csv(self) -> str:
        lines = ["matrix_id, lambda_classic, lambda_vqe, abs_err"]
        for i, (lc, lv) in enumerate(self.pairs):
            lines.append(f"{i}, {lc:.12g}, {lv:.12g}, {abs(lc - lv):.12g}")
        return "\n".join(lines) + "\n"


def mse_error(
    matrices,
    pi: HyperparamSetting,
    classical_lebms,
    matrix_set_id: str = "set0",
) -> BenchmarkReport:
    """Err(B, Pi): mean squared deviation between the classic and VQE
    largest eigenvalues over a matrix set."""
    matrices = list(matrices)
    classical_lebms = [float(x) for x in classical_lebms]
    if not matrices:
        raise ValidationError("matrix set is empty")
    if len(matrices) != len(classical_lebms):
        raise ValidationError(
            f"{len(matrices)} matrices but {len(classical_lebms)} classical values"
        )
    pairs = []
    for idx, (m, lam_c) in enumerate(zip(matrices, classical_lebms)):
        result = lebm_vqe(m, replace(pi, seed=pi.seed + idx))
        pairs.append((lam_c, result.lambda_vqe))
    err = sum((lc - lv) ** 2 for lc, lv in pairs) / len(pairs)
    return BenchmarkReport(matrix_set_id, pi, pairs, float(err))


def _total_params(pi: HyperparamSetting, matrices) -> int:
    total = 0
    for m in matrices:
        dim = pad_to_power_of_two(np.asarray(m)).shape[0]
        total += pi.ansatz_layers * (dim.bit_length() - 1)
    return total


def grid_search(matrices, candidate_settings, classical_lebms=None):
    """Evaluate every candidate setting; return (best, reports).

    The winner minimizes Err; ties break on fewer total parameters,
    then on candidate order.
    """
    candidates = list(candidate_settings)
    if not candidates:
        raise ValidationError("no candidate settings")
    matrices = list(matrices)
    if classical_lebms is None:
        classical_lebms = [md.classical_lebm(m) for m in matrices]
    reports = []
    for k, pi in enumerate(candidates):
        report = mse_error(matrices, pi, classical_lebms, matrix_set_id=f"setting{k}")
        reports.append(report)
    order = sorted(
        range(len(candidates)),
        key=lambda k: (reports[k].mse, _total_params(candidates[k], matrices), k),
    )
    return candidates[order[0]], reports
