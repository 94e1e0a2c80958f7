"""Hybrid workflow runtime.

Brings together the hardware catalog, the quantum task repository,
decision evaluation against a performance model, the three quantum
execution semantics, transpile-fit checking, scheduling, and
monitoring.

Determinism contract: identical workflow + catalog + seed produce
identical records. Record timestamps are therefore logical ticks from
a monotonic counter, not wall-clock times. Scheduling resolves ready
nodes in sorted id order; decision nodes are resolved at the moment
they become ready, against the live catalog (late binding).
"""

from __future__ import annotations

import json
import threading
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import qsim
from .errors import ExecutionError, ParseError, ValidationError
from .workflow import (
    CIRCUIT_EXECUTION,
    HYBRID_EXECUTION,
    ClassicWorkflow,
    HybridWorkflow,
    MappingF,
    to_hybrid,
    topological_order,
    validate,
)

SIMULATED_QUANTUM = "simulated-quantum"
CLASSIC = "classic"

DEFAULT_SCORE_FLOOR = 0.0


@dataclass
class HardwareDescriptor:
    device_id: str
    kind: str
    num_qubits: int = 0
    readout_error: float = 0.0
    gate_set: tuple = ()
    queue_length: int = 0
    throughput_score: float = 1.0

    def __post_init__(self):
        if self.kind not in (SIMULATED_QUANTUM, CLASSIC):
            raise ValidationError(f"device {self.device_id!r}: unknown kind {self.kind!r}")
        if self.kind == SIMULATED_QUANTUM and self.num_qubits < 1:
            raise ValidationError(f"device {self.device_id!r}: quantum device needs qubits")
        if not 0.0 <= self.readout_error <= 1.0:
            raise ValidationError(f"device {self.device_id!r}: readout_error outside [0,1]")
        if self.throughput_score <= 0:
            raise ValidationError(f"device {self.device_id!r}: throughput_score must be > 0")
        self.gate_set = tuple(self.gate_set)

    def to_dict(self) -> dict:
        return {
            "device_id": self.device_id,
            "kind": self.kind,
            "num_qubits": self.num_qubits,
            "readout_error": self.readout_error,
            "gate_set": list(self.gate_set),
            "queue_length": self.queue_length,
            "throughput_score": self.throughput_score,
        }


class HardwareCatalog:
    """Device descriptors indexed by id; requires at least one classic
    device so the fallback path is always executable."""

    def __init__(self, descriptors):
        self.devices: dict = {}
        for d in descriptors:
            if d.device_id in self.devices:
                raise ValidationError(f"duplicate device_id {d.device_id!r}")
            self.devices[d.device_id] = d
        if not any(d.kind == CLASSIC for d in self.devices.values()):
            raise ValidationError("catalog has no classic device")

    def quantum_devices(self) -> list:
        return sorted(
            (d for d in self.devices.values() if d.kind == SIMULATED_QUANTUM),
            key=lambda d: d.device_id,
        )

    def add(self, descriptor: HardwareDescriptor):
        if descriptor.device_id in self.devices:
            raise ValidationError(f"duplicate device_id {descriptor.device_id!r}")
        self.devices[descriptor.device_id] = descriptor

    def remove(self, device_id: str):
        self.devices.pop(device_id, None)


def load_catalog(path) -> HardwareCatalog:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot open catalog file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, list) or not data:
        raise ValidationError(f"{path}: catalog must be a nonempty JSON array")
    descriptors = []
    for entry in data:
        try:
            descriptors.append(
                HardwareDescriptor(
                    device_id=str(entry["device_id"]),
                    kind=str(entry["kind"]),
                    num_qubits=int(entry.get("num_qubits", 0)),
                    readout_error=float(entry.get("readout_error", 0.0)),
                    gate_set=tuple(entry.get("gate_set", ())),
                    queue_length=int(entry.get("queue_length", 0)),
                    throughput_score=float(entry.get("throughput_score", 1.0)),
                )
            )
        except KeyError as exc:
            raise ValidationError(f"{path}: descriptor missing field {exc}") from exc
    return HardwareCatalog(descriptors)


def save_catalog(catalog: HardwareCatalog, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([d.to_dict() for d in catalog.devices.values()], fh, indent=2)
        fh.write("\n")


@dataclass
class RepositoryEntry:
    """One quantum implementation: a circuit or a hybrid routine."""

    task_id: str
    goal_label: str
    input_schema: str = ""
    output_schema: str = ""
    circuit: qsim.Circuit | None = None
    routine: object = None
    min_qubits: int = 1
    required_gates: tuple = ()

    def __post_init__(self):
        if (self.circuit is None) == (self.routine is None):
            raise ValidationError(
                f"entry {self.task_id!r} must reference exactly one of circuit/routine"
            )
        if self.circuit is not None:
            self.min_qubits = max(self.min_qubits, self.circuit.num_qubits)
            if not self.required_gates:
                self.required_gates = tuple(sorted(self.circuit.gate_names()))
        self.required_gates = tuple(self.required_gates)


class QuantumTaskRepository:
    def __init__(self, entries=()):
        self.entries: dict = {}
        for e in entries:
            self.register(e)

    def register(self, entry: RepositoryEntry):
        if entry.task_id in self.entries:
            raise ValidationError(f"duplicate repository task_id {entry.task_id!r}")
        self.entries[entry.task_id] = entry

    def get(self, task_id: str):
        return self.entries.get(task_id)

    def lookup_quantum_target(self, label: str) -> list:
        """All entries registered for a goal label; an empty list means
        the classic implementation is the only route."""
        return sorted(
            (e for e in self.entries.values() if e.goal_label == label),
            key=lambda e: e.task_id,
        )


def lookup_quantum_target(repository: QuantumTaskRepository, label: str) -> list:
    return repository.lookup_quantum_target(label)


def _gate_available(name: str, gate_set) -> bool:
    # a controlled single-qubit gate is realizable when the device has
    # the base gate (the Fredkin decomposition ships CV/CVdag this way)
    have = {g.upper() for g in gate_set}
    if name.upper() in have:
        return True
    if name.upper().startswith("C") and name.upper()[1:] in have:
        return True
    return False


def performance_score(entry: RepositoryEntry, device: HardwareDescriptor):
    """Deterministic device fit score; None when infeasible.

    score = throughput * (1 - readout_error)^min_qubits / (1 + queue).
    A stand-in for quantum-volume style models; swap via
    Engine(score_fn=...).
    """
    if device.kind != SIMULATED_QUANTUM:
        return None
    if entry.min_qubits > device.num_qubits:
        return None
    for g in entry.required_gates:
        if not _gate_available(g, device.gate_set):
            return None
    return (
        device.throughput_score
        * (1.0 - device.readout_error) ** entry.min_qubits
        / (1.0 + device.queue_length)
    )


@dataclass
class DecisionOutcome:
    chosen: str                     # "classic" or "quantum"
    device_id: str | None = None
    task_id: str | None = None
    score_table: dict = field(default_factory=dict)  # (task, device) -> score|None
    reason: str = ""
    # descriptor captured at decision time: a later catalog change must
    # not strand a decision that was already made (late binding)
    device: HardwareDescriptor | None = None

    def to_dict(self) -> dict:
        return {
            "chosen": self.chosen,
            "device_id": self.device_id,
            "task_id": self.task_id,
            "scores": {f"{t}@{d}": s for (t, d), s in sorted(self.score_table.items())},
            "reason": self.reason,
        }


def best_feasible_condition(score_table: dict, score_floor: float) -> DecisionOutcome:
    """Default condition: best feasible quantum pair at or above the
    floor, else classic. Ties break on device_id, then task_id."""
    feasible = [(s, d, t) for (t, d), s in score_table.items() if s is not None]
    if not feasible:
        reason = "capacity" if score_table else "no-quantum-target"
        return DecisionOutcome("classic", score_table=score_table, reason=reason)
    feasible.sort(key=lambda item: (-item[0], item[1], item[2]))
    score, device_id, task_id = feasible[0]
    if score < score_floor:
        return DecisionOutcome(
            "classic", score_table=score_table, reason=f"below-floor ({score:.4g})"
        )
    return DecisionOutcome(
        "quantum", device_id, task_id, score_table, reason=f"best-score ({score:.4g})"
    )


CONDITIONS = {"best-feasible": best_feasible_condition}


@dataclass
class ExecutionRecord:
    node: str
    kind: str                  # classic | quantum | decision
    start: int                 # logical ticks
    end: int
    device: str | None = None
    payload: object = None
    samples: dict | None = None
    errors: list = field(default_factory=list)
    decision: dict | None = None

    def __post_init__(self):
        if self.end < self.start:
            raise ValidationError("record end precedes start")

    def to_json(self) -> str:
        body = {
            "node": self.node,
            "kind": self.kind,
            "start": self.start,
            "end": self.end,
            "device": self.device,
            "payload": _jsonable(self.payload),
            "samples": self.samples,
            "errors": self.errors,
        }
        if self.decision is not None:
            body["decision"] = self.decision
        return json.dumps(body, sort_keys=True)


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def transpile_fit(circuit: qsim.Circuit, device: HardwareDescriptor):
    """Adapt a circuit to a device, or None when it cannot fit.

    Rejects on qubit count; rewrites TOFFOLI/FREDKIN through their
    two-qubit decompositions when the device lacks them; any other
    missing gate is infeasible.
    """
    if device.kind != SIMULATED_QUANTUM or circuit.num_qubits > device.num_qubits:
        return None
    ops = []
    for gate, targets in circuit.ops:
        if _gate_available(gate.name, device.gate_set):
            ops.append((gate, targets))
            continue
        if gate.name in ("TOFFOLI", "FREDKIN"):
            sub = qsim.decompose_gate(gate.name)
            remapped = [
                (g, tuple(targets[i] for i in sub_targets)) for g, sub_targets in sub.ops
            ]
            if all(_gate_available(g.name, device.gate_set) for g, _ in remapped):
                ops.extend(remapped)
                continue
        return None
    return qsim.Circuit(circuit.num_qubits, ops, circuit.measurements)


@dataclass
class RoutineContext:
    """Everything a hybrid routine sees when it runs."""

    device: HardwareDescriptor
    shots: int
    seed: int
    config: dict
    inputs: list


@dataclass
class RunResult:
    records: list
    outputs: dict            # node id -> payload
    skipped: list
    order: list

    def record_for(self, node_id: str):
        for r in self.records:
            if r.node == node_id:
                return r
        return None


def _node_seed(base_seed: int, node_id: str) -> int:
    return (int(base_seed) + zlib.crc32(node_id.encode())) % (2**31 - 1)


class Engine:
    """Schedules hybrid workflows over a catalog and repository.

    ``actions`` maps classic-task action names (default: the task
    label) to callables ``(context, inputs) -> payload``. ``observer``
    is an optional callback ``(event, info)`` fired at decision,
    node-start, and node-end events; the monitoring tests and the
    late-binding tests hook it.
    """

    def __init__(
        self,
        catalog: HardwareCatalog,
        repository: QuantumTaskRepository,
        actions: dict | None = None,
        config: dict | None = None,
        score_fn=performance_score,
        observer=None,
    ):
        self.catalog = catalog
        self.repository = repository
        self.actions = dict(actions or {})
        self.config = dict(config or {})
        self.config.setdefault("seed", 0)
        self.config.setdefault("score_floor", DEFAULT_SCORE_FLOOR)
        self.score_fn = score_fn
        self.observer = observer
        self.records: list = []
        self._lock = threading.Lock()
        self._clock = 0
        self._in_flight: set = set()
        self._log = None

    # -- monitoring ---------------------------------------------------------

    def monitor(self) -> dict:
        """Point-in-time snapshot of descriptors and in-flight work."""
        with self._lock:
            return {
                "devices": {d.device_id: d.to_dict() for d in self.catalog.devices.values()},
                "in_flight": sorted(self._in_flight),
                "completed": len(self.records),
            }

    def _tick(self) -> int:
        with self._lock:
            self._clock += 1
            return self._clock

    def _emit(self, event: str, **info):
        if self.observer is not None:
            self.observer(event, info)

    # -- decisions ------------------------------------------------------------

    def decide(self, node, workflow: HybridWorkflow) -> DecisionOutcome:
        """Score every (alternative, device) pair against the live
        catalog snapshot and evaluate the node's condition."""
        with self._lock:
            devices = list(self.catalog.quantum_devices())
        score_table = {}
        for qid in node.alternatives:
            qtask = workflow.quantum_tasks[qid]
            entry = self.repository.get(qtask.ref)
            if entry is None:
                continue  # no quantum target registered: classic fallback
            needed = max(entry.min_qubits, qtask.required_qubits)
            effective = replace(entry, min_qubits=needed)
            for device in devices:
                score_table[(qid, device.device_id)] = self.score_fn(effective, device)
        try:
            condition = CONDITIONS[node.condition or "best-feasible"]
        except KeyError:
            raise ValidationError(f"unknown decision condition {node.condition!r}") from None
        outcome = condition(score_table, float(self.config["score_floor"]))
        if not score_table:
            outcome.reason = "no-quantum-device" if not devices else "no-quantum-target"
        if outcome.chosen == "quantum":
            outcome.device = self.catalog.devices[outcome.device_id]
        self._emit("decision", node=node.id, outcome=outcome)
        return outcome

    # -- node execution -------------------------------------------------------

    def execute_node(self, node_id: str, workflow: HybridWorkflow, outcome, inputs):
        """Run one node under an already-made decision (quantum nodes)
        or directly (classic nodes); returns its ExecutionRecord."""
        start = self._tick()
        self._emit("node-start", node=node_id, monitor=self.monitor())
        errors: list = []
        samples = None
        device_id = None
        payload = None
        try:
            if node_id in workflow.tasks:
                task = workflow.tasks[node_id]
                action = self.actions.get(task.action or task.label)
                if action is None:
                    raise ExecutionError(f"no action registered for task {node_id!r}")
                ctx = RoutineContext(
                    device=None,
                    shots=0,
                    seed=_node_seed(self.config["seed"], node_id),
                    config=self.config,
                    inputs=inputs,
                )
                payload = action(ctx, inputs)
                kind = "classic"
            else:
                qtask = workflow.quantum_tasks[node_id]
                device = outcome.device if outcome.device is not None \
                    else self.catalog.devices[outcome.device_id]
                device_id = device.device_id
                payload, samples = self._run_quantum(qtask, device, inputs)
                kind = "quantum"
        except Exception as exc:
            errors.append(str(exc))
            record = ExecutionRecord(
                node=node_id, kind="error", start=start, end=self._tick(),
                device=device_id, payload=None, samples=None, errors=errors,
            )
            self._finish(record)
            if isinstance(exc, ExecutionError):
                raise
            raise ExecutionError(f"node {node_id!r} failed: {exc}") from exc
        record = ExecutionRecord(
            node=node_id, kind=kind, start=start, end=self._tick(),
            device=device_id, payload=payload, samples=samples, errors=errors,
        )
        self._finish(record)
        return record

    def _finish(self, record: ExecutionRecord):
        with self._lock:
            self.records.append(record)
            if self._log is not None:
                self._log.write(record.to_json() + "\n")
        self._emit("node-end", node=record.node, record=record)

    def _run_quantum(self, qtask, device, inputs):
        """Dispatch on the execution type; encoding happens inside the
        routines, post-processing right here (bitstring extraction)."""
        with self._lock:
            device.queue_length += 1
            self._in_flight.add(qtask.id)
        try:
            seed = _node_seed(self.config["seed"], qtask.id)
            if qtask.exec_type == HYBRID_EXECUTION:
                entry = self.repository.get(qtask.ref)
                if entry is None or entry.routine is None:
                    raise ExecutionError(f"no hybrid routine {qtask.ref!r} in repository")
                ctx = RoutineContext(
                    device=device, shots=qtask.shots, seed=seed,
                    config=self.config, inputs=inputs,
                )
                return entry.routine(ctx), None
            entry = self.repository.get(qtask.ref)
            if entry is None or entry.circuit is None:
                raise ExecutionError(f"no circuit {qtask.ref!r} in repository")
            circuit = transpile_fit(entry.circuit, device)
            if circuit is None:
                raise ExecutionError(
                    f"circuit {qtask.ref!r} does not fit device {device.device_id!r}"
                )
            reg = circuit.run()
            shots = 1 if qtask.exec_type == CIRCUIT_EXECUTION else qtask.shots
            hist = qsim.measure_all(reg, shots, seed, readout_flip=device.readout_error)
            measured = circuit.measurements
            counts: dict = {}
            for bits, c in hist.counts.items():
                key = "".join(bits[q] for q in measured) if measured else bits
                counts[key] = counts.get(key, 0) + c
            marg = qsim.ShotHistogram(shots, counts)
            if qtask.exec_type == CIRCUIT_EXECUTION:
                return next(iter(marg.counts)), marg.counts
            return marg.mode(), marg.counts
        finally:
            with self._lock:
                device.queue_length -= 1
                self._in_flight.discard(qtask.id)

    # -- scheduling -------------------------------------------------------------

    def run(self, w, mapping: MappingF | None = None, log_path=None) -> RunResult:
        """Validate, transform a classic workflow if needed, schedule."""
        if isinstance(w, ClassicWorkflow):
            threshold = float(self.config.get("intensity_threshold", 0.7))
            w = to_hybrid(w, mapping, intensity_threshold=threshold)
        return self.schedule(w, log_path=log_path)

    def schedule(self, workflow: HybridWorkflow, log_path=None) -> RunResult:
        report = validate(workflow)
        if not report:
            raise ValidationError("; ".join(report.errors))
        nodes = workflow.node_ids()
        order = topological_order(nodes, workflow.edges)
        preds: dict = {n: [] for n in nodes}
        for a, b in workflow.edges:
            preds[b].append(a)

        branch_owner: dict = {}
        for d in workflow.decisions.values():
            for b in (d.candidate, *d.alternatives):
                branch_owner.setdefault(b, []).append(d.id)
        selected: dict = {}
        outputs: dict = {}
        done: set = set()
        skipped: set = set()
        self._log = open(log_path, "a", encoding="utf-8") if log_path else None
        try:
            for node_id in order:
                if any(p not in done and p not in skipped for p in preds[node_id]):
                    raise ExecutionError(f"scheduler ordering bug at {node_id!r}")
                inputs = [outputs[p] for p in sorted(preds[node_id]) if p in outputs]
                if node_id in workflow.decisions:
                    node = workflow.decisions[node_id]
                    outcome = self.decide(node, workflow)  # late binding
                    if outcome.chosen == "quantum":
                        selected[outcome.task_id] = outcome
                    else:
                        selected[node.candidate] = outcome
                    start = self._tick()
                    record = ExecutionRecord(
                        node=node_id, kind="decision", start=start, end=self._tick(),
                        payload=None, decision=outcome.to_dict(),
                    )
                    self._finish(record)
                    outputs[node_id] = inputs[0] if len(inputs) == 1 else inputs
                    done.add(node_id)
                elif node_id in branch_owner and node_id not in selected:
                    skipped.add(node_id)
                else:
                    outcome = selected.get(node_id)
                    record = self.execute_node(node_id, workflow, outcome, inputs)
                    outputs[node_id] = record.payload
                    done.add(node_id)
        finally:
            if self._log:
                self._log.close()
                self._log = None
        return RunResult(
            records=list(self.records),
            outputs=outputs,
            skipped=sorted(skipped),
            order=order,
        )
