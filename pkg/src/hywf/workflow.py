"""The formal workflow model: classic DAGs, quantum tasks, decision nodes.

A classic workflow is a DAG of tasks. Given a mapping f from task
labels to quantum task ids, tasks whose label has a nonempty entry and
whose compute intensity reaches the threshold (default 0.7) are
quantum candidates. ``to_hybrid`` inserts one decision node per
candidate: predecessors are rewired to the decision, which fans out to
the classic task and every quantum alternative; both branches feed the
candidate's original successors.

Workflow files are JSON with a ``format: 1`` field:

    {
      "format": 1,
      "tasks": [{"id": ..., "label": ..., "intensity": ...}, ...],
      "edges": [[from_id, to_id], ...],
      "mapping": {label: [quantum_task_id, ...], ...},
      "quantum_tasks": [{"id", "type", "ref", "shots", "qubits"}, ...]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .errors import ParseError, ValidationError

DEFAULT_INTENSITY_THRESHOLD = 0.7

CIRCUIT_EXECUTION = "CircuitExecution"
TASK_EXECUTION = "TaskExecution"
HYBRID_EXECUTION = "HybridExecution"
EXECUTION_TYPES = (CIRCUIT_EXECUTION, TASK_EXECUTION, HYBRID_EXECUTION)


@dataclass(frozen=True)
class ClassicTask:
    id: str
    label: str
    compute_intensity: float = 0.0
    action: str | None = None  # engine action-registry key; defaults to label

    def __post_init__(self):
        if not 0.0 <= self.compute_intensity <= 1.0:
            raise ValidationError(
                f"task {self.id!r}: intensity {self.compute_intensity} outside [0,1]"
            )


@dataclass(frozen=True)
class QuantumTask:
    id: str
    exec_type: str
    ref: str  # repository entry naming the circuit or hybrid routine
    shots: int = 1
    required_qubits: int = 1

    def __post_init__(self):
        if self.exec_type not in EXECUTION_TYPES:
            raise ValidationError(f"unknown execution type {self.exec_type!r}")
        if self.exec_type == TASK_EXECUTION and self.shots < 1:
            raise ValidationError(f"task {self.id!r}: TaskExecution needs shots >= 1")
        if self.required_qubits < 1:
            raise ValidationError(f"task {self.id!r}: required_qubits must be >= 1")


@dataclass(frozen=True)
class MappingF:
    """User-asserted classic-to-quantum equivalences, by task label.

    Functional equivalence is the user's claim; it is never verified
    here (program equivalence being undecidable).
    """

    entries: dict  # label -> tuple of quantum task ids

    def __post_init__(self):
        cleaned = {}
        for label, ids in self.entries.items():
            ids = tuple(ids)
            if ids:
                cleaned[str(label)] = ids
        object.__setattr__(self, "entries", cleaned)

    def alternatives(self, label: str) -> tuple:
        return self.entries.get(label, ())


@dataclass(frozen=True)
class DecisionNode:
    id: str
    candidate: str            # classic task id t'
    alternatives: tuple       # f(t'), quantum task ids
    condition: str | None = None  # engine condition name; None = default

    def __post_init__(self):
        if not self.alternatives:
            raise ValidationError(f"decision {self.id!r} has no alternatives")


@dataclass(frozen=True)
class ClassicWorkflow:
    tasks: dict                     # id -> ClassicTask
    edges: tuple                    # ((from, to), ...)
    mapping: MappingF = field(default_factory=lambda: MappingF({}))
    quantum_tasks: dict = field(default_factory=dict)  # id -> QuantumTask

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))


@dataclass(frozen=True)
class HybridWorkflow:
    tasks: dict          # id -> ClassicTask
    quantum_tasks: dict  # id -> QuantumTask (only those referenced by decisions)
    decisions: dict      # id -> DecisionNode
    edges: tuple
    mapping: MappingF

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))

    def node_ids(self) -> set:
        return set(self.tasks) | set(self.quantum_tasks) | set(self.decisions)


@dataclass
class ValidationReport:
    ok: bool
    errors: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def _topo_order(nodes, edges):
    """Kahn topological sort; returns (order, had_cycle)."""
    indue = {n: 0 for n in nodes}
    out = {n: [] for n in nodes}
    for a, b in edges:
        if a in indue and b in indue:
            indue[b] += 1
            out[a].append(b)
    ready = sorted(n for n, d in indue.items() if d == 0)
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for m in sorted(out[n]):
            indue[m] -= 1
            if indue[m] == 0:
                ready.append(m)
        ready.sort()
    return order, len(order) != len(nodes)


def topological_order(nodes, edges):
    order, cyclic = _topo_order(nodes, edges)
    if cyclic:
        raise ValidationError("workflow graph contains a cycle")
    return order


def validate(w) -> ValidationReport:
    """Structural report: cycles, dangling edges, duplicate ids, and for
    hybrid workflows the decision-node wiring and |D| = |T'|."""
    errors = []
    if isinstance(w, HybridWorkflow):
        nodes = w.node_ids()
        if len(nodes) != len(w.tasks) + len(w.quantum_tasks) + len(w.decisions):
            errors.append("duplicate node id across task/quantum/decision sets")
    elif isinstance(w, ClassicWorkflow):
        nodes = set(w.tasks)
    else:
        return ValidationReport(False, [f"not a workflow: {type(w).__name__}"])

    edge_set = set()
    for a, b in w.edges:
        if a not in nodes:
            errors.append(f"edge ({a!r}, {b!r}): unknown source")
        if b not in nodes:
            errors.append(f"edge ({a!r}, {b!r}): unknown target")
        if a == b:
            errors.append(f"self-loop on {a!r}")
        if (a, b) in edge_set:
            errors.append(f"duplicate edge ({a!r}, {b!r})")
        edge_set.add((a, b))

    _, cyclic = _topo_order(nodes, [e for e in w.edges if e[0] in nodes and e[1] in nodes])
    if cyclic:
        errors.append("graph contains a cycle")

    if isinstance(w, HybridWorkflow):
        candidates = {d.candidate for d in w.decisions.values()}
        if len(w.decisions) != len(candidates):
            errors.append("two decision nodes share a candidate")
        for d in w.decisions.values():
            if d.candidate not in w.tasks:
                errors.append(f"decision {d.id!r}: candidate {d.candidate!r} missing")
            elif (d.id, d.candidate) not in edge_set:
                errors.append(f"decision {d.id!r}: no edge to its candidate")
            for q in d.alternatives:
                if q not in w.quantum_tasks:
                    errors.append(f"decision {d.id!r}: unknown alternative {q!r}")
                elif (d.id, q) not in edge_set:
                    errors.append(f"decision {d.id!r}: no edge to alternative {q!r}")
        referenced = {q for d in w.decisions.values() for q in d.alternatives}
        for q in w.quantum_tasks:
            if q not in referenced:
                errors.append(f"quantum task {q!r} not referenced by any decision")
    return ValidationReport(not errors, errors)


def quantum_candidates(
    w: ClassicWorkflow,
    f: MappingF | None = None,
    intensity_threshold: float = DEFAULT_INTENSITY_THRESHOLD,
) -> set:
    """Tasks with a nonempty mapping entry and enough compute intensity."""
    f = f if f is not None else w.mapping
    return {
        t.id
        for t in w.tasks.values()
        if f.alternatives(t.label) and t.compute_intensity >= intensity_threshold
    }


def to_hybrid(
    w: ClassicWorkflow,
    f: MappingF | None = None,
    intensity_threshold: float = DEFAULT_INTENSITY_THRESHOLD,
) -> HybridWorkflow:
    """Insert one decision node per quantum candidate.

    For candidate t': every predecessor edge p->t' becomes p->d; d
    gains edges to t' and to each q in f(t'); each q gains edges to
    t's original successors, so either branch feeds the same
    downstream tasks.
    """
    f = f if f is not None else w.mapping
    report = validate(w)
    if not report:
        raise ValidationError("; ".join(report.errors))
    candidates = sorted(quantum_candidates(w, f, intensity_threshold))
    edges = set(w.edges)
    decisions = {}
    used_q = {}
    for tid in candidates:
        label = w.tasks[tid].label
        alts = f.alternatives(label)
        missing = [q for q in alts if q not in w.quantum_tasks]
        if missing:
            raise ValidationError(f"mapping for {label!r} names unknown quantum tasks {missing}")
        did = f"d_{tid}"
        if did in w.tasks or did in w.quantum_tasks or did in used_q:
            raise ValidationError(f"decision id {did!r} collides with an existing node")
        preds = [a for a, b in edges if b == tid]
        succs = [b for a, b in edges if a == tid]
        for p in preds:
            edges.discard((p, tid))
            edges.add((p, did))
        edges.add((did, tid))
        branch_ids = []
        for q in alts:
            # candidates sharing a label share quantum task definitions;
            # each decision still needs its own branch node, or a chained
            # pair of same-label candidates would wire q into a cycle
            node_id = q if q not in used_q else f"{q}@{tid}"
            if node_id in w.tasks or node_id in decisions:
                raise ValidationError(f"quantum node id {node_id!r} collides")
            used_q[node_id] = replace(w.quantum_tasks[q], id=node_id)
            branch_ids.append(node_id)
            edges.add((did, node_id))
            for s in succs:
                edges.add((node_id, s))
        decisions[did] = DecisionNode(did, tid, tuple(branch_ids))
    return HybridWorkflow(
        tasks=dict(w.tasks),
        quantum_tasks=used_q,
        decisions=decisions,
        edges=tuple(sorted(edges)),
        mapping=f,
    )


def classic_projection(h: HybridWorkflow) -> ClassicWorkflow:
    """Strip quantum tasks and decisions, restoring direct task edges."""
    report = validate(h)
    if not report:
        raise ValidationError("; ".join(report.errors))
    tasks = set(h.tasks)
    candidate_of = {d.id: d.candidate for d in h.decisions.values()}
    edges = set()
    for a, b in h.edges:
        if a in tasks and b in tasks:
            edges.add((a, b))
        elif a in tasks and b in candidate_of:
            edges.add((a, candidate_of[b]))
        # edges touching quantum tasks and decision fan-outs are wiring
    return ClassicWorkflow(
        tasks=dict(h.tasks),
        edges=tuple(sorted(edges)),
        mapping=h.mapping,
        quantum_tasks={},
    )


def reachable_from_sources(nodes, edges) -> set:
    targets = {b for _, b in edges}
    sources = [n for n in nodes if n not in targets]
    seen = set(sources)
    stack = list(sources)
    adj = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
    while stack:
        n = stack.pop()
        for m in adj.get(n, ()):
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return seen


# -- file format -------------------------------------------------------------

def _require(cond, msg):
    if not cond:
        raise ParseError(msg)


def workflow_from_dict(data: dict) -> ClassicWorkflow:
    _require(isinstance(data, dict), "workflow file must hold a JSON object")
    _require(data.get("format") == 1, "workflow file must declare 'format': 1")
    tasks = {}
    for entry in data.get("tasks", []):
        _require("id" in entry and "label" in entry, f"task entry missing id/label: {entry}")
        tid = str(entry["id"])
        _require(tid not in tasks, f"duplicate task id {tid!r}")
        tasks[tid] = ClassicTask(
            id=tid,
            label=str(entry["label"]),
            compute_intensity=float(entry.get("intensity", 0.0)),
            action=entry.get("action"),
        )
    qtasks = {}
    for entry in data.get("quantum_tasks", []):
        _require("id" in entry and "type" in entry and "ref" in entry,
                 f"quantum task entry missing id/type/ref: {entry}")
        qid = str(entry["id"])
        _require(qid not in qtasks and qid not in tasks, f"duplicate node id {qid!r}")
        qtasks[qid] = QuantumTask(
            id=qid,
            exec_type=str(entry["type"]),
            ref=str(entry["ref"]),
            shots=int(entry.get("shots", 1)),
            required_qubits=int(entry.get("qubits", 1)),
        )
    edges = []
    for e in data.get("edges", []):
        _require(isinstance(e, (list, tuple)) and len(e) == 2, f"bad edge {e}")
        edges.append((str(e[0]), str(e[1])))
    mapping = MappingF({str(k): tuple(str(x) for x in v)
                        for k, v in data.get("mapping", {}).items()})
    return ClassicWorkflow(tasks, tuple(edges), mapping, qtasks)


def workflow_to_dict(w: ClassicWorkflow) -> dict:
    return {
        "format": 1,
        "tasks": [
            {"id": t.id, "label": t.label, "intensity": t.compute_intensity,
             **({"action": t.action} if t.action else {})}
            for t in w.tasks.values()
        ],
        "edges": [list(e) for e in w.edges],
        "mapping": {k: list(v) for k, v in w.mapping.entries.items()},
        "quantum_tasks": [
            {"id": q.id, "type": q.exec_type, "ref": q.ref,
             "shots": q.shots, "qubits": q.required_qubits}
            for q in w.quantum_tasks.values()
        ],
    }


def load_workflow(path) -> ClassicWorkflow:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot open workflow file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    return workflow_from_dict(data)


def save_workflow(w: ClassicWorkflow, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(workflow_to_dict(w), fh, indent=2, sort_keys=True)
        fh.write("\n")
