"""Molecular-dynamics use case wiring.

Builds the MD collective-variable workflow (read trajectory -> cross
segment distance matrices -> largest eigenvalue -> collect), its
classic actions, the quantum alternatives (SWAP-test distance matrices
and VQE eigenvalues), repository entries, demo catalogs, and a toy
trajectory generator with known geometry.

Classic and quantum branches exchange the same payload shapes, so the
engine can pick either per decision node:

    frames payload:   {"frames": [{"index", "time", "atoms": [[id,x,y,z],...]}]}
    matrices payload: {"frames": [{"index", "time"}], "matrices": [[...2k x 2k...]]}
    lebm payload:     {"frames": [{"index", "time"}], "values": [...]}
    collect payload:  {"rows": [{"frame", "time", "lebm"}]}
"""

from __future__ import annotations

import numpy as np

from . import md, swaptest, vqe
from .engine import (
    Engine,
    HardwareCatalog,
    HardwareDescriptor,
    QuantumTaskRepository,
    RepositoryEntry,
)
from .errors import ExecutionError, ValidationError
from .workflow import ClassicTask, ClassicWorkflow, MappingF, QuantumTask

FULL_GATE_SET = (
    "I", "X", "Y", "Z", "H", "P", "RY", "CNOT", "CZ", "SWAP",
    "TOFFOLI", "FREDKIN", "T", "Tdag", "V", "Vdag",
)


def default_vqe_setting(dim: int, seed: int = 0, shots: int = 0) -> vqe.HyperparamSetting:
    """Per-size defaults found by grid search over the use-case scale."""
    n = max(1, (int(dim) - 1).bit_length())
    table = {1: (1, 0.4, 150), 2: (3, 0.1, 200), 3: (4, 0.05, 300), 4: (5, 0.02, 400)}
    layers, lr, iters = table.get(n, (n + 1, 0.3 / (1 << n), 150 + 100 * n))
    return vqe.HyperparamSetting(
        ansatz_layers=layers,
        learning_rate=lr,
        max_iters=iters,
        shots=shots,
        seed=seed,
        optimizer=vqe.GRADIENT_DESCENT if shots == 0 else vqe.SPSA,
    )


def _segments_from_config(config) -> tuple:
    segs = config.get("segments")
    if not segs or len(segs) != 2:
        raise ExecutionError("config must define exactly two segments")
    (id_i, atoms_i), (id_j, atoms_j) = sorted(segs.items())
    return md.Segment(id_i, tuple(atoms_i)), md.Segment(id_j, tuple(atoms_j))


def _frames_from_payload(inputs):
    for payload in inputs:
        if isinstance(payload, dict) and "frames" in payload and payload["frames"] \
                and "atoms" in payload["frames"][0]:
            return payload["frames"]
    raise ExecutionError("no trajectory frames in node inputs")


def _matrices_from_payload(inputs):
    for payload in inputs:
        if isinstance(payload, dict) and "matrices" in payload:
            return payload["frames"], payload["matrices"]
    raise ExecutionError("no distance matrices in node inputs")


def _to_frame(entry) -> md.Frame:
    coords = {int(a[0]): np.array(a[1:4], dtype=float) for a in entry["atoms"]}
    return md.Frame(int(entry["index"]), float(entry["time"]), coords)


# -- classic actions -----------------------------------------------------------

def action_read_trajectory(ctx, inputs):
    path = ctx.config.get("trajectory")
    if not path:
        raise ExecutionError("config has no trajectory path")
    frames = md.parse_trajectory(path)
    return {
        "frames": [
            {
                "index": f.index,
                "time": f.time,
                "atoms": [[a, *map(float, xyz)] for a, xyz in f.coords.items()],
            }
            for f in frames
        ]
    }


def action_bipartite_classic(ctx, inputs):
    seg_i, seg_j = _segments_from_config(ctx.config)
    frames = _frames_from_payload(inputs)
    matrices = [
        md.build_bipartite(_to_frame(entry), seg_i, seg_j).tolist() for entry in frames
    ]
    return {
        "frames": [{"index": f["index"], "time": f["time"]} for f in frames],
        "matrices": matrices,
    }


def action_lebm_classic(ctx, inputs):
    frames, matrices = _matrices_from_payload(inputs)
    values = [md.classical_lebm(np.asarray(m)) for m in matrices]
    return {"frames": frames, "values": values}


def action_collect(ctx, inputs):
    for payload in inputs:
        if isinstance(payload, dict) and "values" in payload:
            rows = [
                {"frame": f["index"], "time": f["time"], "lebm": v}
                for f, v in zip(payload["frames"], payload["values"])
            ]
            return {"rows": rows}
    raise ExecutionError("no eigenvalue series in node inputs")


CLASSIC_ACTIONS = {
    "read-trajectory": action_read_trajectory,
    "swap-distance": action_bipartite_classic,
    "lebm": action_lebm_classic,
    "collect": action_collect,
}


# -- quantum routines ----------------------------------------------------------

def routine_swap_distance(ctx):
    """Bipartite matrices from per-pair SWAP-test estimates.

    Encodes every atom pair, runs the C-SWAP circuit on the chosen
    device register, and assembles [[0, E], [E^T, 0]] from the
    estimated cross distances (one circuit execution per pair).
    """
    seg_i, seg_j = _segments_from_config(ctx.config)
    if len(seg_i) != len(seg_j):
        raise ValidationError("bipartite blocks need equal segment sizes")
    frames = _frames_from_payload(ctx.inputs)
    k = len(seg_i)
    matrices = []
    for offset, entry in enumerate(frames):
        frame = _to_frame(entry)
        pos_i = [frame.position(a) for a in seg_i.atom_ids]
        pos_j = [frame.position(a) for a in seg_j.atom_ids]
        estimates = swaptest.distance_matrix_quantum(
            pos_i, pos_j, shots=ctx.shots, seed=ctx.seed + 10_000 * offset
        )
        e = np.array([[est.value for est in row] for row in estimates])
        b = np.zeros((2 * k, 2 * k))
        b[:k, k:] = e
        b[k:, :k] = e.T
        matrices.append(b.tolist())
    return {
        "frames": [{"index": f["index"], "time": f["time"]} for f in frames],
        "matrices": matrices,
    }


def routine_vqe_lebm(ctx):
    """Largest eigenvalue per frame through the VQE feedback loop.

    Shot mode injects the device's readout error into every sampled
    expectation; exact mode reads expectations from the statevector.
    """
    frames, matrices = _matrices_from_payload(ctx.inputs)
    values = []
    flip = ctx.device.readout_error if ctx.shots > 0 else 0.0
    for offset, m in enumerate(matrices):
        m = np.asarray(m)
        pi = default_vqe_setting(m.shape[0], seed=ctx.seed + offset, shots=ctx.shots)
        values.append(vqe.lebm_vqe(m, pi, readout_flip=flip).lambda_vqe)
    return {"frames": frames, "values": values}


def default_repository() -> QuantumTaskRepository:
    return QuantumTaskRepository(
        [
            RepositoryEntry(
                task_id="swap-distance",
                goal_label="swap-distance",
                input_schema="frames",
                output_schema="matrices",
                routine=routine_swap_distance,
                min_qubits=5,  # ancilla + phi + 3-qubit pair register
                required_gates=("H", "FREDKIN"),
            ),
            RepositoryEntry(
                task_id="vqe-lebm",
                goal_label="lebm",
                input_schema="matrices",
                output_schema="values",
                routine=routine_vqe_lebm,
                min_qubits=1,
                required_gates=("RY", "CNOT"),
            ),
        ]
    )


# -- workflow + fixtures ---------------------------------------------------------

def build_md_workflow(segment_size: int = 2) -> ClassicWorkflow:
    """The use-case workflow with its two quantum candidates."""
    qubits_b = max(1, (2 * segment_size - 1).bit_length())
    tasks = {
        "read": ClassicTask("read", "read-trajectory", 0.05),
        "bmat": ClassicTask("bmat", "swap-distance", 0.9),
        "lebm": ClassicTask("lebm", "lebm", 0.95),
        "collect": ClassicTask("collect", "collect", 0.1),
    }
    qtasks = {
        "q_swap": QuantumTask("q_swap", "HybridExecution", "swap-distance",
                              shots=0, required_qubits=5),
        "q_vqe": QuantumTask("q_vqe", "HybridExecution", "vqe-lebm",
                             shots=0, required_qubits=qubits_b),
    }
    mapping = MappingF({"swap-distance": ("q_swap",), "lebm": ("q_vqe",)})
    edges = (("read", "bmat"), ("bmat", "lebm"), ("lebm", "collect"))
    return ClassicWorkflow(tasks, edges, mapping, qtasks)


def demo_catalog(with_quantum: bool = True) -> HardwareCatalog:
    devices = [
        HardwareDescriptor("cpu0", "classic", num_qubits=0, throughput_score=1.0),
    ]
    if with_quantum:
        devices.append(
            HardwareDescriptor(
                "qsim5",
                "simulated-quantum",
                num_qubits=5,
                readout_error=0.0,
                gate_set=FULL_GATE_SET,
                queue_length=0,
                throughput_score=1.0,
            )
        )
    return HardwareCatalog(devices)


def make_engine(catalog=None, config=None, observer=None) -> Engine:
    return Engine(
        catalog=catalog if catalog is not None else demo_catalog(),
        repository=default_repository(),
        actions=CLASSIC_ACTIONS,
        config=config,
        observer=observer,
    )


def toy_trajectory_text(
    frames: int = 10,
    segment_size: int = 8,
    separation0: float = 6.0,
    step: float = 1.5,
    jitter_seed: int | None = None,
) -> str:
    """Two rigid segments drifting apart along x.

    Every cross distance grows strictly with the separation, so the
    LEBM series is strictly increasing; geometry chosen for the
    streaming tests.
    """
    base = [
        (0.8 * (i % 2), 1.1 * ((i // 2) % 2), 0.9 * (i // 4)) for i in range(segment_size)
    ]
    rng = np.random.default_rng(jitter_seed) if jitter_seed is not None else None
    lines = [f"natoms {2 * segment_size}"]
    for t in range(frames):
        lines.append(f"frame {t} {0.1 * t:.1f}")
        offset = separation0 + step * t
        for i, (x, y, z) in enumerate(base):
            jx = rng.normal(0, 0.01) if rng is not None else 0.0
            lines.append(f"{i + 1} {x + jx:.4f} {y:.4f} {z:.4f}")
        for i, (x, y, z) in enumerate(base):
            lines.append(f"{i + 1 + segment_size} {x + offset:.4f} {y:.4f} {z:.4f}")
    return "\n".join(lines) + "\n"


def default_segments(segment_size: int = 8) -> dict:
    return {
        "I": list(range(1, segment_size + 1)),
        "J": list(range(segment_size + 1, 2 * segment_size + 1)),
    }
