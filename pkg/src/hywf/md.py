"""Molecular-dynamics data layer.

Trajectory parsing, per-frame distance and bipartite matrices, the
classical largest-eigenvalue oracle, and collective-variable series.

Trajectory text format (bit-exact):

    natoms <N>
    frame <index> <time_ps>
    <atom_id> <x> <y> <z>     # N such lines per frame, coordinates in Angstrom
    ...

Blank lines are ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class Frame:
    index: int
    time: float
    coords: dict  # atom_id -> np.ndarray (x, y, z)

    def position(self, atom_id: int) -> np.ndarray:
        try:
            return self.coords[atom_id]
        except KeyError:
            raise ValidationError(f"atom {atom_id} missing from frame {self.index}") from None


@dataclass(frozen=True)
class Segment:
    id: str
    atom_ids: tuple

    def __post_init__(self):
        ids = tuple(int(a) for a in self.atom_ids)
        if len(ids) < 1:
            raise ValidationError(f"segment {self.id!r} is empty")
        if len(set(ids)) != len(ids):
            raise ValidationError(f"segment {self.id!r} repeats atom ids")
        object.__setattr__(self, "atom_ids", ids)

    def __len__(self) -> int:
        return len(self.atom_ids)


def parse_trajectory(path) -> list:
    """Read a trajectory file into frames; malformed lines abort with
    their line number."""
    frames: list[Frame] = []
    natoms = None
    current: dict | None = None
    meta: tuple | None = None

    def fail(lineno, msg):
        raise ParseError(f"{path}:{lineno}: {msg}")

    def close_frame(lineno):
        nonlocal current, meta
        if current is None:
            return
        if len(current) != natoms:
            fail(lineno, f"frame {meta[0]} has {len(current)} atoms, expected {natoms}")
        frames.append(Frame(meta[0], meta[1], current))
        current, meta = None, None

    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot open trajectory file {path}: {exc}") from exc
    with handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "natoms":
                if natoms is not None:
                    fail(lineno, "duplicate natoms header")
                if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
                    fail(lineno, "expected 'natoms <N>' with N >= 1")
                natoms = int(parts[1])
            elif parts[0] == "frame":
                if natoms is None:
                    fail(lineno, "frame before natoms header")
                close_frame(lineno)
                if len(parts) != 3:
                    fail(lineno, "expected 'frame <index> <time_ps>'")
                try:
                    meta = (int(parts[1]), float(parts[2]))
                except ValueError:
                    fail(lineno, "bad frame index or time")
                current = {}
            else:
                if current is None:
                    fail(lineno, "atom line outside a frame")
                if len(parts) != 4:
                    fail(lineno, "expected '<atom_id> <x> <y> <z>'")
                try:
                    atom_id = int(parts[0])
                    xyz = np.array([float(parts[1]), float(parts[2]), float(parts[3])])
                except ValueError:
                    fail(lineno, "bad atom line")
                if atom_id in current:
                    fail(lineno, f"duplicate atom id {atom_id} in frame {meta[0]}")
                if len(current) >= natoms:
                    fail(lineno, f"more than {natoms} atoms in frame {meta[0]}")
                current[atom_id] = xyz
        close_frame("EOF")
    if not frames:
        raise ParseError(f"{path}: no frames found")
    return frames


def euclidean_distance(i, j) -> float:
    """Plain Euclidean metric between two coordinate triples."""
    i = np.asarray(i, dtype=float)
    j = np.asarray(j, dtype=float)
    return float(math.sqrt(float(np.sum((i - j) ** 2))))


def build_distance_matrix(frame: Frame, seg: Segment) -> np.ndarray:
    """k x k intra-segment distance matrix.

    Only the k(k+1)/2 upper-triangle entries are evaluated; the rest
    come from symmetry.
    """
    k = len(seg)
    pos = [frame.position(a) for a in seg.atom_ids]
    out = np.zeros((k, k))
    for a in range(k):
        for b in range(a + 1, k):
            d = euclidean_distance(pos[a], pos[b])
            out[a, b] = d
            out[b, a] = d
    return out


def build_bipartite(frame: Frame, seg_i: Segment, seg_j: Segment) -> np.ndarray:
    """2k x 2k bipartite block matrix [[0, E], [E^T, 0]] of cross distances."""
    if len(seg_i) != len(seg_j):
        raise ValidationError(
            f"segments {seg_i.id!r} and {seg_j.id!r} differ in size "
            f"({len(seg_i)} vs {len(seg_j)}); square blocks required"
        )
    k = len(seg_i)
    pos_i = [frame.position(a) for a in seg_i.atom_ids]
    pos_j = [frame.position(a) for a in seg_j.atom_ids]
    e = np.zeros((k, k))
    for a in range(k):
        for b in range(k):
            e[a, b] = euclidean_distance(pos_i[a], pos_j[b])
    out = np.zeros((2 * k, 2 * k))
    out[:k, k:] = e
    out[k:, :k] = e.T
    return out


def classical_lebm(m: np.ndarray) -> float:
    """Largest eigenvalue via dense symmetric eigendecomposition.

    This is the classical reference (the oracle) for every VQE check.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("expected a square matrix")
    if np.max(np.abs(m - np.conj(m.T))) > 1e-9:
        raise ValidationError("matrix is not Hermitian within tolerance")
    return float(np.linalg.eigvalsh(m)[-1])


def power_iteration_lebm(
    m: np.ndarray, max_iter: int = 10_000, tol: float = 1e-12, seed: int = 0
) -> float:
    """Cross-check oracle: largest eigenvalue by shifted power iteration.

    The shift by the row-sum norm makes the target eigenvalue dominant
    even for spectra symmetric about zero (bipartite matrices).
    """
    m = np.asarray(m, dtype=float)
    shift = float(np.max(np.sum(np.abs(m), axis=1))) + 1.0
    a = m + shift * np.eye(m.shape[0])
    rng = np.random.default_rng(seed)
    x = rng.normal(size=m.shape[0])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = a @ x
        lam_new = float(x @ y)
        x = y / np.linalg.norm(y)
        if abs(lam_new - lam) < tol * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    return lam - shift


@dataclass
class CvSeries:
    """Per-frame collective-variable values for one segment pair."""

    segment_pair: tuple
    frames: list = field(default_factory=list)   # (frame index, time)
    values: list = field(default_factory=list)

    def append(self, frame: Frame, value: float):
        self.frames.append((frame.index, frame.time))
        self.values.append(float(value))

    def __len__(self) -> int:
        return len(self.values)

    def to_csv(self) -> str:
        lines = ["frame,time,lebm"]
        for (idx, t), val in zip(self.frames, self.values):
            lines.append(f"{idx},{t:.6g},{val:.12g}")
        return "\n".join(lines) + "\n"


def cv_series(frames: Iterable[Frame], seg_i: Segment, seg_j: Segment, lebm=classical_lebm) -> CvSeries:
    """LEBM of the bipartite matrix per frame, streamed one frame at a time.

    ``lebm`` is pluggable so the quantum pipeline can substitute the
    VQE estimate for the eigensolver.
    """
    series = CvSeries((seg_i.id, seg_j.id))
    for frame in frames:
        series.append(frame, lebm(build_bipartite(frame, seg_i, seg_j)))
    if len(series) == 0:
        raise ValidationError("no frames to process")
    return series
