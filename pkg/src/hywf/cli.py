"""Command-line driver.

Subcommands: run, md, grid, validate, catalog show. Every command
writes a manifest.json (config, seed, content hashes of inputs) into
the output directory, enough to rerun it byte-identically.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 execution
error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import numpy as np

from . import __version__, md, mdflow, swaptest, vqe
from ._kernels import BACKEND
from .engine import load_catalog
from .errors import ExecutionError, HywfError, ParseError, ValidationError
from .workflow import load_workflow, validate

EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_EXECUTION = 4


def _seed_from(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("HYWF_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"HYWF_SEED must be an integer, got {env!r}") from None
    return 0


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(outdir, args, seed, input_paths):
    os.makedirs(outdir, exist_ok=True)
    manifest = {
        "command": args.command,
        "config": {
            k: v for k, v in sorted(vars(args).items())
            if k not in ("command", "func") and v is not None
        },
        "seed": seed,
        "inputs": {p: _sha256(p) for p in input_paths if p and os.path.exists(p)},
        "version": __version__,
        "kernel_backend": BACKEND,
    }
    with open(os.path.join(outdir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write(outdir, name, text):
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def _parse_segments(spec: str) -> dict:
    """``I=a1,a2,...;J=b1,...`` into {label: [atom ids]}."""
    segments = {}
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValidationError(f"bad segment spec {part!r}, expected LABEL=id,id,...")
        label, ids = part.split("=", 1)
        try:
            segments[label.strip()] = [int(x) for x in ids.split(",") if x.strip()]
        except ValueError:
            raise ValidationError(f"non-integer atom id in segment {label!r}") from None
    if len(segments) != 2:
        raise ValidationError("exactly two segments are required (I=...;J=...)")
    return segments


# -- run ---------------------------------------------------------------------

def cmd_run(args) -> int:
    seed = _seed_from(args)
    w = load_workflow(args.workflow)
    catalog = load_catalog(args.catalog)
    report = validate(w)
    if not report:
        for line in report.errors:
            print(f"validation: {line}", file=sys.stderr)
        return EXIT_VALIDATION
    config = {
        "seed": seed,
        "score_floor": args.score_floor,
        "intensity_threshold": args.intensity_threshold,
    }
    if args.trajectory:
        config["trajectory"] = args.trajectory
    if args.segments:
        config["segments"] = _parse_segments(args.segments)
    _write_manifest(args.out, args, seed, [args.workflow, args.catalog, args.trajectory])
    engine = mdflow.make_engine(catalog=catalog, config=config)
    log_path = os.path.join(args.out, "execution.log")
    if os.path.exists(log_path):
        os.remove(log_path)
    result = engine.run(w, log_path=log_path)
    for node, payload in sorted(result.outputs.items()):
        if isinstance(payload, dict) and "rows" in payload:
            lines = ["frame,time,lebm"] + [
                f"{r['frame']},{r['time']:.6g},{r['lebm']:.12g}" for r in payload["rows"]
            ]
            _write(args.out, f"{node}_cv.csv", "\n".join(lines) + "\n")
    quantum_decisions = sum(
        1 for r in result.records if r.kind == "decision" and r.decision["chosen"] == "quantum"
    )
    print(
        f"executed {len(result.records)} records "
        f"({quantum_decisions} quantum decisions, {len(result.skipped)} skipped nodes); "
        f"log: {log_path}"
    )
    return 0


# -- md pipeline ---------------------------------------------------------------

def _run_classic_cv(frames, seg_i, seg_j):
    return md.cv_series(frames, seg_i, seg_j)


def _run_quantum_cv(frames, seg_i, seg_j, shots, vqe_shots, seed):
    series = md.CvSeries((seg_i.id, seg_j.id))
    swap_errors = []
    for offset, frame in enumerate(frames):
        pos_i = [frame.position(a) for a in seg_i.atom_ids]
        pos_j = [frame.position(a) for a in seg_j.atom_ids]
        estimates = swaptest.distance_matrix_quantum(
            pos_i, pos_j, shots=shots, seed=seed + 10_000 * offset
        )
        k = len(seg_i)
        e = np.array([[est.value for est in row] for row in estimates])
        exact = np.array([[est.exact for est in row] for row in estimates])
        swap_errors.append(float(np.max(np.abs(e - exact))))
        b = np.zeros((2 * k, 2 * k))
        b[:k, k:] = e
        b[k:, :k] = e.T
        pi = mdflow.default_vqe_setting(2 * k, seed=seed + offset, shots=vqe_shots)
        series.append(frame, vqe.lebm_vqe(b, pi).lambda_vqe)
    return series, swap_errors


def cmd_md(args) -> int:
    seed = _seed_from(args)
    frames = md.parse_trajectory(args.trajectory)
    segments = _parse_segments(args.segments)
    (id_i, atoms_i), (id_j, atoms_j) = sorted(segments.items())
    seg_i, seg_j = md.Segment(id_i, tuple(atoms_i)), md.Segment(id_j, tuple(atoms_j))
    _write_manifest(args.out, args, seed, [args.trajectory])

    classic = quantum = None
    if args.mode in ("classic", "both"):
        classic = _run_classic_cv(frames, seg_i, seg_j)
        _write(args.out, "cv_classic.csv", classic.to_csv())
    if args.mode in ("quantum", "both"):
        quantum, swap_errors = _run_quantum_cv(
            frames, seg_i, seg_j, args.shots, args.vqe_shots, seed
        )
        _write(args.out, "cv_quantum.csv", quantum.to_csv())
        lines = ["frame,max_abs_swap_distance_error"]
        for (idx, _), err in zip(quantum.frames, swap_errors):
            lines.append(f"{idx},{err:.12g}")
        _write(args.out, "swap_distance_errors.csv", "\n".join(lines) + "\n")
    if args.mode == "both":
        lines = ["frame,time,lambda_classic,lambda_quantum,abs_err"]
        for (idx, t), lc, lq in zip(classic.frames, classic.values, quantum.values):
            lines.append(f"{idx},{t:.6g},{lc:.12g},{lq:.12g},{abs(lc - lq):.12g}")
        _write(args.out, "cv_compare.csv", "\n".join(lines) + "\n")
    mode_word = {"classic": "classic", "quantum": "quantum", "both": "classic+quantum"}
    print(f"processed {len(frames)} frames in {mode_word[args.mode]} mode -> {args.out}")
    return 0


# -- grid search ---------------------------------------------------------------

def _load_matrices(args):
    if args.matrices:
        try:
            with open(args.matrices, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ParseError(f"cannot open matrix set {args.matrices}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"{args.matrices}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict) or "matrices" not in data:
            raise ParseError(f"{args.matrices}: expected an object with 'matrices'")
        return [np.asarray(m, dtype=float) for m in data["matrices"]], [args.matrices]
    spec = dict(part.split("=", 1) for part in args.generate.split(",") if "=" in part)
    try:
        count = int(spec.get("count", 10))
        dim = int(spec.get("dim", 8))
        gseed = int(spec.get("seed", 0))
    except ValueError:
        raise ValidationError(f"bad generator spec {args.generate!r}") from None
    if dim < 2 or dim % 2:
        raise ValidationError("generated bipartite matrices need even dim >= 2")
    rng = np.random.default_rng(gseed)
    out = []
    for _ in range(count):
        k = dim // 2
        pos_i = rng.uniform(0, 10, (k, 3))
        pos_j = rng.uniform(0, 10, (k, 3))
        e = np.linalg.norm(pos_i[:, None, :] - pos_j[None, :, :], axis=2)
        b = np.zeros((dim, dim))
        b[:k, k:] = e
        b[k:, :k] = e.T
        out.append(b)
    return out, []


def _load_settings(path, seed):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot open settings file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, list) or not data:
        raise ValidationError(f"{path}: expected a nonempty JSON array of settings")
    settings = []
    for entry in data:
        settings.append(
            vqe.HyperparamSetting(
                ansatz_layers=int(entry.get("ansatz_layers", 2)),
                entangler=entry.get("entangler", "linear-chain"),
                optimizer=entry.get("optimizer", vqe.GRADIENT_DESCENT),
                learning_rate=float(entry.get("learning_rate", 0.1)),
                max_iters=int(entry.get("max_iters", 300)),
                shots=int(entry.get("shots", 0)),
                seed=int(entry.get("seed", seed)),
            )
        )
    return settings


def cmd_grid(args) -> int:
    seed = _seed_from(args)
    matrices, input_paths = _load_matrices(args)
    settings = _load_settings(args.settings, seed)
    _write_manifest(args.out, args, seed, input_paths + [args.settings])
    best, reports = vqe.grid_search(matrices, settings)
    lines = ["setting,layers,entangler,optimizer,learning_rate,max_iters,shots,mse"]
    for k, (pi, report) in enumerate(zip(settings, reports)):
        lines.append(
            f"{k},{pi.ansatz_layers},{pi.entangler},{pi.optimizer},"
            f"{pi.learning_rate},{pi.max_iters},{pi.shots},{report.mse:.12g}"
        )
        _write(args.out, f"setting{k}_report.csv", report.to_csv())
    _write(args.out, "grid.csv", "\n".join(lines) + "\n")
    _write(
        args.out,
        "best_setting.json",
        json.dumps(
            {
                "ansatz_layers": best.ansatz_layers,
                "entangler": best.entangler,
                "optimizer": best.optimizer,
                "learning_rate": best.learning_rate,
                "max_iters": best.max_iters,
                "shots": best.shots,
                "seed": best.seed,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
    )
    print(f"best setting: {best.describe()}")
    return 0


# -- validate / catalog ---------------------------------------------------------

def cmd_validate(args) -> int:
    w = load_workflow(args.workflow)
    report = validate(w)
    if report:
        print("workflow is valid")
        return 0
    for line in report.errors:
        print(f"validation: {line}", file=sys.stderr)
    return EXIT_VALIDATION


def cmd_catalog(args) -> int:
    if args.catalog_command != "show":
        raise ValidationError(f"unknown catalog subcommand {args.catalog_command!r}")
    catalog = load_catalog(args.catalog)
    print(f"{'device':<10} {'kind':<18} {'qubits':>6} {'rderr':>8} {'queue':>5} {'score':>7}")
    for d in sorted(catalog.devices.values(), key=lambda d: d.device_id):
        print(
            f"{d.device_id:<10} {d.kind:<18} {d.num_qubits:>6} "
            f"{d.readout_error:>8.4f} {d.queue_length:>5} {d.throughput_score:>7.3f}"
        )
    return 0


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hywf", description="hybrid quantum-classical workflow engine"
    )
    parser.add_argument("--version", action="version", version=f"hywf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a workflow file against a catalog")
    run.add_argument("--workflow", required=True)
    run.add_argument("--catalog", required=True)
    run.add_argument("--trajectory", help="trajectory path for MD workflows")
    run.add_argument("--segments", help="segment spec I=a1,a2,...;J=b1,...")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", required=True)
    run.add_argument("--intensity-threshold", type=float, default=0.7)
    run.add_argument("--score-floor", type=float, default=0.0)
    run.set_defaults(func=cmd_run)

    mdp = sub.add_parser("md", help="run the MD collective-variable pipeline")
    mdp.add_argument("--trajectory", required=True)
    mdp.add_argument("--segments", required=True)
    mdp.add_argument("--mode", choices=("classic", "quantum", "both"), default="both")
    mdp.add_argument("--shots", type=int, default=0,
                     help="SWAP-test shots per pair (0 = exact)")
    mdp.add_argument("--vqe-shots", type=int, default=0,
                     help="VQE sampling shots per Pauli term (0 = exact)")
    mdp.add_argument("--seed", type=int)
    mdp.add_argument("--out", required=True)
    mdp.set_defaults(func=cmd_md)

    grid = sub.add_parser("grid", help="grid-search VQE hyperparameters")
    src = grid.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrices", help="JSON file with a 'matrices' array")
    src.add_argument("--generate", help="generator spec count=N,dim=D,seed=S")
    grid.add_argument("--settings", required=True, help="JSON array of settings")
    grid.add_argument("--seed", type=int)
    grid.add_argument("--out", required=True)
    grid.set_defaults(func=cmd_grid)

    val = sub.add_parser("validate", help="validate a workflow file")
    val.add_argument("--workflow", required=True)
    val.set_defaults(func=cmd_validate)

    cat = sub.add_parser("catalog", help="catalog utilities")
    cat.add_argument("catalog_command", choices=("show",))
    cat.add_argument("--catalog", required=True)
    cat.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ExecutionError, HywfError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXECUTION


if __name__ == "__main__":
    sys.exit(main())
