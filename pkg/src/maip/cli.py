"""Command line: simulate, reconstruct, evaluate, noise-sweep, ablate, rerun.

Every command writes into ``--out`` only, stages its files and moves them
in place after success, and leaves a ``manifest.json`` that ``rerun`` can
replay. Exit codes are listed in ``EXIT_CODES``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import platform
import shutil
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import io as mio
from .geometry import (ConductivityStack, MeasurementFrameSet, SensitivityMatrix,
                       build_circular_mask)
from .metrics import evaluate
from .net import MBANetConfig
from .recon import DivergenceError, ReconConfig, loss_trace_export, run_maip
from .sim import PhantomSpec, SensorModel, Simulator, add_noise, replicate_frames

logger = logging.getLogger("maip")

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_DIMENSION = 3
EXIT_DIVERGED = 4
EXIT_IO = 5
EXIT_CODES = {
    EXIT_OK: "success",
    EXIT_BAD_INPUT: "bad input (invalid flag, file content or config)",
    EXIT_DIMENSION: "dimension mismatch between inputs",
    EXIT_DIVERGED: "optimization diverged (non-finite loss)",
    EXIT_IO: "file system error (missing or unreadable input, unwritable output)",
}

ABLATIONS = {
    "full": {},
    "no-ba": {"attention": False},
    "single-branch": {"multi_branch": False},
    "batch-norm": {"norm": "batch"},
    "frobenius": {"loss": "frobenius"},
}


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


class DimensionError(ValueError):
    pass


# ---- helpers ----

def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def versions():
    import numba
    import scipy
    import sklearn
    return {"maip": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__,
            "scikit-learn": sklearn.__version__}


def _require(path, what):
    path = Path(path)
    if not path.is_file():
        raise CliError(EXIT_IO, f"{what} file not found: {path}")
    return path


class Staging:
    """Temporary directory inside ``out``; contents move to ``out`` on success only."""

    def __init__(self, out):
        self.out = Path(out)

    def __enter__(self):
        self.created = not self.out.exists()
        try:
            self.out.mkdir(parents=True, exist_ok=True)
            self.dir = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.out))
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot create output directory {self.out}: {exc}") from exc
        return self.dir

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            for item in sorted(self.dir.iterdir()):
                target = self.out / item.name
                if target.is_dir():
                    shutil.rmtree(target)
                os.replace(item, target)
            self.dir.rmdir()
        else:
            shutil.rmtree(self.dir, ignore_errors=True)
            if self.created and not any(self.out.iterdir()):
                self.out.rmdir()
        return False


def write_manifest(stage, command, argv, config, seeds, inputs, start, extra=None):
    outputs = {}
    for path in sorted(stage.rglob("*")):
        if path.is_file():
            outputs[str(path.relative_to(stage))] = sha256(path)
    manifest = {
        "command": command,
        "argv": argv,
        "config": config,
        "seeds": seeds,
        "inputs": {name: {"path": str(Path(p).resolve()), "sha256": sha256(p)}
                   for name, p in inputs.items()},
        "outputs": outputs,
        "versions": versions(),
        "wall_time": time.perf_counter() - start,
    }
    if extra:
        manifest.update(extra)
    with open(stage / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest


def _load_problem(args):
    grid = mio.read_mask(_require(args.mask, "mask"))
    J_raw = mio.read_matrix(_require(args.jacobian, "jacobian"))
    frames = mio.read_measurements(_require(args.measurements, "measurements"))
    if J_raw.shape[1] != grid.n_pixels:
        raise DimensionError(f"jacobian has {J_raw.shape[1]} columns, mask has "
                             f"{grid.n_pixels} pixels")
    if frames.n_measurements != J_raw.shape[0]:
        raise DimensionError(f"measurements have {frames.n_measurements} rows, jacobian has "
                             f"{J_raw.shape[0]}")
    return SensitivityMatrix(J_raw, grid), frames, grid


def _net_config(args, n_frames, grid, overrides=None):
    base = {}
    if getattr(args, "config", None):
        with open(_require(args.config, "config")) as fh:
            base = json.load(fh)
    net = dict(base.get("network", {}))
    recon = dict(base.get("reconstruction", {}))
    for key in ("base_channels", "fu_channels", "se_reduction", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            net[key] = value
    if getattr(args, "aspp_dilations", None):
        net["aspp_dilations"] = [int(v) for v in args.aspp_dilations.split(",")]
    for key, value in (("iterations", args.iterations), ("lr", args.lr),
                       ("seed", args.seed), ("loss", args.loss)):
        if value is not None:
            recon[key] = value
    if args.no_attention:
        net["attention"] = False
    if args.single_branch:
        net["multi_branch"] = False
    if args.norm is not None:
        net["norm"] = args.norm
    for key, value in (overrides or {}).items():
        (recon if key == "loss" else net)[key] = value
    net.update(branches=n_frames, height=grid.height, width=grid.width)
    netcfg = MBANetConfig.from_dict(net)
    cfg = ReconConfig(**recon)
    return netcfg, cfg


def _write_reconstruction(stage, result, grid):
    mio.write_matrix(stage / "sigma.csv", result.stack.vectors)
    loss_trace_export(result, stage / "loss.csv")
    if result.attention is not None:
        mio.write_attention(stage / "attention.csv", result.attention, result.scaling)
    (stage / "frames").mkdir()
    mio.render_frames(result.stack.frames, stage / "frames")


def _reconstruct_into(stage, J, frames, grid, netcfg, cfg, truth=None):
    result = run_maip(J, frames, netcfg, cfg)
    _write_reconstruction(stage, result, grid)
    row = {"final_loss": result.loss_trace[-1], "initial_loss": result.loss_trace[0]}
    if truth is not None:
        report = evaluate(result.stack.frames, truth.frames)
        report.to_json(stage / "metrics.json")
        report.to_csv(stage / "metrics.csv")
        row.update(report.summary())
    return result, row


# ---- commands ----

def cmd_simulate(args, argv):
    start = time.perf_counter()
    phantom_path = _require(args.phantom, "phantom")
    try:
        phantom = PhantomSpec.from_json(phantom_path)
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_BAD_INPUT, f"invalid phantom spec: {exc}") from exc
    sensor = SensorModel(radius=args.radius, electrode_count=args.electrodes,
                         electrode_coverage=args.electrode_coverage,
                         background_conductivity=phantom.background, rings=args.rings)
    grid = build_circular_mask(args.height, args.width)
    data = Simulator(sensor, grid).synthesize(phantom, args.mode, args.reference)
    frames, truth = data.measurements, data.truth
    if args.replicate is not None:
        col = args.replicate
        if not 0 <= col < frames.n_frames:
            raise CliError(EXIT_BAD_INPUT, f"--replicate {col} is not a frame index")
        single = MeasurementFrameSet(frames.V[:, [col]], [frames.frequencies[col]], frames.mode,
                                     frames.reference_frequency)
        frames = replicate_frames(single, args.copies)
        truth = ConductivityStack(np.repeat(truth.vectors[:, [col]], args.copies, axis=1), grid)
    if args.snr is not None:
        frames = add_noise(frames, args.snr, seed=args.noise_seed)
    with Staging(args.out) as stage:
        mio.write_mask(stage / "mask.txt", grid)
        mio.write_matrix(stage / "jacobian.csv", data.sensitivity.J)
        mio.write_measurements(stage / "measurements.csv", frames)
        mio.write_matrix(stage / "truth.csv", truth.vectors)
        phantom.to_json(stage / "phantom.json")
        config = {"sensor": {"radius": sensor.radius, "electrode_count": sensor.electrode_count,
                             "electrode_coverage": sensor.electrode_coverage,
                             "background_conductivity": sensor.background_conductivity,
                             "rings": sensor.rings, "n_measurements": sensor.n_measurements},
                  "grid": [grid.height, grid.width], "mode": frames.mode,
                  "reference": frames.reference_frequency, "replicate": args.replicate,
                  "copies": args.copies, "snr_db": args.snr}
        write_manifest(stage, "simulate", argv, config, {"noise_seed": args.noise_seed},
                       {"phantom": phantom_path}, start)
    print(f"simulated {frames.n_measurements} x {frames.n_frames} frames into {args.out}")


def cmd_reconstruct(args, argv):
    start = time.perf_counter()
    J, frames, grid = _load_problem(args)
    truth = _load_truth(args, grid)
    netcfg, cfg = _net_config(args, frames.n_frames, grid)
    inputs = {"jacobian": args.jacobian, "measurements": args.measurements, "mask": args.mask}
    if args.truth:
        inputs["truth"] = args.truth
    if args.config:
        inputs["config"] = args.config
    with Staging(args.out) as stage:
        result, row = _reconstruct_into(stage, J, frames, grid, netcfg, cfg, truth)
        with open(stage / "config.json", "w") as fh:
            json.dump({"network": netcfg.to_dict(), "reconstruction": cfg.to_dict()}, fh, indent=2)
        write_manifest(stage, "reconstruct", argv,
                       {"network": netcfg.to_dict(), "reconstruction": cfg.to_dict()},
                       {"init": cfg.seed, "noise": cfg.seed + 1}, inputs, start,
                       {"final_loss": row["final_loss"]})
    print(f"loss {row['initial_loss']:.6g} -> {row['final_loss']:.6g} "
          f"in {result.wall_time:.1f} s; wrote {args.out}")


def _load_truth(args, grid):
    if not getattr(args, "truth", None):
        return None
    values = mio.read_matrix(_require(args.truth, "truth"))
    if values.shape[0] != grid.n_pixels:
        raise DimensionError(f"truth has {values.shape[0]} rows, mask has {grid.n_pixels} pixels")
    return ConductivityStack(values, grid)


def _evaluate_pair(pred_path, truth_path, grid):
    pred = mio.read_matrix(_require(pred_path, "prediction"))
    truth = mio.read_matrix(_require(truth_path, "truth"))
    if pred.shape != truth.shape:
        raise DimensionError(f"prediction is {pred.shape}, truth is {truth.shape}")
    if pred.shape[0] != grid.n_pixels:
        raise DimensionError(f"stacks have {pred.shape[0]} rows, mask has {grid.n_pixels} pixels")
    return evaluate(ConductivityStack(pred, grid).frames, ConductivityStack(truth, grid).frames)


def cmd_evaluate(args, argv):
    start = time.perf_counter()
    grid = mio.read_mask(_require(args.mask, "mask"))
    inputs = {"mask": args.mask, "truth": args.truth}
    if args.runs:
        runs = sorted(p for p in Path(args.runs).iterdir() if (p / "sigma.csv").is_file())
        if not runs:
            raise CliError(EXIT_BAD_INPUT, f"no run directories with sigma.csv under {args.runs}")
        rows = []
        for run in runs:
            report = _evaluate_pair(run / "sigma.csv", args.truth, grid)
            rows.append({"run": run.name, **report.summary()})
            inputs[f"run:{run.name}"] = run / "sigma.csv"
        with Staging(args.out) as stage:
            _write_rows(stage / "metrics.csv", rows)
            write_manifest(stage, "evaluate", argv, {"batch": True}, {}, inputs, start)
        print(f"evaluated {len(rows)} runs into {args.out}")
        return
    if not args.pred:
        raise CliError(EXIT_BAD_INPUT, "evaluate needs --pred or --runs")
    report = _evaluate_pair(args.pred, args.truth, grid)
    inputs["pred"] = args.pred
    with Staging(args.out) as stage:
        report.to_json(stage / "metrics.json")
        report.to_csv(stage / "metrics.csv")
        write_manifest(stage, "evaluate", argv, {"batch": False}, {}, inputs, start)
    print(json.dumps(report.summary()))


def _write_rows(path, rows):
    fields = []
    for row in rows:
        fields.extend(k for k in row if k not in fields)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def parse_snr_list(text):
    """``"10,20,40"`` or ``"10..90:10"`` (inclusive range with step). ``inf`` is allowed."""
    text = text.strip()
    if ".." in text:
        span, _, step = text.partition(":")
        lo, hi = (float(v) for v in span.split(".."))
        step = float(step or 10)
        if step <= 0 or hi < lo:
            raise ValueError(f"bad SNR range {text!r}")
        return [float(v) for v in np.arange(lo, hi + step / 2, step)]
    return [float(v) for v in text.split(",") if v.strip()]


def _sweep_member(job):
    """One reconstruction in its own directory; returns a summary row (never raises)."""
    (label, out_dir, J_raw, mask, V, meta, snr, noise_seed, netcfg_d, cfg_d, truth) = job
    from .geometry import PixelGrid
    grid = PixelGrid(mask)
    J = SensitivityMatrix(J_raw, grid)
    frames = MeasurementFrameSet(V, meta["frequencies"], meta["mode"], meta["reference_frequency"])
    if snr is not None:
        frames = add_noise(frames, snr, seed=noise_seed)
    netcfg, cfg = MBANetConfig.from_dict(netcfg_d), ReconConfig(**cfg_d)
    truth_stack = None if truth is None else ConductivityStack(truth, grid)
    row = {"run": label, "snr_db": snr, "status": "ok"}
    start = time.perf_counter()
    try:
        with Staging(out_dir) as stage:
            mio.write_measurements(stage / "measurements.csv", frames)
            _, summary = _reconstruct_into(stage, J, frames, grid, netcfg, cfg, truth_stack)
        row.update(summary)
    except DivergenceError as exc:
        row.update(status="diverged", error=str(exc))
    except Exception as exc:  # recorded in the aggregate, the sweep goes on
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    return row, time.perf_counter() - start


def _run_members(jobs, workers):
    """Rows for the aggregate CSV and per-member wall times (kept out of the CSV)."""
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_sweep_member, jobs))
    else:
        out = [_sweep_member(job) for job in jobs]
    return [r for r, _ in out], {r["run"]: t for r, t in out}


def _snr_label(snr):
    return "snr_inf" if np.isinf(snr) else f"snr_{snr:g}"


def cmd_noise_sweep(args, argv):
    start = time.perf_counter()
    J, frames, grid = _load_problem(args)
    truth = _load_truth(args, grid)
    netcfg, cfg = _net_config(args, frames.n_frames, grid)
    try:
        snrs = parse_snr_list(args.snr_list)
    except ValueError as exc:
        raise CliError(EXIT_BAD_INPUT, f"invalid --snr-list: {exc}") from exc
    inputs = {"jacobian": args.jacobian, "measurements": args.measurements, "mask": args.mask}
    if args.truth:
        inputs["truth"] = args.truth
    with Staging(args.out) as stage:
        jobs = [(_snr_label(s), stage / _snr_label(s), J.J, grid.mask, frames.V, frames.metadata(),
                 s, args.noise_seed + i, netcfg.to_dict(), cfg.to_dict(),
                 None if truth is None else truth.vectors) for i, s in enumerate(snrs)]
        rows, times = _run_members(jobs, args.jobs)
        _write_rows(stage / "aggregate.csv", rows)
        write_manifest(stage, "noise-sweep", argv,
                       {"network": netcfg.to_dict(), "reconstruction": cfg.to_dict(),
                        "snr_db": snrs},
                       {"init": cfg.seed, "noise": cfg.seed + 1,
                        "measurement_noise": [args.noise_seed + i for i in range(len(snrs))]},
                       inputs, start, {"member_wall_time": times})
    failed = [r["run"] for r in rows if r["status"] != "ok"]
    print(f"{len(rows)} runs, {len(failed)} failed; wrote {args.out}")


def cmd_ablate(args, argv):
    start = time.perf_counter()
    J, frames, grid = _load_problem(args)
    truth = _load_truth(args, grid)
    variants = args.variants.split(",") if args.variants else list(ABLATIONS)
    unknown = [v for v in variants if v not in ABLATIONS]
    if unknown:
        raise CliError(EXIT_BAD_INPUT, f"unknown ablation variants: {unknown}")
    inputs = {"jacobian": args.jacobian, "measurements": args.measurements, "mask": args.mask}
    if args.truth:
        inputs["truth"] = args.truth
    configs = {}
    with Staging(args.out) as stage:
        jobs = []
        for name in variants:
            netcfg, cfg = _net_config(args, frames.n_frames, grid, ABLATIONS[name])
            configs[name] = {"network": netcfg.to_dict(), "reconstruction": cfg.to_dict()}
            jobs.append((name, stage / name, J.J, grid.mask, frames.V, frames.metadata(), None,
                         0, netcfg.to_dict(), cfg.to_dict(),
                         None if truth is None else truth.vectors))
        rows, times = _run_members(jobs, args.jobs)
        _write_rows(stage / "aggregate.csv", rows)
        write_manifest(stage, "ablate", argv, configs, {"init": args.seed or 0}, inputs, start,
                       {"member_wall_time": times})
    print(f"{len(rows)} variants; wrote {args.out}")


def cmd_rerun(args, argv):
    """Replay the command recorded in a manifest into a new output directory."""
    path = _require(args.manifest, "manifest")
    try:
        manifest = json.loads(path.read_text())
        recorded = list(manifest["argv"])
    except (ValueError, KeyError) as exc:
        raise CliError(EXIT_BAD_INPUT, f"not a run manifest: {path}") from exc
    if recorded and recorded[0] == "rerun":
        raise CliError(EXIT_BAD_INPUT, "manifest records a rerun")
    for name, info in manifest.get("inputs", {}).items():
        if not Path(info["path"]).is_file():
            raise CliError(EXIT_IO, f"recorded input {name} is missing: {info['path']}")
        if sha256(info["path"]) != info["sha256"]:
            raise CliError(EXIT_BAD_INPUT, f"recorded input {name} changed since the run")
    replay = _replace_out(recorded, args.out)
    code = main(replay)
    if code != EXIT_OK:
        return code
    fresh = json.loads((Path(args.out) / "manifest.json").read_text())["outputs"]
    same = fresh == manifest["outputs"]
    print("outputs identical to the manifest" if same else "outputs differ from the manifest")
    return EXIT_OK if same or not args.check else EXIT_BAD_INPUT


def _replace_out(argv, out):
    argv = list(argv)
    for i, tok in enumerate(argv):
        if tok == "--out" and i + 1 < len(argv):
            argv[i + 1] = str(out)
            return argv
        if tok.startswith("--out="):
            argv[i] = f"--out={out}"
            return argv
    return argv + ["--out", str(out)]


# ---- parser ----

def _add_problem_args(p, truth=False):
    p.add_argument("--jacobian", required=True, help="sensitivity matrix (.csv or .bin)")
    p.add_argument("--measurements", required=True, help="measurement CSV with JSON sidecar")
    p.add_argument("--mask", required=True, help="0/1 mask file")
    p.add_argument("--truth", help="ground-truth stack CSV (N x L) for metrics")


def _add_recon_args(p):
    p.add_argument("--config", help="JSON with 'network' and 'reconstruction' sections")
    p.add_argument("--iterations", type=int, help="optimization steps (default 900)")
    p.add_argument("--lr", type=float, help="Adam learning rate (default 0.00012)")
    p.add_argument("--seed", type=int, help="seed for weights (seed) and noise input (seed+1)")
    p.add_argument("--loss", choices=("l1", "frobenius"))
    p.add_argument("--base-channels", type=int, dest="base_channels")
    p.add_argument("--fu-channels", type=int, dest="fu_channels")
    p.add_argument("--se-reduction", type=int, dest="se_reduction")
    p.add_argument("--aspp-dilations", dest="aspp_dilations", help="comma list, e.g. 1,2,4")
    p.add_argument("--no-attention", action="store_true", help="drop branch attention")
    p.add_argument("--single-branch", action="store_true", help="one sub-network for all frames")
    p.add_argument("--norm", choices=("aln", "batch"))
    p.add_argument("--out", required=True, help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="maip", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"maip {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="FEM-simulate a phantom")
    p.add_argument("--phantom", required=True, help="phantom JSON")
    p.add_argument("--mode", choices=("td", "fd", "TD", "FD"), default="td")
    p.add_argument("--reference", type=float, help="FD reference frequency (Hz)")
    p.add_argument("--height", type=int, default=32)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--electrodes", type=int, default=16)
    p.add_argument("--electrode-coverage", type=float, default=0.0, dest="electrode_coverage")
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--rings", type=int, default=16)
    p.add_argument("--replicate", type=int, help="keep only this frame and repeat it")
    p.add_argument("--copies", type=int, default=4)
    p.add_argument("--snr", type=float, help="add white noise at this SNR (dB)")
    p.add_argument("--noise-seed", type=int, default=0, dest="noise_seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="run the network reconstruction")
    _add_problem_args(p)
    _add_recon_args(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="score reconstructions against ground truth")
    p.add_argument("--pred", help="reconstructed stack CSV (N x L)")
    p.add_argument("--runs", help="directory of run folders, each with sigma.csv")
    p.add_argument("--truth", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("noise-sweep", help="reconstruct at several SNRs")
    _add_problem_args(p)
    _add_recon_args(p)
    p.add_argument("--snr-list", default="10..90:10", dest="snr_list",
                   help="comma list or lo..hi:step in dB (default 10..90:10)")
    p.add_argument("--noise-seed", type=int, default=0, dest="noise_seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_noise_sweep)

    p = sub.add_parser("ablate", help="run the ablation variants")
    _add_problem_args(p)
    _add_recon_args(p)
    p.add_argument("--variants", help=f"comma list from {','.join(ABLATIONS)} (default all)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("rerun", help="replay a manifest into a new directory")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--check", action="store_true",
                   help="exit nonzero if outputs differ from the manifest")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=os.environ.get("MAIP_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        code = args.func(args, argv)
        return EXIT_OK if code is None else code
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DimensionError as exc:
        print(f"error: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except mio.FormatError as exc:
        print(f"error: bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"error: I/O: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError, KeyError) as exc:
        print(f"error: bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
