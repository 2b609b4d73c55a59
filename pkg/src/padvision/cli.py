"""Command line interface: detect, eval, render, simulate, bench.

Exit codes: 0 success, 1 internal error, 2 bad input or configuration.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import BINARIZE_MODES, Config, ConfigError, load_config
from .imgio import (
    annotate,
    list_sequence_frames,
    read_altitude_log,
    read_pnm_file,
    sequence_frame_index,
    write_pnm_file,
)
from .lander import DroneState, simulate
from .metrics import EvaluationError, evaluate, format_report
from .pipeline import ANALYSIS_STAGE, STAGES, Detector, result_overlays
from .synth import CorpusRecipe, ScenePose, make_corpus, marker_free_recipe, read_truth, render


class CliError(Exception):
    """User-facing error; maps to exit code 2."""


def _load_config(args) -> Config:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        raise CliError(str(exc)) from exc
    overrides = {}
    if getattr(args, "binarize", None):
        overrides["binarize"] = args.binarize
    if getattr(args, "connectivity", None):
        overrides["connectivity"] = args.connectivity
    if overrides:
        cfg = dataclasses.replace(
            cfg, pipeline=dataclasses.replace(cfg.pipeline, **overrides)
        )
    return cfg


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w"), True


def _iter_input_frames(input_path: Path, altitude=None):
    """Yield (frame, altitude_m) for a single image or a sequence directory."""
    if input_path.is_dir():
        frames = list_sequence_frames(input_path)
        if not frames:
            raise CliError(f"no frame_*.ppm/.pgm files in {input_path}")
        altitude_file = input_path / "altitude.csv"
        if not altitude_file.exists():
            raise CliError(
                f"missing {altitude_file}: an altitude log is mandatory for the size gate"
            )
        altitudes = read_altitude_log(altitude_file)
        for path in frames:
            idx = sequence_frame_index(path)
            if idx not in altitudes:
                raise CliError(f"altitude.csv has no entry for frame {idx}")
            yield read_pnm_file(path, idx), altitudes[idx]
    else:
        if not input_path.exists():
            raise CliError(f"input {input_path} does not exist")
        if altitude is None:
            raise CliError(
                "single-image input needs --altitude METRES (mandatory for the size gate)"
            )
        yield read_pnm_file(input_path, 0), altitude


def run_detection(input_path, config: Config, annotate_dir=None, altitude=None):
    """Shared detect/eval machinery: returns the per-frame records."""
    detector = Detector(config)
    records = []
    annotate_path = Path(annotate_dir) if annotate_dir else None
    if annotate_path:
        annotate_path.mkdir(parents=True, exist_ok=True)
    for frame, alt in _iter_input_frames(Path(input_path), altitude):
        result = detector.process(frame, alt)
        records.append(result.to_record())
        if annotate_path:
            overlays = result_overlays(result, frame.width, frame.height)
            write_pnm_file(
                annotate_path / f"annotated_{frame.frame_index:06d}.ppm",
                annotate(frame, overlays),
            )
    return records


def cmd_detect(args) -> int:
    cfg = _load_config(args)
    records = run_detection(args.input, cfg, args.annotate, args.altitude)
    out, close = _open_out(args.out)
    try:
        for rec in records:
            out.write(json.dumps(rec) + "\n")
    finally:
        if close:
            out.close()
    return 0


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    corpus = Path(args.corpus)
    truth_file = corpus / "truth.jsonl"
    if not truth_file.exists():
        raise CliError(f"missing {truth_file}")
    truths = read_truth(corpus)
    records = run_detection(corpus, cfg)
    try:
        metrics = evaluate(records, truths)
    except EvaluationError as exc:
        raise CliError(str(exc)) from exc
    print(format_report(metrics))
    if args.out:
        Path(args.out).write_text(json.dumps(metrics, indent=2) + "\n")
    return 0


def cmd_render(args) -> int:
    cfg = _load_config(args)
    if args.recipe == "flight":
        recipe = CorpusRecipe()
    else:
        recipe = marker_free_recipe()
    if args.background:
        recipe = dataclasses.replace(recipe, background=args.background)
    make_corpus(recipe, args.frames, args.seed, args.out, cfg.marker_spec, cfg.camera)
    print(f"wrote {args.frames} frames to {args.out}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    rng = np.random.default_rng(args.seed)
    summaries = []
    out, close = _open_out(args.out) if args.out else (None, False)
    try:
        for run in range(args.runs):
            if args.initial_x is not None or args.initial_y is not None:
                x0 = args.initial_x or 0.0
                y0 = args.initial_y or 0.0
            else:
                angle = rng.uniform(0, 2 * math.pi)
                radius = 0.5 * math.sqrt(rng.uniform())
                x0 = radius * math.cos(angle)
                y0 = radius * math.sin(angle)
            alt0 = args.initial_alt if args.initial_alt is not None else float(
                rng.uniform(1.5, 2.0)
            )
            yaw0 = args.initial_yaw if args.initial_yaw is not None else float(
                rng.uniform(-45.0, 45.0)
            )
            initial = DroneState(x=x0, y=y0, altitude=alt0, yaw=yaw0)
            result = simulate(
                initial,
                config=cfg,
                seed=args.seed + run,
                marker_removed_after_s=args.remove_marker_at,
            )
            summary = {
                "run": run,
                "landed": result.landed,
                "reason": result.reason,
                "final_ground_error_m": result.final_ground_error_m,
                "final_yaw_error_deg": result.final_yaw_error_deg,
                "ticks": len(result.ticks),
                "initial": dataclasses.asdict(initial),
            }
            summaries.append(summary)
            print(
                f"run {run}: {result.reason}, ground error "
                f"{result.final_ground_error_m:.3f} m, yaw error "
                f"{result.final_yaw_error_deg:.2f} deg, {len(result.ticks)} ticks"
            )
            if out is not None and (args.log_run is None or args.log_run == run):
                for tick in result.ticks:
                    out.write(json.dumps({"run": run, **tick.to_record()}) + "\n")
    finally:
        if close:
            out.close()
    landed = sum(1 for s in summaries if s["landed"])
    print(f"landed {landed}/{len(summaries)}")
    return 0


def cmd_bench(args) -> int:
    cfg = _load_config(args)
    cam = dataclasses.replace(cfg.camera, width=args.width, height=args.height)
    cfg = dataclasses.replace(cfg, camera=cam)
    if args.frames < 10:
        raise CliError("bench needs at least 10 frames")
    report = run_benchmark(cfg, args.frames, args.seed)
    print(format_benchmark(report))
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    return 0


def run_benchmark(config: Config, n_frames: int, seed: int = 0) -> dict:
    """Render `n_frames`, run the pipeline single-threaded, report timings."""
    cam = config.camera
    spec = config.marker_spec
    rng = np.random.default_rng(seed)
    frames = []
    altitudes = []
    for i in range(n_frames):
        alt = float(rng.uniform(0.8, 1.2))
        pose = ScenePose(
            position=(float(rng.uniform(-0.1, 0.1)), float(rng.uniform(-0.1, 0.1))),
            altitude=alt,
            yaw_deg=float(rng.uniform(-180, 180)),
            noise_sigma=2.0,
        )
        frame, _ = render(spec, cam, pose, seed=int(rng.integers(0, 2**63 - 1)), frame_index=i)
        frames.append(frame)
        altitudes.append(alt)

    detector = Detector(config)
    per_stage: dict[str, list[float]] = {name: [] for name in STAGES + (ANALYSIS_STAGE,)}
    totals = []
    t_start = time.perf_counter()
    for frame, alt in zip(frames, altitudes):
        result = detector.process(frame, alt)
        for name in per_stage:
            per_stage[name].append(result.stage_ms.get(name, 0.0))
        totals.append(result.total_ms)
    wall_s = time.perf_counter() - t_start

    def stats(xs):
        ordered = sorted(xs)
        return {
            "median_ms": statistics.median(ordered),
            "p95_ms": ordered[min(len(ordered) - 1, int(0.95 * len(ordered)))],
            "mean_ms": statistics.fmean(ordered),
        }

    total_s = sum(totals) / 1e3
    return {
        "width": cam.width,
        "height": cam.height,
        "frames": n_frames,
        "stages": {name: stats(xs) for name, xs in per_stage.items()},
        "end_to_end": stats(totals),
        "total_s": total_s,
        "wall_s": wall_s,
        "fps": n_frames / total_s,
    }


def format_benchmark(report: dict) -> str:
    lines = [
        f"resolution:  {report['width']}x{report['height']}",
        f"frames:      {report['frames']}",
        "stage timings (median / p95 ms):",
    ]
    for name in STAGES + (ANALYSIS_STAGE,):
        st = report["stages"][name]
        lines.append(f"  {name:<10} {st['median_ms']:8.3f} / {st['p95_ms']:8.3f}")
    e2e = report["end_to_end"]
    lines.append(f"end-to-end:  {e2e['median_ms']:.3f} / {e2e['p95_ms']:.3f} ms")
    lines.append(f"throughput:  {report['fps']:.2f} fps (single-threaded)")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="padvision",
        description="Landing-pad detection pipeline and landing simulator",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file", default=None)
    common.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("detect", parents=[common], help="run the pipeline on images")
    p.add_argument("input", help="a .pgm/.ppm file or a sequence directory")
    p.add_argument("--binarize", choices=BINARIZE_MODES, default=None)
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=None)
    p.add_argument("--altitude", type=float, default=None, help="metres, for single images")
    p.add_argument("--annotate", metavar="DIR", default=None, help="write overlay PPMs here")
    p.add_argument("--out", default=None, help="JSON-lines output path (default stdout)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", parents=[common], help="score a corpus against its truth")
    p.add_argument("corpus", help="directory with frames, altitude.csv and truth.jsonl")
    p.add_argument("--binarize", choices=BINARIZE_MODES, default=None)
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=None)
    p.add_argument("--out", default=None, help="write the metrics JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--frames", type=int, default=50)
    p.add_argument("--recipe", choices=("flight", "marker-free"), default="flight")
    p.add_argument("--background", choices=("uniform", "checker", "texture"), default=None)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("simulate", parents=[common], help="closed-loop landing runs")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--initial-x", type=float, default=None, dest="initial_x")
    p.add_argument("--initial-y", type=float, default=None, dest="initial_y")
    p.add_argument("--initial-alt", type=float, default=None, dest="initial_alt")
    p.add_argument("--initial-yaw", type=float, default=None, dest="initial_yaw")
    p.add_argument("--remove-marker-at", type=float, default=None, dest="remove_marker_at")
    p.add_argument("--out", default=None, help="JSON-lines tick log path")
    p.add_argument("--log-run", type=int, default=None, dest="log_run")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", parents=[common], help="pipeline throughput benchmark")
    p.add_argument("--width", type=int, default=1280)
    p.add_argument("--height", type=int, default=720)
    p.add_argument("--frames", type=int, default=60)
    p.add_argument("--out", default=None, help="write the report JSON here")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - internal failures
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
