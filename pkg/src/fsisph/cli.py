"""Command-line driver.

    fsisph run --preset beam-case-iii --output-dir out/
    fsisph run --config my_setup.cfg --end-time 5 --mode single-step

Outputs land in the output directory: `manifest.json` (written even if
the run aborts), `telemetry.csv` (one row per acoustic step),
`probe_<id>.csv` per probe, and numbered snapshot files when a snapshot
cadence is set.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import __version__
from .config import load_preset, parse_config, serialize_config
from .errors import FsiSphError
from .runio import Manifest, TelemetryWriter, config_hash, write_probe_series, write_snapshot
from .scenarios import assemble


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fsisph")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute one scenario")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help="built-in scenario name")
    src.add_argument("--config", help="path to a configuration file")
    run.add_argument("--end-time", type=float, default=None,
                     help="override the scenario end time")
    run.add_argument("--mode", choices=["multi-rate", "single-step"],
                     default=None, help="override the time-stepping mode")
    run.add_argument("--output-dir", default=None,
                     help="output directory (default $FSISPH_OUTPUT_DIR or ./out)")
    run.add_argument("--snapshot-every", type=float, default=None,
                     help="simulated-time interval between snapshots")
    run.add_argument("--snapshot-format", choices=["csv", "vtk"], default="csv")
    run.add_argument("--deterministic", action="store_true",
                     help="force the bit-reproducible single-worker path")
    run.add_argument("--workers", type=int, default=1,
                     help="worker count (kept at 1 in deterministic mode)")
    run.add_argument("--quiet", action="store_true")
    return parser


def _progress(sim, end_time, t_wall_start, quiet):
    if quiet:
        return
    wall = time.perf_counter() - t_wall_start
    print(f"  t = {sim.t:10.4f} / {end_time:g}   advection steps {sim.n_advection}"
          f"   acoustic {sim.n_acoustic}   wall {wall:7.1f} s", flush=True)


def run_scenario(cfg, out_dir: str, snapshot_every: float | None,
                 snapshot_format: str, workers: int, deterministic: bool,
                 quiet: bool = False) -> int:
    os.makedirs(out_dir, exist_ok=True)
    serialized = serialize_config(cfg)
    with open(os.path.join(out_dir, "config.cfg"), "w", encoding="utf-8") as fh:
        fh.write(serialized)
    manifest = Manifest(cfg.name, cfg.geometry, cfg.mode,
                        config_hash(serialized), __version__,
                        workers=1 if deterministic else workers,
                        deterministic=deterministic)
    manifest.data["end_time_target"] = cfg.end_time

    sim = None
    error = None
    t0 = time.perf_counter()
    snap_every = cfg.snapshot_every if snapshot_every is None else snapshot_every
    try:
        sim = assemble(cfg)
        sim.telemetry = TelemetryWriter(os.path.join(out_dir, "telemetry.csv"))
        next_snap = 0.0
        snap_index = 0
        next_report = 0.0
        while sim.t < cfg.end_time:
            sim.advance_advection_step()
            if snap_every > 0.0 and sim.t >= next_snap:
                t_io = time.perf_counter()
                write_snapshot(sim, out_dir, snap_index, snapshot_format)
                sim.phase_seconds["io"] += time.perf_counter() - t_io
                snap_index += 1
                while next_snap <= sim.t:
                    next_snap += snap_every
            if sim.t >= next_report:
                _progress(sim, cfg.end_time, t0, quiet)
                next_report += max(cfg.end_time / 50.0, 1e-12)
        if snap_every > 0.0:
            write_snapshot(sim, out_dir, snap_index, snapshot_format)
    except (FsiSphError, FloatingPointError) as exc:
        error = f"{type(exc).__name__}: {exc}"
        print(f"run aborted: {error}", file=sys.stderr)
    finally:
        wall = time.perf_counter() - t0
        if sim is not None:
            if sim.telemetry is not None:
                sim.telemetry.close()
            for probe in sim.probes:
                write_probe_series(
                    probe.series(),
                    os.path.join(out_dir, f"probe_{probe.probe_id}.csv"))
        manifest.finalize(sim, wall, error)
        manifest.write(os.path.join(out_dir, "manifest.json"))
    return 0 if error is None else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_preset(args.preset) if args.preset else parse_config(args.config)
    except (FsiSphError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    if args.end_time is not None:
        cfg.end_time = args.end_time
    if args.mode is not None:
        cfg.mode = args.mode
    out_dir = args.output_dir or os.environ.get("FSISPH_OUTPUT_DIR", "out")
    return run_scenario(cfg, out_dir, args.snapshot_every,
                        args.snapshot_format, args.workers,
                        args.deterministic, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
