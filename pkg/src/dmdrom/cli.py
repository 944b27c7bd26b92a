"""Command line interface.

Subcommands::

    synth     --param P [--param P ...] --steps N --dt DT [--seed S] --out DIR
    offline   --config CFG.json --out DB
    online    DB --target P --steps N --out DIR [--init SRC]
    errors    ROM REF [--weights FILE] [--out DIR]
    spectrum  TRAJ [CHANNEL [MODE]] [--out FILE.csv]

Exit status is 0 on success, 1 on domain or configuration errors (including
bad usage) and 2 on I/O and file-format errors. Every run writes a one-line
JSON run log to stderr.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, pipeline, pod
from .errors import FormatError, RomError
from .snapshots import amplitude_spectrum, generate_limit_cycle_family, load_trajectory, save_trajectory

SYNTH_DOF = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dmdrom", description="POD + DMD + manifold interpolation reduced-order models")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="write synthetic limit-cycle trajectories")
    s.add_argument("--param", type=float, action="append", required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--dt", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    s = sub.add_parser("offline", help="build a ROM database from sample trajectories")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)

    s = sub.add_parser("online", help="predict a trajectory at a new parameter")
    s.add_argument("database")
    s.add_argument("--target", type=float, required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--init", default=None, help="nearest_sample | interpolated | snapshot:PATH")

    s = sub.add_parser("errors", help="relative errors of a ROM trajectory against a reference")
    s.add_argument("rom")
    s.add_argument("reference")
    s.add_argument("--weights", default=None)
    s.add_argument("--out", default=".")

    s = sub.add_parser("spectrum", help="amplitude spectrum of one POD coefficient")
    s.add_argument("trajectory")
    s.add_argument("channel", nargs="?", default=None)
    s.add_argument("mode", nargs="?", type=int, default=0)
    s.add_argument("--out", default="spectrum.csv")
    return p


def _synth(args, info):
    if len(args.param) == 1:
        save_trajectory(generate_limit_cycle_family(args.param[0], SYNTH_DOF, args.steps, args.dt, args.seed), args.out)
        return
    out = Path(args.out)
    samples = []
    for p in args.param:
        name = f"p{p:+.6f}"
        save_trajectory(generate_limit_cycle_family(p, SYNTH_DOF, args.steps, args.dt, args.seed), out / name)
        samples.append({"path": name, "parameter": p})
    cfg = pipeline.PipelineConfig(samples=samples).to_dict()
    with open(out / "config.json", "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=2)
        fh.write("\n")


def _offline(args, info):
    cfg = pipeline.PipelineConfig.load(args.config)
    info["config_hash"] = cfg.hash()
    db = pipeline.offline(cfg, args.out)
    info["samples"] = len(db.sample_params)
    info["pod_ranks"] = {ch: db.bases[ch].rank for ch in db.channels}


def _online(args, info):
    db = pipeline.load_database(args.database)
    info["config_hash"] = db.config.hash()
    init = pipeline.InitSource.parse(args.init) if args.init else pipeline.InitSource("interpolated")
    traj = pipeline.online(db, args.target, args.steps, init)
    save_trajectory(traj, args.out)


def _errors(args, info):
    rom = load_trajectory(args.rom)
    ref = load_trajectory(args.reference)
    weights = pipeline.load_weights(args.weights) if args.weights else None
    report = pipeline.relative_errors(rom, ref, weights)
    report.write(args.out)
    info["summary"] = report.summary()


def _spectrum(args, info):
    t = load_trajectory(args.trajectory)
    channel = args.channel or t.channel_names[0]
    if channel not in t.channels:
        raise RomError(f"trajectory has no channel {channel!r}")
    basis = pod.pod_basis(t.window(channel))
    if not 0 <= args.mode < basis.rank:
        raise RomError(f"mode {args.mode} out of range, basis has {basis.rank} modes")
    coeff = basis.modes[:, args.mode] @ t.window(channel)
    spec = amplitude_spectrum(coeff, t.dt)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("frequency_hz,amplitude\n")
        for f, a in zip(spec.frequencies, spec.amplitudes):
            fh.write(f"{float(f)!r},{float(a)!r}\n")


_COMMANDS = {"synth": _synth, "offline": _offline, "online": _online, "errors": _errors, "spectrum": _spectrum}


def main(argv=None) -> int:
    start = time.perf_counter()
    info = {
        "versions": {
            "dmdrom": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
    }
    try:
        args = _build_parser().parse_args(argv)
        info["command"] = args.command
        _COMMANDS[args.command](args, info)
        code = 0
    except UsageError as exc:
        info["error"] = f"usage: {exc}"
        code = 1
    except (FormatError, OSError) as exc:
        info["error"] = str(exc)
        code = 2
    except RomError as exc:
        info["error"] = str(exc)
        code = 1
    if "error" in info:
        print(f"dmdrom: error: {info['error']}", file=sys.stderr)
    info["exit_code"] = code
    info["timings"] = {"total_s": round(time.perf_counter() - start, 6)}
    print(json.dumps(info, sort_keys=True), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
