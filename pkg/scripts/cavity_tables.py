"""Error table for externally supplied cavity trajectories.

Expects DATA/config.json (a pipeline config whose sample paths are relative
to DATA) and DATA/reference/<name>/ trajectory directories at the test
parameters. Prints mean/max relative l2 and l-inf errors per test point over
each reference's post-discard window.

    python scripts/cavity_tables.py /path/to/DATA
"""

import argparse
from pathlib import Path

from dmdrom import pipeline
from dmdrom.pipeline import InitSource, PipelineConfig
from dmdrom.snapshots import Trajectory, load_trajectory


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("data", type=Path)
    ap.add_argument("--base-strategy", choices=["closest", "geodesic_left"], default=None)
    args = ap.parse_args()

    cfg = PipelineConfig.load(args.data / "config.json")
    if args.base_strategy:
        cfg.base_strategy = args.base_strategy
    db = pipeline.offline(cfg)
    print(f"{'parameter':>12} {'mean l2':>9} {'max l2':>9} {'mean linf':>10} {'max linf':>9}")
    for d in sorted((args.data / "reference").iterdir()):
        ref = load_trajectory(d)
        window = Trajectory(ref.parameter, ref.dt, {ch: ref.window(ch) for ch in ref.channels}, 0)
        init = InitSource("snapshot", states={ch: window.channels[ch][:, 0] for ch in window.channels})
        rom = pipeline.online(db, ref.parameter, window.steps, init)
        s = pipeline.relative_errors(rom, window).summary()
        print(f"{ref.parameter:12.6g} {s['mean_l2']:9.4f} {s['max_l2']:9.4f} {s['mean_linf']:10.4f} {s['max_linf']:9.4f}")


if __name__ == "__main__":
    main()
