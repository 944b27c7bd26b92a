"""Compare closest-sample and left-sample base points, with and without
Procrustes alignment of the sample DMD frames.

    python scripts/base_point_sensitivity.py --spacing 0.2
"""

import argparse

import numpy as np

from dmdrom import pipeline
from dmdrom.pipeline import InitSource, PipelineConfig, RomDatabase
from dmdrom.snapshots import generate_limit_cycle_family


def mean_l2(db, target, strategy, align, dof, steps, dt):
    db = RomDatabase(db.sample_params, db.channels, db.bases, db.models, db.dt,
                     PipelineConfig(base_strategy=strategy, align=align))
    ref = generate_limit_cycle_family(target, dof, steps, dt)
    init = InitSource("snapshot", states={ch: ref.channels[ch][:, 0] for ch in ref.channels})
    return pipeline.relative_errors(pipeline.online(db, target, steps, init), ref).mean_l2


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--spacing", type=float, default=0.2)
    ap.add_argument("--dof", type=int, default=24)
    ap.add_argument("--steps", type=int, default=4000)
    ap.add_argument("--dt", type=float, default=1e-3)
    args = ap.parse_args()

    params = np.round(np.arange(0.0, 1.0 + 1e-9, args.spacing), 10)
    trajs = [generate_limit_cycle_family(p, args.dof, args.steps, args.dt) for p in params]
    db = pipeline.build_database(trajs, PipelineConfig())
    # targets at 3/4 of each interval, closer to the right sample
    targets = params[:-1] + 0.75 * args.spacing
    run = dict(dof=args.dof, steps=3000, dt=args.dt)
    print(f"{'target':>8} {'closest':>10} {'left':>10} {'ratio':>7} {'closest+al':>11} {'left+al':>10} {'ratio':>7}")
    for p in targets:
        c, l = mean_l2(db, p, "closest", False, **run), mean_l2(db, p, "geodesic_left", False, **run)
        ca, la = mean_l2(db, p, "closest", True, **run), mean_l2(db, p, "geodesic_left", True, **run)
        print(f"{p:8.3f} {c:10.2e} {l:10.2e} {l / c:7.2f} {ca:11.2e} {la:10.2e} {la / ca:7.3f}")


if __name__ == "__main__":
    main()
