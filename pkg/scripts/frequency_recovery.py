"""Predict the synthetic family at unsampled parameters and compare with the truth.

    python scripts/frequency_recovery.py --samples 0 0.5 1 --targets 0.125 0.25 0.6 0.75 0.9
"""

import argparse

import numpy as np

from dmdrom import dmd, pipeline
from dmdrom.pipeline import InitSource, PipelineConfig
from dmdrom.snapshots import amplitude_spectrum, dominant_frequency, generate_limit_cycle_family


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--samples", type=float, nargs="+", default=[0.0, 0.5, 1.0])
    ap.add_argument("--targets", type=float, nargs="+", default=[0.25, 0.75])
    ap.add_argument("--dof", type=int, default=32)
    ap.add_argument("--steps", type=int, default=4000)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--periods", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    trajs = [generate_limit_cycle_family(p, args.dof, args.steps, args.dt, args.seed) for p in args.samples]
    db = pipeline.build_database(trajs, PipelineConfig())
    print(f"compound ranks: {{{', '.join(f'{ch}: {db.bases[ch].rank}' for ch in db.channels)}}}")
    print(f"{'target':>8} {'true Hz':>9} {'dmd Hz':>9} {'peak Hz':>9} {'mean l2':>9} {'max l2':>9}")
    for p in args.targets:
        true_f = 1.0 + p
        steps = int(round(args.periods / true_f / args.dt))
        ref = generate_limit_cycle_family(p, args.dof, steps, args.dt, args.seed)
        init = InitSource("snapshot", states={ch: ref.channels[ch][:, 0] for ch in ref.channels})
        roms = pipeline._interpolated_roms(db, p)
        x0 = pipeline.resolve_init(db, p, init, roms)
        rom = pipeline.online(db, p, steps, init)
        rep = pipeline.relative_errors(rom, ref)
        f_dmd = dmd.dominant_dmd_frequency(roms["u"].reduced_operator_star, x0["u"], args.dt)
        coeff = db.bases["u"].modes[:, 0] @ rom.channels["u"]
        f_peak = dominant_frequency(amplitude_spectrum(coeff, args.dt))
        print(f"{p:8.3f} {true_f:9.4f} {f_dmd:9.4f} {f_peak:9.4f} {rep.mean_l2:9.5f} {rep.max_l2:9.5f}")
    print("training frequencies:", np.round(1.0 + np.asarray(args.samples), 4).tolist())


if __name__ == "__main__":
    main()
