#!/usr/bin/env python3
"""Mapping fidelity versus circle count: KS sweep plus profile PAPR statistics.

Desk-scale by default (100 snapshots); pass --paper-scale for the published
1000-snapshot runs.
"""

import argparse
from pathlib import Path

from circint.experiments import KsSweepConfig, PaprConfig, run_ks_sweep, run_papr


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out-dir", default=".")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--paper-scale", action="store_true")
    args = ap.parse_args()

    snapshots = 1000 if args.paper_scale else 100
    out = Path(args.out_dir)

    ks_cfg = KsSweepConfig(r_grid=(0.0, 0.25, 0.5, 0.75, 1.0), snapshots=snapshots)
    ks = run_ks_sweep(ks_cfg, args.seed, jobs=args.jobs)
    (out / "ks_sweep.csv").write_text(ks.to_csv())
    for c in ks_cfg.circle_counts:
        print(f"C={c}: mean KS at r=1: {ks.value('ks_mean', C=c, N=20, r=1.0):.4f}")

    papr = run_papr(PaprConfig(snapshots=snapshots), args.seed)
    (out / "papr.csv").write_text(papr.to_csv())
    for n_exp in (100.0, 1000.0):
        print(
            f"N_I={n_exp:.0f}: PAPR median {papr.value('papr_median', n_expected=n_exp):.2f}, "
            f"range [{papr.value('papr_min', n_expected=n_exp):.2f}, "
            f"{papr.value('papr_max', n_expected=n_exp):.2f}]"
        )
    print(f"wrote {out / 'ks_sweep.csv'} and {out / 'papr.csv'}")


if __name__ == "__main__":
    main()
