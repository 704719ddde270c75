#!/usr/bin/env python3
"""Cell size / cell overlap study.

Holds the block geometry at 8x8 with 1/2 overlap and compares cells of
2x2 and 4x4 pixels with and without 1/2 cell overlap (four combinations),
reporting the accuracy gain from overlapping cells.
"""

import argparse

from sph import ExperimentConfig, load_dataset, sweep, write_sweep_csv
from sph.synth import synthetic_dataset


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dataset", help="dataset root (default: built-in synthetic 40x10)")
    parser.add_argument("--out", default="cell_study.csv")
    parser.add_argument("--n", type=int, default=2, help="fold count for paper-nfold")
    args = parser.parse_args()

    dataset = load_dataset(args.dataset) if args.dataset else synthetic_dataset(40, 10, jitter=1)
    base = ExperimentConfig(feature="sph", reducer="lda", classifier="nnc",
                            protocol="paper-nfold", n=args.n)
    rows = sweep(dataset, base, block_sizes=[8], block_overlaps=[0.5],
                 cell_sizes=[2, 4], cell_overlaps=[0.0, 0.5])
    write_sweep_csv(args.out, rows)
    print(f"wrote {args.out}")
    for r in rows:
        print(f"  cell={r['cell_size']} overlap={r['cell_overlap']}: {100 * r['mean']:6.2f}%  (dims {r['dims']})")

    by_key = {(r["cell_size"], r["cell_overlap"]): r["mean"] for r in rows}
    for f in (2, 4):
        gain = by_key[(f, 0.5)] - by_key[(f, 0.0)]
        print(f"gain of 1/2 overlap at cell {f}x{f}: {100 * gain:.1f} points")


if __name__ == "__main__":
    main()
