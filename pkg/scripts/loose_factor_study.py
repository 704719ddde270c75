#!/usr/bin/env python3
"""Loose-factor coefficient study.

Sweeps k over the flat/non-flat threshold eps = k * (cell/2)^2 for the two
standard geometries (8px block / 2px cell and 16px block / 4px cell) under
two- and five-fold inverted cross-validation.
"""

import argparse

from sph import ExperimentConfig, load_dataset, sweep, write_sweep_csv
from sph.synth import synthetic_dataset

K_VALUES = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dataset", help="dataset root (default: built-in synthetic 40x10)")
    parser.add_argument("--out-prefix", default="loose_factor")
    args = parser.parse_args()

    dataset = load_dataset(args.dataset) if args.dataset else synthetic_dataset(40, 10, jitter=1)
    for n in (2, 5):
        base = ExperimentConfig(feature="sph", reducer="lda", classifier="nnc",
                                protocol="paper-nfold", n=n)
        rows = []
        for block, cell in ((8, 2), (16, 4)):
            rows += sweep(dataset, base, block_sizes=[block], block_overlaps=[0.5],
                          cell_sizes=[cell], cell_overlaps=[0.5], k_values=K_VALUES)
        out = f"{args.out_prefix}_{n}fold.csv"
        write_sweep_csv(out, rows)
        print(f"[{n}-fold] wrote {out}")
        for r in rows:
            print(f"  block={r['block_size']:>2} cell={r['cell_size']} k={r['k']:<5} "
                  f"accuracy={100 * r['mean']:6.2f}%")


if __name__ == "__main__":
    main()
