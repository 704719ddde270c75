#!/usr/bin/env python3
"""Recognition accuracy versus retained subspace dimensionality.

Trains on the first N samples of every subject and sweeps the retained
dimensionality of the PCA or LDA stage, for SPH, MSPH, and the raw-pixel
baseline. Output is a CSV of (feature, reducer, dims, accuracy) rows.
"""

import argparse
import csv

from sph import ExperimentConfig, extract_features, load_dataset, run_pipeline
from sph.synth import synthetic_dataset


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dataset", help="dataset root (default: built-in synthetic 40x10)")
    parser.add_argument("--out", default="dimension_curve.csv")
    parser.add_argument("--train-count", type=int, default=5, help="training samples per subject")
    parser.add_argument("--reducer", choices=["pca", "lda"], default="pca")
    parser.add_argument("--dims", type=lambda s: [int(v) for v in s.split(",")],
                        default=[5, 10, 20, 39, 60, 100, 150, 199])
    args = parser.parse_args()

    dataset = load_dataset(args.dataset) if args.dataset else synthetic_dataset(40, 10, jitter=1)
    rows = []
    for feature in ("sph", "msph", "pixels"):
        cached = extract_features(dataset, ExperimentConfig(feature=feature))
        for d in args.dims:
            config = ExperimentConfig(feature=feature, reducer=args.reducer, dims=d,
                                      classifier="nnc", protocol="fixed-split", n=args.train_count)
            record = run_pipeline(config, dataset=dataset, features=cached)
            rows.append({"feature": feature, "reducer": args.reducer,
                         "requested_dims": d, "dims": record.reduced_dims,
                         "accuracy": record.mean})
            print(f"{feature:>6} {args.reducer} dims={record.reduced_dims:>4}: {100 * record.mean:6.2f}%")

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
