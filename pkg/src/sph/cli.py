"""Command-line surface: extract, eval, sweep, bench, gen-synth.

Exit codes: 0 success, 1 runtime failure, 2 usage/configuration error.
Options may come from a JSON config file (--config) whose keys mirror the
experiment-config fields; explicit flags override config-file values.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .descriptor import save_descriptors
from .experiments import (
    ConfigError,
    ExperimentConfig,
    bench_extraction,
    extract_features,
    make_splits,
    run_pipeline,
    sweep,
    write_bench_csv,
    write_sweep_csv,
)
from .imageio import load_dataset
from .synth import generate_synthetic_dataset

logger = logging.getLogger(__name__)


def _parse_float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _parse_int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _add_pipeline_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its keys")
    parser.add_argument("--dataset", help="dataset root directory")
    parser.add_argument("--feature", choices=["sph", "msph", "pixels"])
    parser.add_argument("--reducer", choices=["pca", "lda", "none"])
    parser.add_argument("--dims", type=int, help="retained dims after reduction")
    parser.add_argument("--classifier", choices=["nnc", "crc"])
    parser.add_argument("--lambda", dest="crc_lambda", type=float, help="CRC ridge weight")
    parser.add_argument("--protocol", choices=["paper-nfold", "loo", "fixed-split"])
    parser.add_argument("--n", type=int, help="fold count (paper-nfold) or per-subject train count (fixed-split)")
    parser.add_argument("--jobs", type=int, help="extraction worker processes (default: all cores)")


def _load_config(args) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    for key in ("dataset", "feature", "reducer", "dims", "classifier", "crc_lambda", "protocol", "n", "jobs"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    data.setdefault("jobs", os.cpu_count() or 1)
    config = ExperimentConfig.from_dict(data)
    if not config.dataset:
        raise ConfigError("no dataset given (use --dataset or a config file)")
    if not Path(config.dataset).is_dir():
        raise ConfigError(f"dataset root not found: {config.dataset}")
    return config


def _check_protocol(config: ExperimentConfig, dataset) -> None:
    smallest = dataset.min_samples_per_label()
    if config.protocol == "paper-nfold" and (config.n < 2 or config.n > smallest):
        raise ConfigError(
            f"paper-nfold with n={config.n} is invalid: smallest subject has {smallest} samples"
        )
    if config.protocol == "fixed-split" and config.n >= smallest:
        raise ConfigError(
            f"fixed-split with n={config.n} is invalid: smallest subject has {smallest} samples"
        )


def cmd_extract(args) -> int:
    config = _load_config(args)
    if config.feature == "pixels":
        raise ConfigError("extract writes descriptor CSVs; use --feature sph or msph")
    dataset = load_dataset(config.dataset)
    features = extract_features(dataset, config)
    records = (
        (s.label, s.path, features[i]) for i, s in enumerate(dataset.samples)
    )
    save_descriptors(args.out, records, config.resolved_params())
    print(f"wrote {len(dataset)} descriptors of {features.shape[1]} dims to {args.out}")
    return 0


def cmd_eval(args) -> int:
    config = _load_config(args)
    dataset = load_dataset(config.dataset)
    _check_protocol(config, dataset)
    record = run_pipeline(config, dataset=dataset)
    splits = make_splits(dataset, config)
    print(f"dataset: {config.dataset} ({len(dataset)} samples, {dataset.n_classes} subjects)")
    print(
        f"pipeline: {config.feature} + {config.reducer}"
        + (f"({record.reduced_dims} dims)" if config.reducer != "none" else "")
        + f" + {config.classifier}, protocol {config.protocol}"
    )
    if config.protocol == "paper-nfold":
        sizes = ", ".join(
            f"fold {i + 1}: train={len(s.train_indices)} test={len(s.test_indices)}"
            for i, s in enumerate(splits)
        )
        print(f"splits ({config.n}-fold, train on one part): {sizes}")
    print("per-fold accuracy: " + " ".join(f"{100 * a:.2f}%" for a in record.fold_accuracies))
    print(f"accuracy {record.format_mean_std()}")
    if args.out:
        _write_eval_csv(args.out, config, record)
        print(f"wrote results to {args.out}")
    return 0


def _write_eval_csv(path, config: ExperimentConfig, record) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "reducer", "classifier", "protocol", "n", "dims",
                         "reduced_dims", "fold_accuracies", "mean", "std",
                         "extract_seconds", "eval_seconds"])
        writer.writerow([
            config.feature, config.reducer, config.classifier, config.protocol, config.n,
            record.feature_dims, record.reduced_dims,
            ";".join(repr(a) for a in record.fold_accuracies),
            repr(record.mean), repr(record.std),
            repr(record.extract_seconds), repr(record.eval_seconds),
        ])


def cmd_sweep(args) -> int:
    config = _load_config(args)
    dataset = load_dataset(config.dataset)
    _check_protocol(config, dataset)
    rows = sweep(
        dataset,
        config,
        block_sizes=args.blocks,
        block_overlaps=args.block_overlaps,
        cell_sizes=args.cells,
        cell_overlaps=args.cell_overlaps,
        k_values=args.k_values,
    )
    write_sweep_csv(args.out, rows)
    evaluated = [r for r in rows if r["status"] == "ok"]
    print(f"swept {len(rows)} combinations ({len(evaluated)} evaluated) -> {args.out}")
    for row in sorted(evaluated, key=lambda r: -r["mean"])[:5]:
        print(
            f"  block={row['block_size']} ov={row['block_overlap']} cell={row['cell_size']} "
            f"ov={row['cell_overlap']} k={row['k']}: {100 * row['mean']:.2f}% (dims {row['dims']})"
        )
    return 0


def cmd_bench(args) -> int:
    config = _load_config(args)
    dataset = load_dataset(config.dataset)
    configs = [
        ("sph", "sph", None),
        ("msph", "msph", None),
        ("pixels", "pixels", None),
    ]
    report = bench_extraction(dataset, configs, repetitions=args.reps)
    print(report.format_text())
    if args.out:
        write_bench_csv(args.out, report)
        print(f"wrote benchmark CSV to {args.out}")
    return 0


def cmd_gen_synth(args) -> int:
    out = generate_synthetic_dataset(
        args.out, classes=args.classes, samples=args.samples, jitter=args.jitter, image_size=args.size
    )
    print(f"wrote {args.classes * args.samples} images ({args.classes} subjects) to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sph",
        description="Shape-primitive histogram descriptors and recognition experiments.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract descriptors for a dataset into a CSV")
    _add_pipeline_options(p)
    p.add_argument("--out", required=True, help="output descriptor CSV")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("eval", help="run the recognition pipeline and report accuracy")
    _add_pipeline_options(p)
    p.add_argument("--out", help="optional results CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid-evaluate block/cell geometries")
    _add_pipeline_options(p)
    p.add_argument("--out", required=True, help="output sweep CSV")
    p.add_argument("--blocks", type=_parse_int_list, default=[4, 6, 8, 10])
    p.add_argument("--block-overlaps", type=_parse_float_list, default=[0.0, 0.25, 0.5, 0.75])
    p.add_argument("--cells", type=_parse_int_list, default=[2])
    p.add_argument("--cell-overlaps", type=_parse_float_list, default=[0.5])
    p.add_argument("--k-values", type=_parse_float_list, default=[1.0])
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="time descriptor extraction")
    _add_pipeline_options(p)
    p.add_argument("--out", help="optional benchmark CSV")
    p.add_argument("--reps", type=int, default=5, help="timed repetitions (>= 3)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-synth", help="generate a deterministic synthetic dataset")
    p.add_argument("--out", required=True, help="output dataset directory (must be empty)")
    p.add_argument("--classes", type=int, default=40)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--jitter", type=int, default=1, help="max |translation| px; also scales noise (0 = identical samples)")
    p.add_argument("--size", type=int, default=32, help="square image size in pixels")
    p.set_defaults(func=cmd_gen_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        logger.debug("unhandled failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
