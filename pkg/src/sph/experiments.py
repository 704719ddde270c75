"""Evaluation harness: split protocols, the recognition pipeline, parameter sweeps,
and extraction-time benchmarks.

The ``paper-nfold`` protocol is the inverted n-fold convention: each
subject's samples are cut into n contiguous parts and fold i trains on part
i while testing on the other n-1 parts. (The usual convention trains on the
larger side; the inverted one is kept under its own name to avoid
confusion.) ``loo`` holds one sample out per split; ``fixed-split`` trains
on the first n samples of every subject.

All splits are deterministic functions of the dataset ordering; no RNG is
involved anywhere in the harness.
"""

from __future__ import annotations

import logging
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from .classify import crc_classify_batch, evaluate, make_gallery, nnc_classify_batch
from .descriptor import (
    DEFAULT_MSPH_PARAMS,
    DEFAULT_SPH_PARAMS,
    SphParams,
    extract_msph,
    extract_sph,
)
from .imageio import Dataset, Sample, load_dataset
from .subspace import fit_lda, fit_pca, project

logger = logging.getLogger(__name__)

FEATURES = ("sph", "msph", "pixels")
REDUCERS = ("pca", "lda", "none")
CLASSIFIERS = ("nnc", "crc")
PROTOCOLS = ("paper-nfold", "loo", "fixed-split")


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to CLI exit code 2)."""


@dataclass(frozen=True)
class Split:
    train_indices: np.ndarray
    test_indices: np.ndarray


def kfold_splits(dataset: Dataset, n: int) -> list[Split]:
    """Inverted n-fold splits: per subject, part i trains and the rest tests.

    Each subject's samples (in dataset order) are divided into n contiguous,
    nearly equal parts (earlier parts take the remainder). Every subject
    needs at least n samples.
    """
    if n < 2:
        raise ValueError(f"need n >= 2 folds, got {n}")
    groups = dataset.indices_by_label()
    for label, idx in groups.items():
        if len(idx) < n:
            raise ValueError(
                f"subject {dataset.label_names.get(label, label)!r} has {len(idx)} samples, fewer than n={n}"
            )
    parts_per_label = {label: np.array_split(np.asarray(idx), n) for label, idx in groups.items()}
    splits = []
    for fold in range(n):
        train, test = [], []
        for label in sorted(parts_per_label):
            for j, part in enumerate(parts_per_label[label]):
                (train if j == fold else test).append(part)
        splits.append(
            Split(
                train_indices=np.sort(np.concatenate(train)),
                test_indices=np.sort(np.concatenate(test)),
            )
        )
    return splits


def leave_one_out_splits(dataset: Dataset) -> list[Split]:
    """One split per sample, holding that sample out as the test set."""
    n = len(dataset)
    if n < 2:
        raise ValueError("leave-one-out needs at least 2 samples")
    everything = np.arange(n, dtype=np.intp)
    return [
        Split(train_indices=np.delete(everything, i), test_indices=np.array([i], dtype=np.intp))
        for i in range(n)
    ]


def fixed_split(dataset: Dataset, train_count: int) -> Split:
    """Train on the first ``train_count`` samples of every subject, test on the rest."""
    if train_count < 1:
        raise ValueError(f"train_count must be >= 1, got {train_count}")
    train, test = [], []
    for label, idx in sorted(dataset.indices_by_label().items()):
        if len(idx) <= train_count:
            raise ValueError(
                f"subject {dataset.label_names.get(label, label)!r} has {len(idx)} samples, "
                f"needs more than train_count={train_count}"
            )
        train.extend(idx[:train_count])
        test.extend(idx[train_count:])
    return Split(
        train_indices=np.sort(np.array(train, dtype=np.intp)),
        test_indices=np.sort(np.array(test, dtype=np.intp)),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Full pipeline description; see README for the matching config-file keys."""

    dataset: str = ""
    feature: str = "sph"
    params: tuple[SphParams, ...] | None = None
    reducer: str = "pca"
    dims: int | None = None
    classifier: str = "nnc"
    crc_lambda: float = 1e-3
    protocol: str = "paper-nfold"
    n: int = 2
    jobs: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.feature not in FEATURES:
            raise ConfigError(f"feature must be one of {FEATURES}, got {self.feature!r}")
        if self.reducer not in REDUCERS:
            raise ConfigError(f"reducer must be one of {REDUCERS}, got {self.reducer!r}")
        if self.classifier not in CLASSIFIERS:
            raise ConfigError(f"classifier must be one of {CLASSIFIERS}, got {self.classifier!r}")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.crc_lambda <= 0:
            raise ConfigError(f"crc lambda must be positive, got {self.crc_lambda}")
        if self.protocol in ("paper-nfold", "fixed-split") and self.n < 1:
            raise ConfigError(f"protocol {self.protocol} needs n >= 1, got {self.n}")
        if self.dims is not None and self.dims < 1:
            raise ConfigError(f"dims must be >= 1, got {self.dims}")
        if self.feature == "sph" and self.params is not None and len(self.params) != 1:
            raise ConfigError("feature 'sph' takes exactly one parameter set")
        return self

    def resolved_params(self) -> tuple[SphParams, ...]:
        if self.feature == "pixels":
            return ()
        if self.params is not None:
            return tuple(self.params)
        return (DEFAULT_SPH_PARAMS,) if self.feature == "sph" else DEFAULT_MSPH_PARAMS

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items()}
        d["params"] = None if self.params is None else [p.to_dict() for p in self.params]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        params = d.get("params")
        if params is not None:
            if isinstance(params, dict):
                params = [params]
            try:
                d["params"] = tuple(SphParams.from_dict(p) for p in params)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad params entry: {exc}") from exc
        return cls(**d).validate()


@dataclass(frozen=True)
class ResultRecord:
    """Per-fold accuracies with their summary statistics and wall-clock timings."""

    fold_accuracies: tuple[float, ...]
    mean: float
    std: float
    extract_seconds: float
    eval_seconds: float
    feature_dims: int
    reduced_dims: int
    config: dict = field(default_factory=dict)

    @classmethod
    def from_folds(cls, accuracies, **kw) -> "ResultRecord":
        acc = tuple(float(a) for a in accuracies)
        return cls(
            fold_accuracies=acc,
            mean=float(np.mean(acc)),
            std=float(np.std(acc)),  # population std over folds
            **kw,
        )

    def format_mean_std(self) -> str:
        return f"{100.0 * self.mean:.2f}±{100.0 * self.std:.2f}%"


def _extract_one(args) -> np.ndarray:
    image, feature, params = args
    if feature == "pixels":
        return image.pixels.reshape(-1).astype(np.float64)
    if feature == "sph":
        return extract_sph(image, params[0]).values
    return extract_msph(image, params).values


def extract_features(dataset: Dataset, config: ExperimentConfig) -> np.ndarray:
    """Feature matrix (n_samples, dims) for the configured descriptor.

    ``config.jobs`` > 1 extracts across worker processes; results are
    independent of the worker count because extraction is pure per image.
    """
    params = config.resolved_params()
    tasks = [(s.image, config.feature, params) for s in dataset.samples]
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            chunk = max(1, len(tasks) // (4 * config.jobs))
            rows = list(pool.map(_extract_one, tasks, chunksize=chunk))
    else:
        rows = [_extract_one(t) for t in tasks]
    lengths = {r.shape[0] for r in rows}
    if len(lengths) > 1:
        raise ValueError(
            f"images produce inconsistent feature lengths {sorted(lengths)}; "
            "all dataset images must share dimensions"
        )
    return np.vstack(rows)


def make_splits(dataset: Dataset, config: ExperimentConfig) -> list[Split]:
    if config.protocol == "paper-nfold":
        return kfold_splits(dataset, config.n)
    if config.protocol == "loo":
        return leave_one_out_splits(dataset)
    if config.protocol == "fixed-split":
        return [fixed_split(dataset, config.n)]
    raise ConfigError(f"unknown protocol {config.protocol!r}")


def _fit_reducer(config: ExperimentConfig, x_train: np.ndarray, y_train: np.ndarray):
    if config.reducer == "none":
        return None
    n, dims = x_train.shape
    if config.reducer == "pca":
        d_max = min(n - 1, dims)
        d = min(config.dims, d_max) if config.dims else d_max
        if config.dims and d < config.dims:
            logger.debug("PCA dims capped at %d (requested %d)", d, config.dims)
        return fit_pca(x_train, d)
    c = np.unique(y_train).shape[0]
    d = min(config.dims, c - 1) if config.dims else c - 1
    if config.dims and d < config.dims:
        logger.debug("LDA dims capped at %d (requested %d)", d, config.dims)
    return fit_lda(x_train, y_train, d)


def _classify(config: ExperimentConfig, gallery, queries) -> list:
    if config.classifier == "nnc":
        return nnc_classify_batch(gallery, queries)
    return crc_classify_batch(gallery, queries, config.crc_lambda)


def run_pipeline(
    config: ExperimentConfig, dataset: Dataset | None = None, features: np.ndarray | None = None
) -> ResultRecord:
    """Extract features once, then fit/reduce/classify per split.

    ``dataset`` and ``features`` may be supplied to skip loading or
    extracting; otherwise the dataset root comes from the config.
    """
    config.validate()
    if dataset is None:
        dataset = load_dataset(config.dataset)
    labels = dataset.labels()

    t0 = time.perf_counter()
    x = extract_features(dataset, config) if features is None else np.asarray(features, dtype=np.float64)
    extract_seconds = time.perf_counter() - t0

    splits = make_splits(dataset, config)
    accuracies = []
    reduced_dims = x.shape[1]
    t0 = time.perf_counter()
    for i, split in enumerate(splits):
        try:
            x_train, y_train = x[split.train_indices], labels[split.train_indices]
            x_test, y_test = x[split.test_indices], labels[split.test_indices]
            model = _fit_reducer(config, x_train, y_train)
            if model is not None:
                x_train, x_test = project(model, x_train), project(model, x_test)
                reduced_dims = x_train.shape[1]
            gallery = make_gallery(x_train, y_train)
            predictions = _classify(config, gallery, x_test)
            accuracies.append(evaluate(predictions, y_test))
        except Exception as exc:
            raise RuntimeError(f"fold {i + 1}/{len(splits)} failed: {exc}") from exc
    eval_seconds = time.perf_counter() - t0

    return ResultRecord.from_folds(
        accuracies,
        extract_seconds=extract_seconds,
        eval_seconds=eval_seconds,
        feature_dims=x.shape[1],
        reduced_dims=reduced_dims,
        config=config.to_dict(),
    )


SWEEP_COLUMNS = (
    "block_size",
    "block_overlap",
    "cell_size",
    "cell_overlap",
    "k",
    "status",
    "dims",
    "fold_accuracies",
    "mean",
    "std",
    "extract_seconds",
    "eval_seconds",
)


def sweep(
    dataset: Dataset,
    base_config: ExperimentConfig,
    block_sizes,
    block_overlaps,
    cell_sizes=(2,),
    cell_overlaps=(0.5,),
    k_values=(1.0,),
) -> list[dict]:
    """Grid-evaluate single-scale geometries; one row per grid combination.

    Combinations whose geometry is invalid (fractional strides, cell larger
    than block) are kept as rows with ``status`` recording the reason, and
    are logged but not evaluated.
    """
    rows = []
    for b, bo, f, co, k in product(block_sizes, block_overlaps, cell_sizes, cell_overlaps, k_values):
        row = {"block_size": b, "block_overlap": bo, "cell_size": f, "cell_overlap": co, "k": k}
        try:
            params = SphParams(block_size=b, block_overlap=bo, cell_size=f, cell_overlap=co, k=k)
        except ValueError as exc:
            logger.warning("skipping invalid combination %s: %s", row, exc)
            row.update(status=f"skipped: {exc}", dims=None, fold_accuracies="", mean=None,
                       std=None, extract_seconds=None, eval_seconds=None)
            rows.append(row)
            continue
        config = replace(base_config, feature="sph", params=(params,))
        record = run_pipeline(config, dataset=dataset)
        row.update(
            status="ok",
            dims=record.feature_dims,
            fold_accuracies=";".join(repr(a) for a in record.fold_accuracies),
            mean=record.mean,
            std=record.std,
            extract_seconds=record.extract_seconds,
            eval_seconds=record.eval_seconds,
        )
        rows.append(row)
    return rows


def write_sweep_csv(path, rows) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


@dataclass(frozen=True)
class BenchRow:
    name: str
    feature: str
    dims: int
    images: int
    repetitions: int
    per_image_mean_s: float
    per_image_std_s: float
    per_image_min_s: float


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[BenchRow, ...]
    machine: dict

    def format_text(self) -> str:
        lines = [
            "machine: " + ", ".join(f"{k}={v}" for k, v in self.machine.items()),
            f"{'config':<12} {'dims':>6} {'per-image mean':>16} {'std':>12} {'min':>12}",
        ]
        for r in self.rows:
            lines.append(
                f"{r.name:<12} {r.dims:>6} {r.per_image_mean_s * 1e3:>13.3f} ms "
                f"{r.per_image_std_s * 1e3:>9.3f} ms {r.per_image_min_s * 1e3:>9.3f} ms"
            )
        return "\n".join(lines)


def write_bench_csv(path, report: BenchReport) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "feature", "dims", "images", "repetitions",
                         "per_image_mean_s", "per_image_std_s", "per_image_min_s"])
        for r in report.rows:
            writer.writerow([r.name, r.feature, r.dims, r.images, r.repetitions,
                             repr(r.per_image_mean_s), repr(r.per_image_std_s), repr(r.per_image_min_s)])


def bench_extraction(dataset: Dataset, feature_configs, repetitions: int = 5) -> BenchReport:
    """Time full extraction passes over the dataset for each feature config.

    ``feature_configs`` is a list of (name, feature, params) with feature in
    {sph, msph, pixels}. One untimed warm-up pass runs first; per-image
    statistics are over ``repetitions`` timed passes.
    """
    if repetitions < 3:
        raise ValueError(f"need at least 3 repetitions, got {repetitions}")
    rows = []
    n = len(dataset)
    for name, feature, params in feature_configs:
        config = ExperimentConfig(feature=feature, params=None if params is None else tuple(params))
        x = extract_features(dataset, config)  # warm-up, excluded from timing
        times = []
        for _ in range(repetitions):
            t0 = time.perf_counter()
            extract_features(dataset, config)
            times.append((time.perf_counter() - t0) / n)
        rows.append(
            BenchRow(
                name=name,
                feature=feature,
                dims=x.shape[1],
                images=n,
                repetitions=repetitions,
                per_image_mean_s=float(np.mean(times)),
                per_image_std_s=float(np.std(times)),
                per_image_min_s=float(min(times)),
            )
        )
    machine = {
        "platform": platform.platform(),
        "processor": platform.processor() or "unknown",
        "python": platform.python_version(),
        "numpy": np.__version__,
        "cores": os.cpu_count(),
    }
    return BenchReport(rows=tuple(rows), machine=machine)


def permute_labels(dataset: Dataset, seed: int) -> Dataset:
    """Return the dataset with its label vector deterministically shuffled.

    The label multiset is preserved (every id keeps the same sample count),
    which severs the feature-label association for chance-level checks.
    """
    rng = np.random.default_rng(np.random.SeedSequence([987654321, seed]))
    labels = dataset.labels()
    permuted = labels[rng.permutation(len(labels))]
    samples = tuple(
        Sample(s.image, int(permuted[i]), s.path) for i, s in enumerate(dataset.samples)
    )
    return Dataset(samples=samples, label_names=dict(dataset.label_names))
