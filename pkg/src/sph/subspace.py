"""PCA and LDA dimensionality reduction for descriptor vectors.

PCA is fit through an SVD of the centered sample matrix, which solves the
n x n problem when the feature dimension dwarfs the sample count (the usual
regime here: hundreds of samples, 735-1485 feature dims). LDA follows the
classic small-sample recipe: project to n_samples - n_classes PCA dims
first, then solve the between/within generalized eigenproblem with a
trace-scaled ridge on the within-class scatter.

Component signs are fixed by making each row's largest-magnitude entry
positive, so fitted models are reproducible.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)

MODEL_MAGIC = b"sph-model v1"


@dataclass(frozen=True)
class PcaModel:
    """Mean vector plus orthonormal principal axes (rows), eigenvalues descending."""

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray

    @property
    def input_dims(self) -> int:
        return self.mean.shape[0]

    @property
    def output_dims(self) -> int:
        return self.components.shape[0]


@dataclass(frozen=True)
class LdaModel:
    """PCA pre-projection followed by discriminant directions (<= n_classes - 1 rows)."""

    pca_stage: PcaModel
    lda_projection: np.ndarray

    @property
    def mean(self) -> np.ndarray:
        return self.pca_stage.mean

    @property
    def input_dims(self) -> int:
        return self.pca_stage.input_dims

    @property
    def output_dims(self) -> int:
        return self.lda_projection.shape[0]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip rows so each row's largest-magnitude entry is positive."""
    if components.size == 0:
        return components
    pivot = np.abs(components).argmax(axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), pivot])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def fit_pca(x: np.ndarray, d: int) -> PcaModel:
    """Fit a d-component PCA on an (n_samples, dims) matrix.

    Requires 1 <= d <= min(n_samples - 1, dims). An all-identical sample
    matrix yields a zero-variance model (with a warning) whose components
    are the first d coordinate axes.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError(f"need a 2-D matrix with >= 2 samples, got shape {x.shape}")
    n, dims = x.shape
    if not 1 <= d <= min(n - 1, dims):
        raise ValueError(f"d={d} out of range [1, {min(n - 1, dims)}] for {n}x{dims} data")
    mean = x.mean(axis=0)
    centered = x - mean
    if not centered.any():
        logger.warning("all %d samples identical; returning zero-variance PCA model", n)
        return PcaModel(mean=mean, components=np.eye(d, dims), eigenvalues=np.zeros(d))
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    eigenvalues = np.clip(s * s / (n - 1), 0.0, None)
    return PcaModel(mean=mean, components=_fix_signs(vt[:d]), eigenvalues=eigenvalues[:d])


def fit_lda(x: np.ndarray, labels, d: int | None = None) -> LdaModel:
    """Fit discriminant directions on labeled samples.

    Steps: center, PCA to n_samples - n_classes dims (singularity guard),
    then maximize the between/within scatter ratio via the symmetric
    generalized eigenproblem. The within-class scatter is regularized with
    gamma*I, gamma = 1e-6 * trace/dim (with a tiny absolute floor when the
    within-class scatter vanishes entirely).

    ``d`` defaults to n_classes - 1 and is additionally capped by the PCA
    stage width. One sample per class (n == n_classes) leaves no within-class
    scatter to estimate and raises ValueError.
    """
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] != labels.shape[0]:
        raise ValueError("x must be (n_samples, dims) with one label per sample")
    classes = np.unique(labels)
    n, dims = x.shape
    c = classes.shape[0]
    if c < 2:
        raise ValueError("LDA needs at least two classes")
    if n == c:
        raise ValueError("every class has a single sample; within-class scatter is empty")
    if d is None:
        d = c - 1
    if not 1 <= d <= c - 1:
        raise ValueError(f"d={d} out of range [1, {c - 1}] for {c} classes")

    pca_d = min(n - c, n - 1, dims)
    pca = fit_pca(x, pca_d)
    z = project(pca, x)

    grand_mean = z.mean(axis=0)
    s_w = np.zeros((pca_d, pca_d))
    s_b = np.zeros((pca_d, pca_d))
    for cls in classes:
        zc = z[labels == cls]
        mu = zc.mean(axis=0)
        dev = zc - mu
        s_w += dev.T @ dev
        gap = (mu - grand_mean)[:, None]
        s_b += zc.shape[0] * (gap @ gap.T)

    gamma = 1e-6 * np.trace(s_w) / pca_d
    if gamma <= 0.0:
        gamma = 1e-12 * max(1.0, np.trace(s_b) / pca_d)
    eigenvalues, eigenvectors = scipy.linalg.eigh(s_b, s_w + gamma * np.eye(pca_d))
    order = np.argsort(eigenvalues)[::-1]
    d_eff = min(d, pca_d)
    if d_eff < d:
        logger.warning("LDA output capped at %d dims by the PCA stage (requested %d)", d_eff, d)
    projection = _fix_signs(eigenvectors[:, order[:d_eff]].T)
    return LdaModel(pca_stage=pca, lda_projection=projection)


def project(model, x: np.ndarray) -> np.ndarray:
    """Map one vector or an (n, dims) batch through a fitted model."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != model.input_dims:
        raise ValueError(f"expected {model.input_dims}-dim input, got {x.shape[1]}")
    if isinstance(model, PcaModel):
        out = (x - model.mean) @ model.components.T
    elif isinstance(model, LdaModel):
        out = project(model.pca_stage, x) @ model.lda_projection.T
    else:
        raise TypeError(f"cannot project through {type(model).__name__}")
    return out[0] if single else out


def _write_arrays(fh, arrays: dict[str, np.ndarray], kind: str) -> None:
    header = {
        "kind": kind,
        "arrays": [{"name": k, "shape": list(v.shape)} for k, v in arrays.items()],
    }
    fh.write(MODEL_MAGIC + b" " + json.dumps(header).encode("ascii") + b"\n")
    for v in arrays.values():
        fh.write(np.ascontiguousarray(v, dtype=np.float64).tobytes())


def save_model(path, model) -> None:
    """Dump a fitted model as flat binary: one JSON header line, then raw float64 arrays."""
    path = Path(path)
    with open(path, "wb") as fh:
        if isinstance(model, PcaModel):
            _write_arrays(
                fh,
                {"mean": model.mean, "eigenvalues": model.eigenvalues, "components": model.components},
                kind="pca",
            )
        elif isinstance(model, LdaModel):
            p = model.pca_stage
            _write_arrays(
                fh,
                {
                    "mean": p.mean,
                    "eigenvalues": p.eigenvalues,
                    "components": p.components,
                    "lda_projection": model.lda_projection,
                },
                kind="lda",
            )
        else:
            raise TypeError(f"cannot serialize {type(model).__name__}")


def load_model(path):
    """Load a model written by save_model."""
    data = Path(path).read_bytes()
    newline = data.index(b"\n")
    header_line = data[:newline]
    if not header_line.startswith(MODEL_MAGIC + b" "):
        raise ValueError(f"{path} is not a serialized model (bad magic)")
    header = json.loads(header_line[len(MODEL_MAGIC) + 1 :])
    arrays = {}
    offset = newline + 1
    for entry in header["arrays"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        end = offset + 8 * count
        arrays[entry["name"]] = np.frombuffer(data[offset:end], dtype=np.float64).reshape(entry["shape"]).copy()
        offset = end
    pca = PcaModel(mean=arrays["mean"], eigenvalues=arrays["eigenvalues"], components=arrays["components"])
    if header["kind"] == "pca":
        return pca
    if header["kind"] == "lda":
        return LdaModel(pca_stage=pca, lda_projection=arrays["lda_projection"])
    raise ValueError(f"unknown model kind {header['kind']!r} in {path}")
