"""Nearest-neighbor and collaborative-representation classifiers.

NNC predicts the label of the Euclidean-nearest gallery vector (ties go to
the lowest sample index). CRC codes the query over the whole gallery with a
ridge penalty and predicts the class whose coefficients reconstruct it with
the smallest regularized residual ||y - X_c a_c|| / ||a_c|| (ties go to the
lowest class id). Gallery columns are L2-normalized for CRC coding only;
NNC operates on the raw feature vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class Gallery:
    """Training vectors (n, d), their labels, and per-class sample indices."""

    vectors: np.ndarray
    labels: np.ndarray
    class_indices: dict[int, np.ndarray]

    @property
    def dims(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]


def make_gallery(vectors: np.ndarray, labels) -> Gallery:
    vectors = np.asarray(vectors, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    if vectors.ndim != 2 or vectors.shape[0] < 1:
        raise ValueError(f"gallery needs a non-empty (n, d) matrix, got shape {vectors.shape}")
    if labels.shape != (vectors.shape[0],):
        raise ValueError("need exactly one label per gallery vector")
    class_indices = {
        int(c): np.flatnonzero(labels == c) for c in np.unique(labels)
    }
    return Gallery(vectors=vectors, labels=labels, class_indices=class_indices)


@dataclass(frozen=True)
class Prediction:
    """Predicted label with its score (distance or residual, lower is better)."""

    label: int
    score: float
    class_scores: dict[int, float] | None = None


def _check_query(gallery: Gallery, query: np.ndarray) -> np.ndarray:
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (gallery.dims,):
        raise ValueError(f"query shape {query.shape} does not match gallery dims {gallery.dims}")
    return query


def nnc_classify(gallery: Gallery, query: np.ndarray) -> Prediction:
    """Label of the Euclidean-nearest gallery vector; lowest index wins ties."""
    query = _check_query(gallery, query)
    diff = gallery.vectors - query
    sq = np.einsum("ij,ij->i", diff, diff)
    i = int(sq.argmin())
    return Prediction(label=int(gallery.labels[i]), score=float(np.sqrt(sq[i])))


def nnc_classify_batch(gallery: Gallery, queries: np.ndarray) -> list[Prediction]:
    return [nnc_classify(gallery, q) for q in np.asarray(queries, dtype=np.float64)]


class CrcSolver:
    """Ridge coding over a fixed gallery, factored once and reused per query."""

    def __init__(self, gallery: Gallery, lam: float):
        if lam <= 0:
            raise ValueError(f"lambda must be positive, got {lam}")
        self.gallery = gallery
        self.lam = lam
        x = gallery.vectors.T.copy()  # columns = samples
        norms = np.sqrt((x * x).sum(axis=0))
        norms[norms == 0] = 1.0
        self.x = x / norms
        n = x.shape[1]
        gram = self.x.T @ self.x + lam * np.eye(n)
        self._factor = scipy.linalg.cho_factor(gram)

    def coefficients(self, query: np.ndarray) -> np.ndarray:
        """Closed-form ridge coefficients: argmin ||y - X a||^2 + lam ||a||^2."""
        query = _check_query(self.gallery, query)
        return scipy.linalg.cho_solve(self._factor, self.x.T @ query)

    def predict(self, query: np.ndarray) -> Prediction:
        query = _check_query(self.gallery, query)
        alpha = self.coefficients(query)
        class_scores: dict[int, float] = {}
        best_label, best_score = None, np.inf
        for label in sorted(self.gallery.class_indices):
            idx = self.gallery.class_indices[label]
            residual = np.linalg.norm(query - self.x[:, idx] @ alpha[idx])
            weight = np.linalg.norm(alpha[idx])
            score = residual / weight if weight > 0 else np.inf
            class_scores[label] = float(score)
            if score < best_score:
                best_label, best_score = label, score
        if best_label is None:  # all weights zero: deterministic fallback
            best_label = min(self.gallery.class_indices)
            best_score = np.inf
        return Prediction(label=int(best_label), score=float(best_score), class_scores=class_scores)


def crc_classify(gallery: Gallery, query: np.ndarray, lam: float = 1e-3) -> Prediction:
    """One-shot CRC prediction; use CrcSolver directly to amortize the factorization."""
    return CrcSolver(gallery, lam).predict(query)


def crc_classify_batch(gallery: Gallery, queries: np.ndarray, lam: float = 1e-3) -> list[Prediction]:
    solver = CrcSolver(gallery, lam)
    return [solver.predict(q) for q in np.asarray(queries, dtype=np.float64)]


def evaluate(predictions, truth) -> float:
    """Fraction of exact label matches between predictions and ground truth."""
    labels = [p.label if isinstance(p, Prediction) else int(p) for p in predictions]
    truth = [int(t) for t in truth]
    if len(labels) != len(truth):
        raise ValueError(f"got {len(labels)} predictions for {len(truth)} truths")
    if not labels:
        raise ValueError("cannot evaluate an empty prediction list")
    return sum(p == t for p, t in zip(labels, truth)) / len(labels)
