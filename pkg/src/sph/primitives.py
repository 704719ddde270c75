"""The 15 shape primitives and per-cell template matching.

A cell is a square of 4^n pixels split into four quadrant bins (ordered
top-left, top-right, bottom-left, bottom-right). The 14 non-flat primitives
are all the non-constant sign patterns over the four bins with weights in
{-1, +1}; the 15th primitive is the virtual "flat" pattern for cells without
shape information.

Matching scores are computed on mean-centered bin sums, so a uniform cell
scores exactly zero against every template. Because every template's
negation is also in the set, the maximum score over the 14 templates is
always >= 0. A cell whose maximum score M does not exceed the loose factor
``eps`` is classified flat and votes with weight ``eps - M + 1``; otherwise
it votes for the highest-scoring template (lowest index on ties) with
weight M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imageio import IntegralImage

N_TEMPLATES = 14
FLAT_INDEX = 15
N_BINS = 15


@dataclass(frozen=True)
class ShapePrimitiveTemplate:
    """One signed 2x2-bin weight pattern; ``index`` runs 1..14."""

    index: int
    weights: tuple[int, int, int, int]

    @property
    def norm(self) -> int:
        """Largest absolute weight, the score normalizer (1 for sign patterns)."""
        return max(abs(w) for w in self.weights)

    def negated(self) -> tuple[int, int, int, int]:
        return tuple(-w for w in self.weights)


def generate_templates() -> list[ShapePrimitiveTemplate]:
    """All 14 non-constant {-1,+1} sign patterns over the four bins.

    Enumeration is binary-counting order of (h1, h2, h3, h4) with +1 as bit 0
    and -1 as bit 1, skipping the two constant patterns; the template index is
    its 1-based rank in that order.
    """
    out = []
    for v in range(1, 15):
        bits = ((v >> 3) & 1, (v >> 2) & 1, (v >> 1) & 1, v & 1)
        weights = tuple(1 if b == 0 else -1 for b in bits)
        out.append(ShapePrimitiveTemplate(index=v, weights=weights))
    return out


TEMPLATES: tuple[ShapePrimitiveTemplate, ...] = tuple(generate_templates())

# (4, 14) float64 matrix of weights / norm, one column per template.
_WEIGHTS_BY_BIN = np.array([t.weights for t in TEMPLATES], dtype=np.float64).T / np.array(
    [t.norm for t in TEMPLATES], dtype=np.float64
)


def template_weight_matrix(templates=TEMPLATES) -> np.ndarray:
    """Norm-scaled weights as a (4, n_templates) float64 matrix."""
    if templates is TEMPLATES:
        return _WEIGHTS_BY_BIN
    w = np.array([t.weights for t in templates], dtype=np.float64).T
    return w / np.array([t.norm for t in templates], dtype=np.float64)


@dataclass(frozen=True)
class BinSums:
    """Exact gray-value sums of the four cell quadrants (TL, TR, BL, BR)."""

    p1: int
    p2: int
    p3: int
    p4: int

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.p3, self.p4], dtype=np.float64)


@dataclass(frozen=True)
class CellMatch:
    """Outcome of matching one cell: chosen primitive, its histogram vote, and max score."""

    primitive_index: int
    vote: float
    max_score: float


def bin_sums(ii: IntegralImage, cell_x: int, cell_y: int, cell_size: int) -> BinSums:
    """Quadrant sums of the cell at (cell_x, cell_y); cell_size must be even."""
    f = cell_size
    if f < 2 or f % 2:
        raise ValueError(f"cell size must be even and >= 2, got {f}")
    if cell_x < 0 or cell_y < 0 or cell_x + f > ii.width or cell_y + f > ii.height:
        raise ValueError(
            f"cell ({cell_x},{cell_y}) of size {f} out of bounds for {ii.width}x{ii.height} image"
        )
    q = f // 2
    return BinSums(
        p1=ii.rect_sum(cell_x, cell_y, q, q),
        p2=ii.rect_sum(cell_x + q, cell_y, q, q),
        p3=ii.rect_sum(cell_x, cell_y + q, q, q),
        p4=ii.rect_sum(cell_x + q, cell_y + q, q, q),
    )


def match_scores(p: BinSums, templates=TEMPLATES) -> np.ndarray:
    """Scores of one cell against each template: sum_i (P_i - mean(P)) * h_i / norm.

    Bin sums are mean-centered first so constant cells score zero everywhere.
    With integer sums the scores are exact multiples of 1/4, so float64
    arithmetic is exact.
    """
    values = p.as_array() if isinstance(p, BinSums) else np.asarray(p, dtype=np.float64)
    centered = values - values.mean()
    return centered @ template_weight_matrix(templates)


def select_primitive(scores, eps: float) -> CellMatch:
    """Pick the cell's primitive from its score vector.

    If max(scores) exceeds ``eps`` the cell votes for the argmax template
    (lowest index on ties) with weight max(scores); otherwise it is flat
    (index 15) with weight ``eps - max(scores) + 1``.
    """
    if eps < 0:
        raise ValueError(f"loose factor must be nonnegative, got {eps}")
    scores = np.asarray(scores, dtype=np.float64)
    m = float(scores.max())
    if m > eps:
        return CellMatch(primitive_index=int(scores.argmax()) + 1, vote=m, max_score=m)
    return CellMatch(primitive_index=FLAT_INDEX, vote=eps - m + 1.0, max_score=m)
