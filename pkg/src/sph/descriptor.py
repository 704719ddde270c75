"""SPH and MSPH descriptor assembly.

An image is tiled by overlapping square blocks; each block is tiled by
overlapping even-sized cells. Every cell votes for one of the 15 shape
primitives and the votes are accumulated into a per-block 15-bin weighted
histogram, which is L2-normalized. The SPH vector is the concatenation of
all block histograms (blocks row-major, 15 bins innermost); the multi-scale
variant (MSPH) concatenates SPH vectors extracted with several block/cell
geometries from the same image.

Extraction here runs on the integral image with vectorized numpy. The per
block/per cell reference path (``block_histogram``) produces bit-identical
histograms; the test suite holds both against an independent naive
implementation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .imageio import GrayImage, IntegralImage, integral
from .primitives import FLAT_INDEX, N_BINS, bin_sums, match_scores, select_primitive, template_weight_matrix

ALLOWED_BLOCK_OVERLAPS = (0.0, 0.25, 0.5, 0.75)
ALLOWED_CELL_OVERLAPS = (0.0, 0.5)


def epsilon(k: float, cell_size: int) -> float:
    """Loose factor for a cell of ``cell_size`` pixels: k * (cell_size/2)**2."""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    if cell_size < 2 or cell_size % 2:
        raise ValueError(f"cell size must be even and >= 2, got {cell_size}")
    return k * (cell_size / 2) ** 2


@dataclass(frozen=True)
class SphParams:
    """Block/cell geometry and loose-factor coefficient of one SPH scale.

    ``block_overlap`` must be one of {0, 1/4, 1/2, 3/4} and ``cell_overlap``
    one of {0, 1/2}; the implied strides ``size * (1 - overlap)`` must come
    out as positive integers.
    """

    block_size: int
    block_overlap: float = 0.5
    cell_size: int = 2
    cell_overlap: float = 0.5
    k: float = 1.0

    def __post_init__(self):
        if self.block_size < 1:
            raise ValueError(f"block size must be positive, got {self.block_size}")
        if self.block_overlap not in ALLOWED_BLOCK_OVERLAPS:
            raise ValueError(
                f"block overlap must be one of {ALLOWED_BLOCK_OVERLAPS}, got {self.block_overlap}"
            )
        if self.cell_overlap not in ALLOWED_CELL_OVERLAPS:
            raise ValueError(
                f"cell overlap must be one of {ALLOWED_CELL_OVERLAPS}, got {self.cell_overlap}"
            )
        if self.cell_size < 2 or self.cell_size % 2:
            raise ValueError(f"cell size must be even and >= 2, got {self.cell_size}")
        if self.cell_size > self.block_size:
            raise ValueError(
                f"cell size {self.cell_size} exceeds block size {self.block_size}"
            )
        if self.k < 0:
            raise ValueError(f"k must be nonnegative, got {self.k}")
        for name, size, overlap in (
            ("block", self.block_size, self.block_overlap),
            ("cell", self.cell_size, self.cell_overlap),
        ):
            stride = size * (1.0 - overlap)
            if stride < 1 or stride != int(stride):
                raise ValueError(
                    f"{name} stride {size}*(1-{overlap}) = {stride} is not a positive integer"
                )

    @property
    def block_stride(self) -> int:
        return int(self.block_size * (1.0 - self.block_overlap))

    @property
    def cell_stride(self) -> int:
        return int(self.cell_size * (1.0 - self.cell_overlap))

    @property
    def eps(self) -> float:
        return epsilon(self.k, self.cell_size)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SphParams":
        return cls(**d)


# Table-style defaults: fine scale for SPH, plus two coarser scales for MSPH.
DEFAULT_SPH_PARAMS = SphParams(block_size=8, block_overlap=0.5, cell_size=2, cell_overlap=0.5, k=1.0)
DEFAULT_MSPH_PARAMS = (
    DEFAULT_SPH_PARAMS,
    SphParams(block_size=16, block_overlap=0.5, cell_size=4, cell_overlap=0.5, k=1.0),
    SphParams(block_size=32, block_overlap=0.5, cell_size=8, cell_overlap=0.5, k=1.0),
)


def grid_positions(extent: int, window: int, stride: int) -> np.ndarray:
    """Window offsets 0, stride, 2*stride, ... with offset + window <= extent.

    Partial windows at the border are discarded, so the count is
    floor((extent - window) / stride) + 1.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if window > extent:
        raise ValueError(f"window {window} larger than extent {extent}")
    return np.arange(0, extent - window + 1, stride, dtype=np.intp)


@dataclass(frozen=True)
class SphDescriptor:
    """Concatenated per-block histograms plus the geometry that produced them.

    ``values`` is the flat feature vector. For each scale, ``params[i]`` holds
    the geometry and ``grids[i]`` the (n_blocks_y, n_blocks_x) block grid; the
    scale's segment is laid out blocks row-major with the 15 bins innermost.
    """

    values: np.ndarray
    params: tuple[SphParams, ...]
    grids: tuple[tuple[int, int], ...]
    image_dims: tuple[int, int]

    @property
    def dims(self) -> int:
        return self.values.shape[0]


def descriptor_dims(image_dims: tuple[int, int], params) -> int:
    """Feature length for an (height, width) image without extracting it."""
    if isinstance(params, SphParams):
        params = (params,)
    h, w = image_dims
    total = 0
    for p in params:
        nby = len(grid_positions(h, p.block_size, p.block_stride))
        nbx = len(grid_positions(w, p.block_size, p.block_stride))
        total += nby * nbx * N_BINS
    return total


def _quadrant_sum_grid(sums: np.ndarray, xs: np.ndarray, ys: np.ndarray, q: int, dx: int, dy: int) -> np.ndarray:
    """Exact q x q sums at every (y + dy, x + dx) for y in ys, x in xs."""
    x0 = xs + dx
    y0 = ys + dy
    # Grouped so both uint64 differences are non-negative.
    rows = sums[np.ix_(y0 + q, x0 + q)] - sums[np.ix_(y0, x0 + q)]
    left = sums[np.ix_(y0 + q, x0)] - sums[np.ix_(y0, x0)]
    return (rows - left).astype(np.float64)


def _match_grid(ii: IntegralImage, xs: np.ndarray, ys: np.ndarray, cell_size: int, eps: float):
    """Primitive choice and vote for the cells anchored at ys x xs.

    Returns (bin0, vote): 0-based histogram bin (14 = flat) and vote weight,
    each shaped (len(ys), len(xs)).
    """
    q = cell_size // 2
    p = np.stack(
        [
            _quadrant_sum_grid(ii.sums, xs, ys, q, 0, 0),
            _quadrant_sum_grid(ii.sums, xs, ys, q, q, 0),
            _quadrant_sum_grid(ii.sums, xs, ys, q, 0, q),
            _quadrant_sum_grid(ii.sums, xs, ys, q, q, q),
        ],
        axis=-1,
    )
    centered = p - p.mean(axis=-1, keepdims=True)
    scores = centered @ template_weight_matrix()
    m = scores.max(axis=-1)
    best = scores.argmax(axis=-1)
    flat = m <= eps
    bin0 = np.where(flat, FLAT_INDEX - 1, best)
    vote = np.where(flat, eps - m + 1.0, m)
    return bin0, vote


def _normalize_blocks(hists: np.ndarray) -> np.ndarray:
    """L2-normalize the last axis; every block's vote mass is strictly positive."""
    norms = np.sqrt((hists * hists).sum(axis=-1, keepdims=True))
    return hists / norms


def block_histogram(
    ii: IntegralImage, block_x: int, block_y: int, params: SphParams, eps: float, normalized: bool = True
) -> np.ndarray:
    """15-bin weighted histogram of one block's cells.

    Cell-by-cell reference path over the integral image; produces the same
    values as the batched extractor.
    """
    b = params.block_size
    if block_x < 0 or block_y < 0 or block_x + b > ii.width or block_y + b > ii.height:
        raise ValueError(
            f"block ({block_x},{block_y}) of size {b} out of bounds for {ii.width}x{ii.height} image"
        )
    offsets = grid_positions(b, params.cell_size, params.cell_stride)
    hist = np.zeros(N_BINS, dtype=np.float64)
    for cy in offsets:
        for cx in offsets:
            p = bin_sums(ii, block_x + int(cx), block_y + int(cy), params.cell_size)
            match = select_primitive(match_scores(p), eps)
            hist[match.primitive_index - 1] += match.vote
    return _normalize_blocks(hist) if normalized else hist


def block_histograms(img: GrayImage, params: SphParams, normalized: bool = True) -> np.ndarray:
    """All block histograms of an image as an (n_blocks_y, n_blocks_x, 15) array."""
    h, w = img.height, img.width
    if h < params.block_size or w < params.block_size:
        raise ValueError(
            f"image {h}x{w} smaller than one {params.block_size}x{params.block_size} block"
        )
    ii = integral(img)
    bys = grid_positions(h, params.block_size, params.block_stride)
    bxs = grid_positions(w, params.block_size, params.block_stride)
    offs = grid_positions(params.block_size, params.cell_size, params.cell_stride)

    ys = np.unique((bys[:, None] + offs[None, :]).ravel())
    xs = np.unique((bxs[:, None] + offs[None, :]).ravel())
    bin0, vote = _match_grid(ii, xs, ys, params.cell_size, params.eps)

    iy = np.searchsorted(ys, bys[:, None] + offs[None, :])  # (nby, n_cell_offsets)
    ix = np.searchsorted(xs, bxs[:, None] + offs[None, :])  # (nbx, n_cell_offsets)
    rows = iy[:, None, :, None]
    cols = ix[None, :, None, :]
    cell_bins = bin0[rows, cols]  # (nby, nbx, ncy, ncx)
    cell_votes = vote[rows, cols]

    nby, nbx = len(bys), len(bxs)
    block_ids = np.arange(nby * nbx, dtype=np.intp).reshape(nby, nbx, 1, 1)
    flat_targets = (block_ids * N_BINS + cell_bins).ravel()
    hists = np.bincount(flat_targets, weights=cell_votes.ravel(), minlength=nby * nbx * N_BINS)
    hists = hists.reshape(nby, nbx, N_BINS)
    return _normalize_blocks(hists) if normalized else hists


def extract_sph(img: GrayImage, params: SphParams) -> SphDescriptor:
    """Extract the single-scale SPH feature vector of an image."""
    hists = block_histograms(img, params, normalized=True)
    nby, nbx, _ = hists.shape
    return SphDescriptor(
        values=hists.reshape(-1),
        params=(params,),
        grids=((nby, nbx),),
        image_dims=(img.height, img.width),
    )


def extract_msph(img: GrayImage, param_list) -> SphDescriptor:
    """Concatenate SPH vectors extracted at several scales, in list order."""
    param_list = tuple(param_list)
    if not param_list:
        raise ValueError("param_list must contain at least one scale")
    parts = [extract_sph(img, p) for p in param_list]
    return SphDescriptor(
        values=np.concatenate([d.values for d in parts]),
        params=param_list,
        grids=tuple(g for d in parts for g in d.grids),
        image_dims=(img.height, img.width),
    )


DESCRIPTOR_CSV_MAGIC = "# sph-descriptors v1"


def save_descriptors(path, records, params) -> None:
    """Write descriptor rows as CSV: label, path, dims, then the values.

    The first line is a comment header carrying the extraction parameters as
    JSON; ``records`` is an iterable of (label, source_path, values).
    """
    import csv

    if isinstance(params, SphParams):
        params = (params,)
    feature = "sph" if len(params) == 1 else "msph"
    meta = {"feature": feature, "params": [p.to_dict() for p in params]}
    with open(path, "w", newline="") as fh:
        fh.write(f"{DESCRIPTOR_CSV_MAGIC} {json.dumps(meta)}\n")
        writer = csv.writer(fh)
        writer.writerow(["label", "path", "dims"])
        for label, source, values in records:
            values = np.asarray(values)
            writer.writerow([int(label), source, values.shape[0]] + [repr(float(v)) for v in values])


def load_descriptors(path):
    """Read a descriptor CSV; returns (records, params) with full-precision values."""
    import csv

    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(DESCRIPTOR_CSV_MAGIC):
            raise ValueError(f"{path} is not a descriptor CSV (bad header)")
        meta = json.loads(header[len(DESCRIPTOR_CSV_MAGIC) :])
        reader = csv.reader(fh)
        columns = next(reader)
        if columns[:3] != ["label", "path", "dims"]:
            raise ValueError(f"{path} has unexpected columns {columns[:3]}")
        records = []
        for row in reader:
            label, source, dims = int(row[0]), row[1], int(row[2])
            values = np.array([float(v) for v in row[3:]], dtype=np.float64)
            if values.shape[0] != dims:
                raise ValueError(f"{path}: row for {source} declares {dims} dims, found {values.shape[0]}")
            records.append((label, source, values))
    params = tuple(SphParams.from_dict(d) for d in meta["params"])
    return records, params
