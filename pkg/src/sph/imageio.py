"""Grayscale image and labeled-dataset loading, plus integral-image rectangle sums.

Supported file formats are binary PGM (``P5``, maxval up to 255) and PNG.
Color PNG inputs are reduced to 8-bit gray with the fixed-point luma
``(r*299 + g*587 + b*114 + 500) // 1000`` so extraction is bit-reproducible
across platforms.

Datasets follow the common face-database directory convention::

    root/
      <subject_a>/ img1.pgm img2.pgm ...
      <subject_b>/ ...

One integer label per subject directory, assigned in lexicographic directory
order; samples are ordered lexicographically by source path.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".pgm", ".png")


class ImageLoadError(ValueError):
    """Unreadable, unsupported, or corrupt image file."""


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale raster stored as a (height, width) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"pixels must be a non-empty 2-D array, got shape {px.shape}")
        if px.dtype != np.uint8:
            if not np.issubdtype(px.dtype, np.integer):
                raise ValueError(f"pixel values must be integers, got dtype {px.dtype}")
            if px.min() < 0 or px.max() > 255:
                raise ValueError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class IntegralImage:
    """Summed-area table: ``sums[y, x]`` is the sum of all pixels above-left of (x, y).

    The table has shape (height+1, width+1) with an all-zero first row and
    column, so any rectangle sum is four lookups of exact integer arithmetic.
    """

    sums: np.ndarray

    @property
    def width(self) -> int:
        return self.sums.shape[1] - 1

    @property
    def height(self) -> int:
        return self.sums.shape[0] - 1

    def rect_sum(self, x0: int, y0: int, w: int, h: int) -> int:
        """Exact sum of the w x h pixel rectangle with top-left corner (x0, y0)."""
        if w < 1 or h < 1:
            raise ValueError(f"rectangle must be non-empty, got {w}x{h}")
        if x0 < 0 or y0 < 0 or x0 + w > self.width or y0 + h > self.height:
            raise ValueError(
                f"rectangle ({x0},{y0},{w},{h}) out of bounds for {self.width}x{self.height} image"
            )
        s = self.sums
        # Grouped so every intermediate difference is non-negative in uint64.
        rows = s[y0 + h, x0 + w] - s[y0, x0 + w]
        left = s[y0 + h, x0] - s[y0, x0]
        return int(rows - left)


def integral(img: GrayImage) -> IntegralImage:
    """Build the summed-area table of an image in wide unsigned arithmetic."""
    h, w = img.pixels.shape
    sums = np.zeros((h + 1, w + 1), dtype=np.uint64)
    sums[1:, 1:] = img.pixels.cumsum(axis=0, dtype=np.uint64).cumsum(axis=1)
    return IntegralImage(sums)


def _pgm_next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos]
        if c in b"#":
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
        elif c in b" \t\r\n\x0b\x0c":
            pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos] not in b" \t\r\n\x0b\x0c#":
        pos += 1
    if start == pos:
        raise ImageLoadError("unsupported or corrupt PGM: truncated header")
    return data[start:pos], pos


def _load_pgm(data: bytes, path: Path) -> GrayImage:
    try:
        magic, pos = _pgm_next_token(data, 0)
        if magic != b"P5":
            raise ImageLoadError(f"unsupported or corrupt PGM: bad magic {magic!r}")
        fields = []
        for _ in range(3):
            tok, pos = _pgm_next_token(data, pos)
            fields.append(int(tok))
    except (ValueError, IndexError) as exc:
        if isinstance(exc, ImageLoadError):
            raise ImageLoadError(f"{exc} in {path}") from None
        raise ImageLoadError(f"unsupported or corrupt PGM header in {path}") from exc
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ImageLoadError(f"unsupported or corrupt PGM: zero-dimension image in {path}")
    if not 1 <= maxval <= 255:
        raise ImageLoadError(f"unsupported or corrupt PGM: maxval {maxval} (only 8-bit supported) in {path}")
    raster = data[pos + 1 : pos + 1 + width * height]
    if len(raster) != width * height:
        raise ImageLoadError(f"unsupported or corrupt PGM: short raster in {path}")
    return GrayImage(np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy())


def _load_png(path: Path) -> GrayImage:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            im.load()
            if im.width < 1 or im.height < 1:
                raise ImageLoadError(f"unsupported or corrupt PNG: zero-dimension image in {path}")
            if im.mode == "L":
                return GrayImage(np.asarray(im, dtype=np.uint8))
            if im.mode == "LA":
                return GrayImage(np.asarray(im, dtype=np.uint8)[:, :, 0])
            rgb = np.asarray(im.convert("RGB"), dtype=np.uint32)
    except UnidentifiedImageError as exc:
        raise ImageLoadError(f"unsupported or corrupt PNG in {path}") from exc
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    luma = (r * 299 + g * 587 + b * 114 + 500) // 1000
    return GrayImage(luma.astype(np.uint8))


def load_image(path: str | Path) -> GrayImage:
    """Load a PGM (binary P5) or PNG file as an 8-bit grayscale image.

    Raises ImageLoadError for unreadable files, unsupported formats, and
    zero-dimension images.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ImageLoadError(f"unreadable file {path}: {exc}") from exc
    if data[:2] == b"P5":
        return _load_pgm(data, path)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _load_png(path)
    raise ImageLoadError(f"unsupported or corrupt format in {path} (expected binary PGM or PNG)")


def save_pgm(path: str | Path, img: GrayImage) -> None:
    """Write an image as binary PGM (P5, maxval 255)."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.pixels.tobytes())


def crop_resize(img: GrayImage, crop_w: int, crop_h: int, out_w: int, out_h: int) -> GrayImage:
    """Center-crop to crop_w x crop_h, then bilinearly resize to out_w x out_h.

    Sampling uses the half-pixel-center convention: output pixel j maps to
    source coordinate (j + 0.5) * scale - 0.5, clamped to the crop. Results
    are rounded half-up and clamped to [0, 255].
    """
    if crop_w > img.width or crop_h > img.height:
        raise ValueError(
            f"crop {crop_w}x{crop_h} larger than source {img.width}x{img.height}"
        )
    if min(crop_w, crop_h, out_w, out_h) < 1:
        raise ValueError("crop and output dimensions must be positive")
    x0 = (img.width - crop_w) // 2
    y0 = (img.height - crop_h) // 2
    crop = img.pixels[y0 : y0 + crop_h, x0 : x0 + crop_w]
    if (out_w, out_h) == (crop_w, crop_h):
        return GrayImage(crop.copy())

    src = crop.astype(np.float64)
    sx = np.clip((np.arange(out_w) + 0.5) * (crop_w / out_w) - 0.5, 0.0, crop_w - 1.0)
    sy = np.clip((np.arange(out_h) + 0.5) * (crop_h / out_h) - 0.5, 0.0, crop_h - 1.0)
    x_lo = np.floor(sx).astype(np.intp)
    y_lo = np.floor(sy).astype(np.intp)
    x_hi = np.minimum(x_lo + 1, crop_w - 1)
    y_hi = np.minimum(y_lo + 1, crop_h - 1)
    fx = sx - x_lo
    fy = (sy - y_lo)[:, None]
    out = (
        src[y_lo[:, None], x_lo] * (1.0 - fx) * (1.0 - fy)
        + src[y_lo[:, None], x_hi] * fx * (1.0 - fy)
        + src[y_hi[:, None], x_lo] * (1.0 - fx) * fy
        + src[y_hi[:, None], x_hi] * fx * fy
    )
    return GrayImage(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


class Sample(NamedTuple):
    image: GrayImage
    label: int
    path: str


@dataclass(frozen=True)
class Dataset:
    """Labeled image collection with deterministic sample order."""

    samples: tuple[Sample, ...]
    label_names: dict[int, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.intp)

    def indices_by_label(self) -> dict[int, list[int]]:
        """Sample indices grouped per label, in dataset order."""
        groups: dict[int, list[int]] = {}
        for i, s in enumerate(self.samples):
            groups.setdefault(s.label, []).append(i)
        return groups

    def min_samples_per_label(self) -> int:
        return min(len(v) for v in self.indices_by_label().values())


def load_dataset(root: str | Path) -> Dataset:
    """Load every PGM/PNG under ``root/<subject_dir>/`` into a labeled dataset.

    Labels are assigned 0..K-1 in lexicographic order of subject directory
    names; subject directories without a single loadable image are skipped
    with a warning. Two invocations on the same tree produce identical
    sample order and labels.
    """
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"dataset root {root} is not a directory")
    subject_dirs = sorted((p for p in root.iterdir() if p.is_dir()), key=lambda p: p.name)
    if not subject_dirs:
        raise ValueError(f"dataset root {root} contains no subject directories")

    samples: list[Sample] = []
    label_names: dict[int, str] = {}
    for d in subject_dirs:
        files = sorted(
            (f for f in d.iterdir() if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES),
            key=lambda p: str(p),
        )
        loaded = []
        for f in files:
            try:
                loaded.append((load_image(f), str(f)))
            except ImageLoadError as exc:
                logger.warning("skipping unloadable image %s: %s", f, exc)
        if not loaded:
            logger.warning("skipping subject directory with no loadable images: %s", d)
            continue
        label = len(label_names)
        label_names[label] = d.name
        samples.extend(Sample(img, label, path) for img, path in loaded)

    if not samples:
        raise ValueError(f"dataset root {root} contains no loadable images")
    samples.sort(key=lambda s: s.path)
    return Dataset(samples=tuple(samples), label_names=label_names)
