"""Deterministic synthetic dataset generation.

Each class gets a fixed blocky binary pattern (a coarse random 0/1 grid
upsampled to the image size), and each sample is that pattern under a small
circular translation plus additive pixel noise. The ``jitter`` knob controls
both: translations are drawn from [-jitter, +jitter] pixels per axis and the
noise amplitude is ``NOISE_PER_JITTER * jitter`` gray levels, so jitter=0
makes all samples of a class identical.

Everything is seeded from fixed constants, so two invocations with the same
arguments produce byte-identical trees.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .imageio import Dataset, GrayImage, Sample, save_pgm

_BASE_SEED = 41415  # fixed generator identity; never derived from time
_LOW, _HIGH = 64, 192
_PATTERN_CELL = 2  # pattern-grid to pixel upsampling factor
NOISE_PER_JITTER = 10


def _class_rng(class_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([_BASE_SEED, 1, class_id]))

def _sample_rng(class_id: int, sample_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([_BASE_SEED, 2, class_id, sample_id]))


def class_pattern(class_id: int, image_size: int) -> np.ndarray:
    """The class's base image: a coarse random binary layout at blocky contrast."""
    rng = _class_rng(class_id)
    grid = image_size // _PATTERN_CELL
    coarse = rng.integers(0, 2, size=(grid, grid), dtype=np.uint8)
    pattern = np.kron(coarse, np.ones((_PATTERN_CELL, _PATTERN_CELL), dtype=np.uint8))
    return np.where(pattern > 0, _HIGH, _LOW).astype(np.uint8)


def synthetic_sample(class_id: int, sample_id: int, image_size: int, jitter: int) -> GrayImage:
    """One jittered, noisy view of the class pattern."""
    base = class_pattern(class_id, image_size).astype(np.int16)
    if jitter > 0:
        rng = _sample_rng(class_id, sample_id)
        dy, dx = rng.integers(-jitter, jitter + 1, size=2)
        base = np.roll(base, (int(dy), int(dx)), axis=(0, 1))
        amp = NOISE_PER_JITTER * jitter
        base = base + rng.integers(-amp, amp + 1, size=base.shape, dtype=np.int16)
    return GrayImage(np.clip(base, 0, 255).astype(np.uint8))


def _check_args(classes: int, samples: int, jitter: int, image_size: int) -> None:
    if classes < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")
    if samples < 2:
        raise ValueError(f"need at least 2 samples per class, got {samples}")
    if jitter < 0:
        raise ValueError(f"jitter must be nonnegative, got {jitter}")
    if image_size < 4 or image_size % _PATTERN_CELL:
        raise ValueError(f"image size must be a positive multiple of {_PATTERN_CELL} >= 4, got {image_size}")


def synthetic_dataset(classes: int, samples: int, jitter: int = 1, image_size: int = 32) -> Dataset:
    """Build the synthetic dataset in memory (same pixels as the on-disk tree)."""
    _check_args(classes, samples, jitter, image_size)
    out = []
    label_names = {}
    for c in range(classes):
        label_names[c] = f"s{c:03d}"
        for s in range(samples):
            img = synthetic_sample(c, s, image_size, jitter)
            out.append(Sample(img, c, f"s{c:03d}/i{s:02d}.pgm"))
    return Dataset(samples=tuple(out), label_names=label_names)


def generate_synthetic_dataset(
    out_dir: str | Path, classes: int, samples: int, jitter: int = 1, image_size: int = 32
) -> Path:
    """Write the synthetic dataset as a PGM directory tree; returns the root path.

    Refuses to write into an existing non-empty directory.
    """
    _check_args(classes, samples, jitter, image_size)
    out_dir = Path(out_dir)
    if out_dir.exists() and any(out_dir.iterdir()):
        raise ValueError(f"output directory {out_dir} exists and is not empty")
    out_dir.mkdir(parents=True, exist_ok=True)
    for c in range(classes):
        subject = out_dir / f"s{c:03d}"
        subject.mkdir()
        for s in range(samples):
            save_pgm(subject / f"i{s:02d}.pgm", synthetic_sample(c, s, image_size, jitter))
    return out_dir
