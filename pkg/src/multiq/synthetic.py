"""Seeded synthetic texture tiles for the three land-cover classes.

Recipes (per channel, around a per-tile base tone):

* aquatic     -- unit-variance rounded Gaussian speckle: a very narrow
                 histogram, low entropy at every q.
* urban       -- each pixel keeps the base tone with probability 1/2 and
                 otherwise jumps uniformly to one of 16 offsets in
                 +-[1, 8]: one heavy bin over a broad tail.
* vegetation  -- 2x2 pixel cells drawn uniformly from 8 consecutive
                 offsets: a flat, compact histogram.

The urban and vegetation recipes share the same expected standard entropy
(ln 8 per channel), so the 3-feature standard-entropy vector struggles to
tell them apart while entropies at q != 1 split them cleanly. Base tones
are jittered per tile; entropy features ignore histogram position, so the
jitter only affects how the tiles look.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .imaging import DEFAULT_BLOCK_SIZE, write_image

CLASSES = ("aquatic", "urban", "vegetation")

_BASE_TONES = {
    "aquatic": (40, 70, 160),
    "urban": (126, 124, 130),
    "vegetation": (62, 142, 78),
}


def class_tile(label: str, size: int, rng: np.random.Generator) -> np.ndarray:
    """One size x size RGB tile of the given class texture."""
    if label not in CLASSES:
        raise ValueError(f"unknown class {label!r}, expected one of {CLASSES}")
    if size % 2 != 0 or size < 2:
        raise ValueError(f"tile size must be a positive even number, got {size}")
    base = np.asarray(_BASE_TONES[label], dtype=np.float64) + rng.integers(-10, 11, 3)
    if label == "aquatic":
        offsets = np.rint(rng.normal(0.0, 1.0, (size, size, 3)))
    elif label == "urban":
        jump = rng.integers(0, 16, (size, size, 3)) - 8
        jump = np.where(jump >= 0, jump + 1, jump)  # uniform over +-[1, 8]
        keep = rng.random((size, size, 3)) < 0.5
        offsets = np.where(keep, 0, jump)
    else:
        cells = rng.integers(0, 8, (size // 2, size // 2, 3)) - 3  # uniform over [-3, 4]
        offsets = np.repeat(np.repeat(cells, 2, axis=0), 2, axis=1)
    return np.clip(base + offsets, 0, 255).astype(np.uint8)


def _tile_rng(seed: int, class_index: int, tile_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, class_index, tile_index])


def write_dataset(root, tiles_per_class: int = 40, size: int = 32, seed: int = 42) -> dict:
    """Write a directory-per-class tile dataset of P6 files under `root`.

    Returns the per-class tile counts. Every tile is generated from its own
    (seed, class, tile) stream, so any subset is reproducible.
    """
    root = Path(root)
    counts = {}
    for ci, label in enumerate(CLASSES):
        class_dir = root / label
        class_dir.mkdir(parents=True, exist_ok=True)
        for t in range(tiles_per_class):
            tile = class_tile(label, size, _tile_rng(seed, ci, t))
            write_image(class_dir / f"tile_{t:03d}.ppm", tile)
        counts[label] = tiles_per_class
    return counts


def composite_image(seed: int = 42, band_blocks: int = 2, rows_blocks: int = 6,
                    block_size: int = DEFAULT_BLOCK_SIZE) -> tuple[np.ndarray, list[str]]:
    """Composite test image of three vertical class bands.

    Each band is `band_blocks` blocks wide and `rows_blocks` blocks tall.
    Returns the image and the true per-block labels in row-major block
    order, aligned with the block grid of the image.
    """
    band_px = band_blocks * block_size
    height = rows_blocks * block_size
    panels = [
        class_tile(label, max(band_px, height), _tile_rng(seed, ci, 10_000))[:height, :band_px]
        for ci, label in enumerate(CLASSES)
    ]
    image = np.concatenate(panels, axis=1)
    labels = [CLASSES[c // band_blocks] for _ in range(rows_blocks) for c in range(3 * band_blocks)]
    return image, labels
