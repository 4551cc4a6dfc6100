"""Procedural 28x28 digit corpus for environments without the real files.

Renders a 5x7 glyph per digit with per-example stroke corruption, one
of two glyph scales, positional jitter, occlusion bands, per-image
contrast, per-pixel attenuation and background noise, then serializes
the corpus as standard-named IDX files. Entirely deterministic given a
seed, so fixtures and desk-scale experiment runs are reproducible
anywhere. The distortions are tuned so a small dense net lands in the
few-percent error band after desk-scale training rather than
saturating, which keeps optimizer comparisons on this corpus
informative.

This is a stand-in with the same container format, shapes and label
space as the real data, not a substitute for benchmarking against
published digit-recognition error rates.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import STANDARD_NAMES, serialize_idx
from .tensor import RngStream

_GLYPHS = {
    0: (".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."),
    1: ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),
    2: (".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"),
    3: (".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."),
    4: ("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),
    5: ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    6: (".###.", "#....", "#....", "####.", "#...#", "#...#", ".###."),
    7: ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    8: (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
    9: (".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."),
}

_SCALES = (2, 3)        # glyphs render at 10x14 or 15x21 on the canvas
_FLIP_RATE = 0.025      # per-cell stroke corruption probability
_OCCLUSION_RATE = 0.2   # fraction of examples with a blanked band
_JITTER = 2             # max offset from centered placement, per axis


def _bitmap(digit: int) -> np.ndarray:
    rows = _GLYPHS[digit]
    return np.array([[c == "#" for c in row] for row in rows], dtype=np.float64)


_BITMAPS = {d: _bitmap(d) for d in range(10)}


def generate_corpus(n: int, rng: RngStream):
    """(images uint8 (n, 28, 28), labels int64 (n,)), deterministic in rng."""
    images = np.zeros((n, 28, 28), dtype=np.uint8)
    labels = np.zeros(n, dtype=np.int64)
    for i in range(n):
        digit = rng.integers(10)
        scale = _SCALES[rng.integers(len(_SCALES))]
        flips = rng.uniform(size=_BITMAPS[digit].shape) < _FLIP_RATE
        bitmap = np.where(flips, 1.0 - _BITMAPS[digit], _BITMAPS[digit])
        glyph = np.kron(bitmap, np.ones((scale, scale)))
        gh, gw = glyph.shape
        ox = (28 - gw) // 2 + rng.integers(2 * _JITTER + 1) - _JITTER
        oy = (28 - gh) // 2 + rng.integers(2 * _JITTER + 1) - _JITTER
        contrast = rng.uniform(130.0, 255.0)
        attenuation = rng.uniform(0.6, 1.0, size=(gh, gw))
        canvas = rng.uniform(0.0, 50.0, size=(28, 28))
        canvas[oy:oy + gh, ox:ox + gw] += glyph * attenuation * contrast
        if rng.uniform() < _OCCLUSION_RATE:
            width = 2 + rng.integers(2)
            if rng.uniform() < 0.5:
                row = oy + rng.integers(gh - width)
                canvas[row:row + width, ox:ox + gw] = rng.uniform(0.0, 50.0)
            else:
                col = ox + rng.integers(gw - width)
                canvas[oy:oy + gh, col:col + width] = rng.uniform(0.0, 50.0)
        images[i] = np.clip(canvas, 0, 255).astype(np.uint8)
        labels[i] = digit
    return images, labels


def write_corpus(out_dir, n_train: int = 7000, n_test: int = 1500,
                 seed: int = 901) -> Path:
    """Write a synthetic corpus as the four standard-named IDX files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_images, train_labels = generate_corpus(n_train, RngStream(seed, 0))
    test_images, test_labels = generate_corpus(n_test, RngStream(seed, 1))
    payload = {
        "train_images": train_images,
        "train_labels": train_labels.astype(np.uint8),
        "test_images": test_images,
        "test_labels": test_labels.astype(np.uint8),
    }
    for key, arr in payload.items():
        (out_dir / STANDARD_NAMES[key]).write_bytes(serialize_idx(arr))
    return out_dir
