"""MNIST-style IDX ingestion, normalization, and split handling.

The IDX container: a big-endian header whose first two bytes are zero,
a type byte (0x08 = unsigned byte, the only type accepted here), a
dimension-count byte, then one big-endian uint32 size per dimension,
followed by the raw payload. Image files carry magic 0x00000803
(2051, three dims n x rows x cols); label files carry 0x00000801
(2049, one dim). Gzip-compressed files are detected by their two-byte
signature and decompressed transparently.

Loaded pixels are scaled by 1/255 into [0, 1]. Splits are taken in file
order: the first `train_size` examples train, the next `val_size`
validate, and the test set comes from the separate test pair.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .tensor import RngStream

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049

_IDX_UBYTE = 0x08


class IdxFormatError(ValueError):
    """Malformed IDX data; the message carries the failing byte offset."""


def parse_idx(data: bytes) -> np.ndarray:
    """Parse IDX bytes into a uint8 array of the declared shape."""
    if len(data) < 4:
        raise IdxFormatError(
            f"truncated IDX header: got {len(data)} bytes at offset 0, need 4"
        )
    zeros, dtype, ndim = data[0] << 8 | data[1], data[2], data[3]
    if zeros != 0 or dtype != _IDX_UBYTE:
        magic = struct.unpack(">I", data[:4])[0]
        raise IdxFormatError(
            f"bad IDX magic 0x{magic:08X} at offset 0 "
            f"(expected unsigned-byte magic 2051 or 2049)"
        )
    header_len = 4 + 4 * ndim
    if len(data) < header_len:
        raise IdxFormatError(
            f"truncated IDX header at offset {len(data)}: "
            f"{ndim} dims need {header_len} header bytes"
        )
    dims = struct.unpack(f">{ndim}I", data[4:header_len])
    count = int(np.prod(dims, dtype=np.int64)) if dims else 1
    if count < 0 or count > 1 << 40:
        raise IdxFormatError(f"IDX dims {dims} overflow a sane payload size")
    expected_end = header_len + count
    if len(data) < expected_end:
        raise IdxFormatError(
            f"truncated IDX payload: data ends at offset {len(data)}, "
            f"expected {expected_end}"
        )
    if len(data) > expected_end:
        raise IdxFormatError(
            f"trailing bytes after IDX payload: data ends at offset "
            f"{len(data)}, expected {expected_end}"
        )
    arr = np.frombuffer(data, dtype=np.uint8, offset=header_len, count=count)
    return arr.reshape(dims).copy()


def serialize_idx(arr: np.ndarray) -> bytes:
    """Inverse of parse_idx: uint8 array back to IDX bytes."""
    arr = np.asarray(arr)
    if arr.dtype != np.uint8:
        raise ValueError(f"IDX serialization needs uint8 data, got {arr.dtype}")
    header = struct.pack(">HBB", 0, _IDX_UBYTE, arr.ndim)
    header += struct.pack(f">{arr.ndim}I", *arr.shape)
    return header + np.ascontiguousarray(arr).tobytes()


def read_idx(path) -> np.ndarray:
    """Read an IDX file, decompressing gzip transparently."""
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return parse_idx(raw)


@dataclass
class Dataset:
    """Flattened images in [0, 1] with integer labels."""

    images: np.ndarray  # (n, 784) float64
    labels: np.ndarray  # (n,) int64
    split_tag: str = "train"

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 2:
            raise ValueError(f"images must be 2-D, got shape {self.images.shape}")
        if len(self.images) != len(self.labels):
            raise ValueError(
                f"{len(self.images)} images but {len(self.labels)} labels"
            )
        if len(self.images) and (self.images.min() < 0 or self.images.max() > 1):
            raise ValueError("image entries must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.images)

    def subset(self, indices, split_tag=None) -> "Dataset":
        return Dataset(self.images[indices], self.labels[indices],
                       split_tag or self.split_tag)


class DataSplits(NamedTuple):
    train: Dataset
    validation: Dataset
    test: Dataset


def _images_to_dataset(images: np.ndarray, labels: np.ndarray,
                       tag: str) -> Dataset:
    if images.ndim != 3:
        raise ValueError(f"expected n x rows x cols images, got {images.shape}")
    if labels.ndim != 1:
        raise ValueError(f"expected a label vector, got shape {labels.shape}")
    n = images.shape[0]
    if n and labels.max() > 9:
        raise ValueError(
            f"labels must be digit classes in [0, 10), got max {labels.max()}"
        )
    flat = images.reshape(n, -1).astype(np.float64) / 255.0
    return Dataset(flat, labels.astype(np.int64), tag)


def load_splits(train_images_path, train_labels_path,
                test_images_path, test_labels_path,
                train_size: int, val_size: int,
                test_size: int | None = None,
                shuffle_seed: int | None = None) -> DataSplits:
    """Load the train/validation/test datasets from two IDX file pairs.

    Training and validation come from the training pair in file order
    (first train_size, next val_size); the test set is the leading
    test_size examples of the test pair (all of it when None). Passing
    `shuffle_seed` permutes the training pair deterministically before
    the prefix split, for robustness studies; the default keeps file
    order so no extra seed enters the standard protocol.
    """
    timg = read_idx(train_images_path)
    tlab = read_idx(train_labels_path)
    if len(timg) != len(tlab):
        raise ValueError(
            f"training pair disagrees: {len(timg)} images vs {len(tlab)} labels"
        )
    if train_size < 1 or val_size < 0:
        raise ValueError(f"bad split sizes ({train_size}, {val_size})")
    if train_size + val_size > len(timg):
        raise ValueError(
            f"split ({train_size}, {val_size}) exceeds the {len(timg)} "
            f"available training examples"
        )
    if shuffle_seed is not None:
        order = RngStream(shuffle_seed, 0).permutation(len(timg))
        timg, tlab = timg[order], tlab[order]
    train = _images_to_dataset(timg[:train_size], tlab[:train_size], "train")
    validation = _images_to_dataset(
        timg[train_size:train_size + val_size],
        tlab[train_size:train_size + val_size], "validation",
    )

    simg = read_idx(test_images_path)
    slab = read_idx(test_labels_path)
    if len(simg) != len(slab):
        raise ValueError(
            f"test pair disagrees: {len(simg)} images vs {len(slab)} labels"
        )
    if test_size is not None:
        if test_size > len(simg):
            raise ValueError(
                f"test_size {test_size} exceeds the {len(simg)} available "
                f"test examples"
            )
        simg, slab = simg[:test_size], slab[:test_size]
    test = _images_to_dataset(simg, slab, "test")
    return DataSplits(train, validation, test)


# Standard MNIST file names, tried with and without .gz.
STANDARD_NAMES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def find_standard_files(data_dir) -> dict[str, Path]:
    """Locate the four standard-named IDX files under `data_dir`."""
    data_dir = Path(data_dir)
    found = {}
    for key, name in STANDARD_NAMES.items():
        for candidate in (data_dir / name, data_dir / (name + ".gz")):
            if candidate.exists():
                found[key] = candidate
                break
        else:
            raise FileNotFoundError(
                f"missing {name}[.gz] under {data_dir}"
            )
    return found


def load_splits_from_dir(data_dir, train_size: int, val_size: int,
                         test_size: int | None = None,
                         shuffle_seed: int | None = None) -> DataSplits:
    files = find_standard_files(data_dir)
    return load_splits(
        files["train_images"], files["train_labels"],
        files["test_images"], files["test_labels"],
        train_size, val_size, test_size, shuffle_seed,
    )


def load_test_set(data_dir, size: int | None = None) -> Dataset:
    """Just the test pair from a standard-named directory."""
    files = find_standard_files(data_dir)
    simg = read_idx(files["test_images"])
    slab = read_idx(files["test_labels"])
    if len(simg) != len(slab):
        raise ValueError(
            f"test pair disagrees: {len(simg)} images vs {len(slab)} labels"
        )
    if size is not None:
        if not 1 <= size <= len(simg):
            raise ValueError(
                f"test size {size} out of range for {len(simg)} examples"
            )
        simg, slab = simg[:size], slab[:size]
    return _images_to_dataset(simg, slab, "test")
