"""Dataset ingestion and batching.

IDX container layout (big endian):

    image file:  u32 magic = 0x00000803, u32 count, u32 rows, u32 cols,
                 count*rows*cols unsigned pixel bytes
    label file:  u32 magic = 0x00000801, u32 count, count unsigned bytes

Pixels are scaled to [0, 1] by dividing by 255.  Image and label counts must
agree.  Datasets are immutable after load; any number of readers may share
one.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import Rng, STREAM_BATCH_ORDER, STREAM_BLOBS, derive_seed

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Bad magic number or malformed IDX header."""


class IdxCountMismatchError(ValueError):
    """Image file and label file declare different item counts."""


class IdxTruncatedError(OSError):
    """File ends before the bytes its header declares."""


@dataclass(frozen=True)
class Dataset:
    """Flattened images in [0, 1] with integer labels and a split tag."""

    images: np.ndarray   # (n, pixels) float64
    labels: np.ndarray   # (n,) int64
    split: str = "train"

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise ValueError(f"{self.images.shape[0]} images vs "
                             f"{self.labels.shape[0]} labels")

    def __len__(self) -> int:
        return self.images.shape[0]

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.images[indices], self.labels[indices], self.split)


@dataclass(frozen=True)
class Batch:
    """One minibatch: (batch, dim) inputs and (batch,) integer labels."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise ValueError(f"{self.inputs.shape[0]} inputs vs "
                             f"{self.labels.shape[0]} labels")


def _read_exact(f, n: int, path: Path, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise IdxTruncatedError(f"{path}: truncated while reading {what} "
                                f"({len(data)} of {n} bytes)")
    return data


def load_idx(images_path: str | Path, labels_path: str | Path,
             split: str = "train") -> Dataset:
    """Parse a matching pair of IDX image/label files."""
    images_path = Path(images_path)
    labels_path = Path(labels_path)

    with open(images_path, "rb") as f:
        magic, count, rows, cols = struct.unpack(
            ">IIII", _read_exact(f, 16, images_path, "image header"))
        if magic != IMAGE_MAGIC:
            raise IdxFormatError(f"{images_path}: bad image magic "
                                 f"0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}")
        raw = _read_exact(f, count * rows * cols, images_path, "pixel data")
        pixels = np.frombuffer(raw, dtype=np.uint8)

    with open(labels_path, "rb") as f:
        magic, label_count = struct.unpack(
            ">II", _read_exact(f, 8, labels_path, "label header"))
        if magic != LABEL_MAGIC:
            raise IdxFormatError(f"{labels_path}: bad label magic "
                                 f"0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}")
        labels = np.frombuffer(_read_exact(f, label_count, labels_path, "labels"),
                               dtype=np.uint8)

    if count != label_count:
        raise IdxCountMismatchError(f"{count} images but {label_count} labels")

    images = pixels.reshape(count, rows * cols).astype(np.float64) / 255.0
    return Dataset(images, labels.astype(np.int64), split)


def save_idx(dataset: Dataset, images_path: str | Path, labels_path: str | Path,
             rows: int, cols: int) -> None:
    """Write a Dataset back to the IDX pair; inverse of load_idx.

    Pixel values must be multiples of 1/255 (as produced by load_idx) for the
    round trip to be bit-exact.
    """
    n = len(dataset)
    if rows * cols != dataset.images.shape[1]:
        raise ValueError(f"rows*cols = {rows * cols} does not match "
                         f"{dataset.images.shape[1]} pixels per image")
    pixel_bytes = np.rint(dataset.images * 255.0).astype(np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols))
        f.write(pixel_bytes.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", LABEL_MAGIC, n))
        f.write(dataset.labels.astype(np.uint8).tobytes())


def load_mnist_dir(data_dir: str | Path, split: str) -> Dataset:
    """Load the canonical train/test file pair from one directory.

    Accepts both the historical dotted names (train-images.idx3-ubyte) and
    the dashed names (train-images-idx3-ubyte).
    """
    data_dir = Path(data_dir)
    prefix = "train" if split == "train" else "t10k"
    for img_name, lbl_name in (
        (f"{prefix}-images-idx3-ubyte", f"{prefix}-labels-idx1-ubyte"),
        (f"{prefix}-images.idx3-ubyte", f"{prefix}-labels.idx1-ubyte"),
    ):
        img, lbl = data_dir / img_name, data_dir / lbl_name
        if img.exists() and lbl.exists():
            return load_idx(img, lbl, split)
    raise FileNotFoundError(f"no {split} IDX pair under {data_dir}")


def shuffled_indices(n: int, seed: int) -> np.ndarray:
    """Seeded Fisher-Yates permutation of range(n)."""
    return Rng(derive_seed(seed, STREAM_BATCH_ORDER)).permutation(n)


def batch_iter(dataset: Dataset, batch_size: int, epoch_seed: int):
    """Yield ceil(n / batch_size) batches over a fresh seeded shuffle.

    The last batch may be short.  Identical (dataset, batch_size, epoch_seed)
    produce the identical batch sequence.
    """
    n = len(dataset)
    if n == 0:
        raise ValueError("dataset is empty")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    order = shuffled_indices(n, epoch_seed)
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        yield Batch(dataset.images[idx], dataset.labels[idx])


def synth_blobs(num_classes: int, per_class: int, dim: int, seed: int,
                noise: float = 0.08, split: str = "train") -> Dataset:
    """Gaussian-blob classification set with one fixed center per class.

    Center c sits at 0.15 everywhere except coordinate c, which is 0.85, so
    centers are far apart relative to the default noise scale.  Samples are
    clipped into [0, 1].  Requires num_classes <= dim.
    """
    if num_classes < 1 or per_class < 1 or dim < 1:
        raise ValueError("num_classes, per_class, and dim must all be >= 1")
    if num_classes > dim:
        raise ValueError(f"center placement needs dim >= num_classes, "
                         f"got dim={dim} < {num_classes}")
    rng = Rng(derive_seed(seed, STREAM_BLOBS))
    n = num_classes * per_class
    images = np.full((n, dim), 0.15)
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), per_class)
    images[np.arange(n), labels] = 0.85
    images += noise * rng.normals(n * dim).reshape(n, dim)
    np.clip(images, 0.0, 1.0, out=images)
    return Dataset(images, labels, split)
