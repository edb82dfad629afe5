"""Dataset construction: synthetic generators, IDX parsing, label-noise injection.

Datasets are immutable value objects with stable integer ids; noise injectors
return new datasets carrying the ground-truth corruption mask so telemetry can
tell clean from corrupted samples. All randomness goes through seeded
generators, so equal seeds give byte-identical outputs.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, replace

import numpy as np

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Malformed IDX file."""


class IdxMagicError(IdxFormatError):
    """Unexpected magic number."""


class IdxTruncatedError(IdxFormatError):
    """File ends before the declared payload."""


class IdxCountMismatchError(IdxFormatError):
    """Image and label files declare different sample counts."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus (possibly corrupted) targets and noise bookkeeping.

    labels are the training targets; clean_labels the originals; noisy_mask
    marks corrupted entries. n_classes is None for regression datasets.
    """

    features: np.ndarray
    labels: np.ndarray
    clean_labels: np.ndarray
    noisy_mask: np.ndarray
    ids: np.ndarray
    n_classes: int | None

    def __post_init__(self):
        n = self.features.shape[0]
        for name in ("labels", "clean_labels", "noisy_mask", "ids"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"{name} length does not match features")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def is_classification(self) -> bool:
        return self.n_classes is not None


def _fresh(features, labels, n_classes) -> Dataset:
    n = features.shape[0]
    return Dataset(
        features=features,
        labels=labels,
        clean_labels=labels.copy(),
        noisy_mask=np.zeros(n, dtype=bool),
        ids=np.arange(n, dtype=np.int64),
        n_classes=n_classes,
    )


def make_blobs(n: int, n_classes: int, d: int, separation: float, seed: int) -> Dataset:
    """Class-balanced isotropic Gaussian clusters (unit variance).

    Cluster centers are placed deterministically: equally spaced on a circle
    of radius `separation` in the first two feature dimensions (on a line for
    d == 1); remaining dimensions carry pure noise. Class counts differ by at
    most one.
    """
    if n_classes < 2 or n < n_classes or d < 1:
        raise ValueError("need n >= n_classes >= 2 and d >= 1")
    centers = np.zeros((n_classes, d))
    if d == 1:
        centers[:, 0] = (np.arange(n_classes) - (n_classes - 1) / 2.0) * separation
    else:
        angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
        centers[:, 0] = separation * np.cos(angles)
        centers[:, 1] = separation * np.sin(angles)
    base, rem = divmod(n, n_classes)
    counts = [base + (1 if c < rem else 0) for c in range(n_classes)]
    labels = np.repeat(np.arange(n_classes, dtype=np.int64), counts)
    rng = np.random.default_rng(seed)
    features = centers[labels] + rng.standard_normal((n, d))
    return _fresh(features, labels, n_classes)


def make_regression(n: int, d: int, seed: int, noise_std: float = 0.1) -> Dataset:
    """Linear regression targets y = x.w + b + noise on standard normal features."""
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    w = rng.standard_normal(d)
    b = rng.standard_normal()
    y = X @ w + b + noise_std * rng.standard_normal(n)
    return _fresh(X, y, None)


def inject_symmetric_noise(
    dataset: Dataset, rate: float, n_classes: int | None = None, seed: int = 0
) -> Dataset:
    """Corrupt exactly round(rate*n) labels, each drawn uniformly from the other classes."""
    if not dataset.is_classification:
        raise ValueError("symmetric label noise applies to classification datasets")
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must be in [0, 1]")
    c = dataset.n_classes if n_classes is None else n_classes
    k = int(round(rate * dataset.n))
    if k > 0 and c < 2:
        raise ValueError("need at least 2 classes to corrupt labels")
    labels = dataset.labels.copy()
    rng = np.random.default_rng(seed)
    if k > 0:
        chosen = rng.choice(dataset.n, size=k, replace=False)
        draws = rng.integers(0, c - 1, size=k)
        # skip over the clean label so the draw is uniform on the other c-1 classes
        labels[chosen] = draws + (draws >= labels[chosen])
    return replace(
        dataset,
        labels=labels,
        noisy_mask=labels != dataset.clean_labels,
    )


def inject_regression_noise(
    dataset: Dataset,
    rate: float,
    value_range: tuple[float, float] | None = None,
    seed: int = 0,
) -> Dataset:
    """Resample round(rate*n) regression targets uniformly over value_range.

    value_range defaults to the observed target range. The noisy mask marks
    every resampled entry, even if the draw happens to land on the old value.
    """
    if dataset.is_classification:
        raise ValueError("regression noise applies to regression datasets")
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must be in [0, 1]")
    if value_range is None:
        value_range = (float(dataset.labels.min()), float(dataset.labels.max()))
    lo, hi = value_range
    if not lo < hi:
        raise ValueError(f"empty value_range ({lo}, {hi})")
    k = int(round(rate * dataset.n))
    labels = dataset.labels.copy()
    mask = np.zeros(dataset.n, dtype=bool)
    if k > 0:
        rng = np.random.default_rng(seed)
        chosen = rng.choice(dataset.n, size=k, replace=False)
        labels[chosen] = rng.uniform(lo, hi, size=k)
        mask[chosen] = True
    return replace(dataset, labels=labels, noisy_mask=mask)


def _read_exact(f, n_bytes: int, path, what: str) -> bytes:
    buf = f.read(n_bytes)
    if len(buf) != n_bytes:
        raise IdxTruncatedError(
            f"{path}: expected {n_bytes} bytes of {what}, got {len(buf)}"
        )
    return buf


def load_mnist_idx(images_path, labels_path) -> Dataset:
    """Parse an IDX image/label file pair into a flat-feature dataset.

    Headers are big-endian 32-bit words; pixels are scaled to [0, 1]. Raises
    IdxMagicError / IdxTruncatedError / IdxCountMismatchError on malformed
    input. Bytes beyond the declared payload are ignored.
    """
    with open(images_path, "rb") as f:
        magic, n_images, rows, cols = struct.unpack(
            ">IIII", _read_exact(f, 16, images_path, "image header")
        )
        if magic != IDX_IMAGES_MAGIC:
            raise IdxMagicError(
                f"{images_path}: bad image magic 0x{magic:08x}, "
                f"expected 0x{IDX_IMAGES_MAGIC:08x}"
            )
        pixels = _read_exact(f, n_images * rows * cols, images_path, "pixel data")
    with open(labels_path, "rb") as f:
        magic, n_labels = struct.unpack(
            ">II", _read_exact(f, 8, labels_path, "label header")
        )
        if magic != IDX_LABELS_MAGIC:
            raise IdxMagicError(
                f"{labels_path}: bad label magic 0x{magic:08x}, "
                f"expected 0x{IDX_LABELS_MAGIC:08x}"
            )
        label_bytes = _read_exact(f, n_labels, labels_path, "label data")
    if n_images != n_labels:
        raise IdxCountMismatchError(
            f"{n_images} images vs {n_labels} labels ({images_path}, {labels_path})"
        )
    features = (
        np.frombuffer(pixels, dtype=np.uint8).astype(float).reshape(n_images, rows * cols)
        / 255.0
    )
    labels = np.frombuffer(label_bytes, dtype=np.uint8).astype(np.int64)
    n_classes = int(labels.max()) + 1 if n_images > 0 else 0
    return _fresh(features, labels, n_classes)


def write_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path) -> None:
    """Write uint8 images (n, rows, cols) and labels (n,) as an IDX file pair."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    if images.ndim != 3 or labels.ndim != 1 or images.shape[0] != labels.shape[0]:
        raise ValueError("expected images (n, rows, cols) and labels (n,)")
    n, rows, cols = images.shape
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols))
        f.write(images.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABELS_MAGIC, n))
        f.write(labels.tobytes())


def dataset_to_csv(dataset: Dataset, path) -> None:
    """Export as CSV with header id, clean_label, label, noisy, f0..f{d-1}."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["id", "clean_label", "label", "noisy"]
            + [f"f{j}" for j in range(dataset.d)]
        )
        fmt = (lambda v: int(v)) if dataset.is_classification else (lambda v: repr(float(v)))
        for i in range(dataset.n):
            writer.writerow(
                [
                    int(dataset.ids[i]),
                    fmt(dataset.clean_labels[i]),
                    fmt(dataset.labels[i]),
                    int(dataset.noisy_mask[i]),
                ]
                + [repr(float(v)) for v in dataset.features[i]]
            )


def dataset_from_csv(path) -> Dataset:
    """Inverse of dataset_to_csv. Integer-valued label columns imply classification."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header[:4] != ["id", "clean_label", "label", "noisy"]:
            raise ValueError(f"{path}: unexpected dataset CSV header {header[:4]}")
        d = len(header) - 4
        ids, clean, labels, noisy, feats = [], [], [], [], []
        for row in reader:
            ids.append(int(row[0]))
            clean.append(row[1])
            labels.append(row[2])
            noisy.append(bool(int(row[3])))
            feats.append([float(v) for v in row[4 : 4 + d]])

    def _is_int(s: str) -> bool:
        try:
            return float(s) == int(float(s))
        except ValueError:
            return False

    classification = all(_is_int(s) for s in clean) and all(_is_int(s) for s in labels)
    if classification:
        labels_arr = np.array([int(float(s)) for s in labels], dtype=np.int64)
        clean_arr = np.array([int(float(s)) for s in clean], dtype=np.int64)
        n_classes = int(max(labels_arr.max(), clean_arr.max())) + 1
    else:
        labels_arr = np.array([float(s) for s in labels])
        clean_arr = np.array([float(s) for s in clean])
        n_classes = None
    return Dataset(
        features=np.asarray(feats, dtype=float),
        labels=labels_arr,
        clean_labels=clean_arr,
        noisy_mask=np.asarray(noisy, dtype=bool),
        ids=np.asarray(ids, dtype=np.int64),
        n_classes=n_classes,
    )
