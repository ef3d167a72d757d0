"""Dataset containers: binary feature/label files, manifests, synthetic data.

Two fixed-layout little-endian binary formats hold a dataset split:

``AGLF`` (features)::

    magic  b"AGLF"
    u16    format version (currently 1)
    u64    n            number of rows
    u32    d            embedding width
    f32[]  n * d values, row-major

``AGLL`` (labels)::

    magic  b"AGLL"
    u16    format version (currently 1)
    u64    n            number of rows
    u32    c            number of classes
    u32[]  n labels, each < c

Files store 32-bit floats for compactness; all downstream arithmetic is
performed in 64 bits.  A manifest is a ``key = value`` block-text file
(see :mod:`poolbench.configio`) with one block per dataset and keys
``name, train_features, train_labels, test_features, test_labels,
num_classes, imbalanced``; relative paths are resolved against the
manifest's directory.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .configio import format_blocks, parse_blocks, parse_bool
from .errors import DataConsistencyError, FormatError, InvalidConfigError

FEATURE_MAGIC = b"AGLF"
LABEL_MAGIC = b"AGLL"
FORMAT_VERSION = 1

MANIFEST_KEYS = (
    "name",
    "train_features",
    "train_labels",
    "test_features",
    "test_labels",
    "num_classes",
    "imbalanced",
)


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    train_features: str
    train_labels: str
    test_features: str
    test_labels: str
    num_classes: int
    imbalanced: bool


@dataclass(frozen=True)
class DatasetBundle:
    """One dataset: train/test splits plus the metadata the runner needs."""

    name: str
    train_x: np.ndarray  # (n_train, d) float32
    train_y: np.ndarray  # (n_train,) int64
    test_x: np.ndarray
    test_y: np.ndarray
    num_classes: int
    imbalanced: bool

    @property
    def n_train(self) -> int:
        return self.train_x.shape[0]

    @property
    def dim(self) -> int:
        return self.train_x.shape[1]


# ---------------------------------------------------------------------------
# binary containers
# ---------------------------------------------------------------------------


def write_features(x: np.ndarray, destination) -> None:
    """Write a feature matrix to an AGLF file. Rejects non-finite values."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise InvalidConfigError(f"feature matrix must be 2-D, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise InvalidConfigError("feature matrix contains NaN or Inf")
    payload = np.ascontiguousarray(x, dtype="<f4")
    header = FEATURE_MAGIC + struct.pack("<HQI", FORMAT_VERSION, x.shape[0], x.shape[1])
    _atomic_write(destination, header + payload.tobytes())


def read_features(source) -> np.ndarray:
    data = Path(source).read_bytes()
    n, d = _read_header(data, FEATURE_MAGIC, Path(source).name)
    body = data[_HEADER_LEN:]
    expected = n * d * 4
    if len(body) != expected:
        raise FormatError(
            f"feature payload truncated: expected {expected} bytes, found {len(body)}",
            offset=_HEADER_LEN + len(body),
        )
    x = np.frombuffer(body, dtype="<f4").reshape(n, d)
    if not np.isfinite(x).all():
        raise FormatError("feature payload contains NaN or Inf", offset=_HEADER_LEN)
    return x.astype(np.float32, copy=True)


def write_labels(labels: np.ndarray, num_classes: int, destination) -> None:
    """Write a label vector to an AGLL file. Every label must be < num_classes."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise InvalidConfigError(f"label vector must be 1-D, got shape {labels.shape}")
    if num_classes < 1:
        raise InvalidConfigError("num_classes must be >= 1")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise InvalidConfigError(f"labels outside [0, {num_classes})")
    payload = np.ascontiguousarray(labels, dtype="<u4")
    header = LABEL_MAGIC + struct.pack("<HQI", FORMAT_VERSION, labels.shape[0], num_classes)
    _atomic_write(destination, header + payload.tobytes())


def read_labels(source) -> tuple[np.ndarray, int]:
    """Read an AGLL file; returns (labels as int64, num_classes)."""
    data = Path(source).read_bytes()
    n, c = _read_header(data, LABEL_MAGIC, Path(source).name)
    body = data[_HEADER_LEN:]
    expected = n * 4
    if len(body) != expected:
        raise FormatError(
            f"label payload truncated: expected {expected} bytes, found {len(body)}",
            offset=_HEADER_LEN + len(body),
        )
    labels = np.frombuffer(body, dtype="<u4").astype(np.int64)
    if labels.size and labels.max() >= c:
        raise FormatError(f"label {int(labels.max())} >= num_classes {c}", offset=_HEADER_LEN)
    return labels, c


_HEADER_LEN = 4 + 2 + 8 + 4  # magic, version, n, width


def _read_header(data: bytes, magic: bytes, name: str) -> tuple[int, int]:
    if len(data) < _HEADER_LEN:
        raise FormatError(f"{name}: header truncated", offset=len(data))
    if data[:4] != magic:
        raise FormatError(f"{name}: bad magic {data[:4]!r}, expected {magic!r}", offset=0)
    version, n, width = struct.unpack("<HQI", data[4:_HEADER_LEN])
    if version != FORMAT_VERSION:
        raise FormatError(f"{name}: unsupported format version {version}", offset=4)
    return n, width


def _atomic_write(destination, blob: bytes) -> None:
    destination = Path(destination)
    tmp = destination.with_name(destination.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, destination)


# ---------------------------------------------------------------------------
# manifests and bundles
# ---------------------------------------------------------------------------


def read_manifest(path) -> list[ManifestEntry]:
    path = Path(path)
    entries = []
    for block in parse_blocks(path.read_text()):
        missing = [k for k in MANIFEST_KEYS if k not in block]
        if missing:
            raise DataConsistencyError(f"manifest entry missing keys: {missing}")
        entries.append(
            ManifestEntry(
                name=block["name"],
                train_features=block["train_features"],
                train_labels=block["train_labels"],
                test_features=block["test_features"],
                test_labels=block["test_labels"],
                num_classes=int(block["num_classes"]),
                imbalanced=parse_bool(block["imbalanced"], "imbalanced"),
            )
        )
    names = [e.name for e in entries]
    if len(set(names)) != len(names):
        raise DataConsistencyError(f"duplicate dataset names in manifest: {names}")
    return entries


def write_manifest(entries: list[ManifestEntry], path) -> None:
    blocks = [
        {
            "name": e.name,
            "train_features": e.train_features,
            "train_labels": e.train_labels,
            "test_features": e.test_features,
            "test_labels": e.test_labels,
            "num_classes": str(e.num_classes),
            "imbalanced": "true" if e.imbalanced else "false",
        }
        for e in entries
    ]
    Path(path).write_text(format_blocks(blocks))


def load_bundle(entry: ManifestEntry, base_dir) -> DatasetBundle:
    """Load and cross-validate the four files behind a manifest entry."""
    base = Path(base_dir)
    train_x = read_features(base / entry.train_features)
    train_y, c_train = read_labels(base / entry.train_labels)
    test_x = read_features(base / entry.test_features)
    test_y, c_test = read_labels(base / entry.test_labels)
    if train_x.shape[0] != train_y.shape[0]:
        raise DataConsistencyError(
            f"{entry.name}: train features have {train_x.shape[0]} rows "
            f"but labels have {train_y.shape[0]}"
        )
    if test_x.shape[0] != test_y.shape[0]:
        raise DataConsistencyError(
            f"{entry.name}: test features have {test_x.shape[0]} rows "
            f"but labels have {test_y.shape[0]}"
        )
    if train_x.shape[1] != test_x.shape[1]:
        raise DataConsistencyError(
            f"{entry.name}: train width {train_x.shape[1]} != test width {test_x.shape[1]}"
        )
    if not (c_train == c_test == entry.num_classes):
        raise DataConsistencyError(
            f"{entry.name}: class counts disagree "
            f"(train {c_train}, test {c_test}, manifest {entry.num_classes})"
        )
    return DatasetBundle(
        name=entry.name,
        train_x=train_x,
        train_y=train_y,
        test_x=test_x,
        test_y=test_y,
        num_classes=entry.num_classes,
        imbalanced=entry.imbalanced,
    )


def save_bundle(bundle: DatasetBundle, out_dir, manifest_path=None) -> ManifestEntry:
    """Write a bundle's four files into ``out_dir`` and append a manifest entry.

    When ``manifest_path`` is None a ``manifest.txt`` next to the files is
    created or extended.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entry = ManifestEntry(
        name=bundle.name,
        train_features=f"{bundle.name}.train.aglf",
        train_labels=f"{bundle.name}.train.agll",
        test_features=f"{bundle.name}.test.aglf",
        test_labels=f"{bundle.name}.test.agll",
        num_classes=bundle.num_classes,
        imbalanced=bundle.imbalanced,
    )
    write_features(bundle.train_x, out / entry.train_features)
    write_labels(bundle.train_y, bundle.num_classes, out / entry.train_labels)
    write_features(bundle.test_x, out / entry.test_features)
    write_labels(bundle.test_y, bundle.num_classes, out / entry.test_labels)
    manifest = Path(manifest_path) if manifest_path else out / "manifest.txt"
    existing = read_manifest(manifest) if manifest.exists() else []
    existing = [e for e in existing if e.name != entry.name] + [entry]
    write_manifest(existing, manifest)
    return entry


# ---------------------------------------------------------------------------
# synthetic datasets
# ---------------------------------------------------------------------------


def synth_blobs(
    n_train: int,
    n_test: int,
    d: int,
    c: int,
    class_weights,
    cluster_spread: float,
    rng: np.random.Generator,
    name: str = "synth",
) -> DatasetBundle:
    """Gaussian class blobs with controllable imbalance.

    One mean per class is drawn uniformly on the unit sphere; instances are
    the class mean plus isotropic noise of scale ``cluster_spread``.  Labels
    follow ``class_weights``.  The bundle is marked imbalanced unless the
    weights are exactly uniform, which selects balanced accuracy as the
    evaluation metric downstream.
    """
    weights = np.asarray(class_weights, dtype=np.float64)
    if c < 2:
        raise InvalidConfigError("synth_blobs needs c >= 2")
    if d < 1:
        raise InvalidConfigError("synth_blobs needs d >= 1")
    if weights.shape != (c,):
        raise InvalidConfigError(f"class_weights must have length {c}")
    if (weights < 0).any():
        raise InvalidConfigError("class_weights must be non-negative")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise InvalidConfigError(f"class_weights must sum to 1, got {weights.sum()!r}")
    if cluster_spread <= 0:
        raise InvalidConfigError("cluster_spread must be positive")

    means = rng.standard_normal((c, d))
    norms = np.linalg.norm(means, axis=1, keepdims=True)
    norms[norms < 1e-12] = 1.0
    means /= norms

    def _split(n):
        y = rng.choice(c, size=n, p=weights)
        x = means[y] + cluster_spread * rng.standard_normal((n, d))
        return x.astype(np.float32), y.astype(np.int64)

    train_x, train_y = _split(n_train)
    test_x, test_y = _split(n_test)
    imbalanced = not np.allclose(weights, 1.0 / c, atol=1e-9)
    return DatasetBundle(
        name=name,
        train_x=train_x,
        train_y=train_y,
        test_x=test_x,
        test_y=test_y,
        num_classes=c,
        imbalanced=imbalanced,
    )
