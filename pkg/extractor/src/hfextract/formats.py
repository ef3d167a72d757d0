"""Writers for the engine's on-disk interfaces.

The consuming engine reads two fixed little-endian binary containers and
a block-text manifest; this module implements those wire formats exactly
(magic, u16 version, u64 row count, u32 width, then the payload) without
depending on the engine package.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

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


def _atomic_write(path, blob: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


def write_features(x: np.ndarray, destination) -> None:
    x = np.asarray(x)
    if x.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("feature matrix contains NaN or Inf")
    header = FEATURE_MAGIC + struct.pack("<HQI", FORMAT_VERSION, x.shape[0], x.shape[1])
    _atomic_write(destination, header + np.ascontiguousarray(x, dtype="<f4").tobytes())


def write_labels(labels: np.ndarray, num_classes: int, destination) -> None:
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError(f"label vector must be 1-D, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"labels outside [0, {num_classes})")
    header = LABEL_MAGIC + struct.pack("<HQI", FORMAT_VERSION, labels.shape[0], num_classes)
    _atomic_write(destination, header + np.ascontiguousarray(labels, dtype="<u4").tobytes())


def _parse_manifest_blocks(text: str) -> list[dict]:
    blocks, current = [], {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            if current:
                blocks.append(current)
                current = {}
            continue
        if line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        current[key.strip()] = value.strip()
    if current:
        blocks.append(current)
    return blocks


def update_manifest(manifest_path, entry: dict) -> None:
    """Insert or replace one dataset block in a manifest file."""
    missing = [k for k in MANIFEST_KEYS if k not in entry]
    if missing:
        raise ValueError(f"manifest entry missing keys: {missing}")
    manifest_path = Path(manifest_path)
    blocks = []
    if manifest_path.exists():
        blocks = [
            b for b in _parse_manifest_blocks(manifest_path.read_text())
            if b.get("name") != entry["name"]
        ]
    blocks.append({k: str(entry[k]) for k in MANIFEST_KEYS})
    chunks = ["\n".join(f"{k} = {v}" for k, v in block.items()) for block in blocks]
    manifest_path.write_text("\n\n".join(chunks) + "\n")
