"""The extraction pipeline: hub split -> frozen encoder -> engine files.

``extract`` fetches the dataset's train/test splits, encodes every
instance, writes the four binary files, and inserts a manifest block the
engine can load directly.  The dataset source and the encoder are both
injectable; the defaults pull from the public hub and a frozen
transformer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .catalog import DatasetSpec, dataset_spec
from .encoders import TransformerClsEncoder
from .formats import update_manifest, write_features, write_labels

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtractionJob:
    dataset: str
    encoder: str = "distilbert-base-uncased"
    out_dir: Path = Path("data")
    max_length: int = 512
    batch_size: int = 32
    device: str = "cpu"
    # optional (train, test) hub split-name override; None = catalog default
    splits: tuple | None = None

    def __post_init__(self):
        dataset_spec(self.dataset)  # validates the id
        if self.splits is not None and len(self.splits) != 2:
            raise ValueError("splits override must name (train, test)")
        object.__setattr__(self, "out_dir", Path(self.out_dir))


@dataclass(frozen=True)
class SplitData:
    """Raw text rows of one split: texts, optional pair texts, labels."""

    texts: list
    pairs: list | None
    labels: np.ndarray


def load_from_hub(job: ExtractionJob, spec: DatasetSpec) -> dict:
    """Fetch both splits of a catalog dataset from the hub."""
    from datasets import load_dataset

    train_split, test_split = job.splits or (spec.train_split, spec.test_split)
    out = {}
    for side, split_name in (("train", train_split), ("test", test_split)):
        ds = load_dataset(spec.hub_path, spec.hub_config, split=split_name)
        texts = list(ds[spec.text_fields[0]])
        pairs = list(ds[spec.text_fields[1]]) if len(spec.text_fields) == 2 else None
        labels = _coerce_labels(ds[spec.label_field], spec)
        out[side] = SplitData(texts=texts, pairs=pairs, labels=labels)
    return out


def _coerce_labels(raw, spec: DatasetSpec) -> np.ndarray:
    values = list(raw)
    if values and isinstance(values[0], str):
        if spec.label_names is None:
            raise ValueError(f"{spec.name}: string labels but no label_names in catalog")
        mapping = {name: i for i, name in enumerate(spec.label_names)}
        try:
            values = [mapping[v] for v in values]
        except KeyError as exc:
            raise ValueError(f"{spec.name}: unexpected label value {exc}") from None
    return np.asarray(values, dtype=np.int64)


def _check_rows(spec: DatasetSpec, side: str, got: int) -> None:
    expected = spec.expected_train if side == "train" else spec.expected_test
    if expected is not None and got != expected:
        logger.warning(
            "%s %s split has %d rows, catalog expects %d (upstream drift?)",
            spec.name, side, got, expected,
        )


def extract(job: ExtractionJob, source=None, encoder=None) -> dict:
    """Run one extraction job; returns the manifest entry that was written.

    ``source(job, spec) -> {"train": SplitData, "test": SplitData}``
    defaults to the hub loader; ``encoder`` must offer
    ``encode(texts, pairs) -> float32 array`` and defaults to the frozen
    transformer named by the job.
    """
    spec = dataset_spec(job.dataset)
    if source is None:
        source = load_from_hub
    if encoder is None:
        encoder = TransformerClsEncoder(
            model_id=job.encoder,
            max_length=job.max_length,
            batch_size=job.batch_size,
            device=job.device,
        )

    splits = source(job, spec)
    job.out_dir.mkdir(parents=True, exist_ok=True)
    entry = {
        "name": spec.name,
        "train_features": f"{spec.name}.train.aglf",
        "train_labels": f"{spec.name}.train.agll",
        "test_features": f"{spec.name}.test.aglf",
        "test_labels": f"{spec.name}.test.agll",
        "num_classes": spec.num_classes,
        "imbalanced": "true" if spec.imbalanced else "false",
    }

    for side in ("train", "test"):
        data = splits[side]
        n = len(data.texts)
        if data.labels.shape[0] != n:
            raise ValueError(f"{spec.name} {side}: {n} texts but {data.labels.shape[0]} labels")
        _check_rows(spec, side, n)
        vectors = encoder.encode(data.texts, data.pairs)
        if vectors.shape[0] != n:
            raise ValueError(
                f"{spec.name} {side}: encoder returned {vectors.shape[0]} rows for {n} texts"
            )
        logger.info("%s %s: %d rows, width %d", spec.name, side, n, vectors.shape[1])
        write_features(vectors, job.out_dir / entry[f"{side}_features"])
        write_labels(data.labels, spec.num_classes, job.out_dir / entry[f"{side}_labels"])

    update_manifest(job.out_dir / "manifest.txt", entry)
    return entry
