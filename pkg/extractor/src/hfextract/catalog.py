"""Catalog of the supported classification datasets.

Each entry records where the dataset lives on the hub, which fields carry
the text (single sentence or a pair joined by the encoder's separator),
which field carries the label, which splits to export, and the class
count.  ``expected_train``/``expected_test`` are advisory row counts used
to flag upstream schema drift; None means the count is not pinned.

Datasets without a public test split export their validation split as the
test side.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    hub_path: str
    hub_config: str | None
    text_fields: tuple  # one field, or (field_a, field_b) for pair tasks
    label_field: str
    train_split: str
    test_split: str
    num_classes: int
    imbalanced: bool
    expected_train: int | None
    expected_test: int | None
    label_names: tuple | None = None  # for string-labelled upstreams


CATALOG = {
    spec.name: spec
    for spec in (
        DatasetSpec(
            name="agnews",
            hub_path="ag_news",
            hub_config=None,
            text_fields=("text",),
            label_field="label",
            train_split="train",
            test_split="test",
            num_classes=4,
            imbalanced=False,
            expected_train=120_000,
            expected_test=7_600,
        ),
        DatasetSpec(
            name="banking77",
            hub_path="banking77",
            hub_config=None,
            text_fields=("text",),
            label_field="label",
            train_split="train",
            test_split="test",
            num_classes=77,
            imbalanced=False,
            expected_train=None,
            expected_test=3_000,
        ),
        DatasetSpec(
            name="dbpedia",
            hub_path="dbpedia_14",
            hub_config=None,
            text_fields=("content",),
            label_field="label",
            train_split="train",
            test_split="test",
            num_classes=14,
            imbalanced=False,
            expected_train=560_000,
            expected_test=None,
        ),
        DatasetSpec(
            name="fnc1",
            hub_path="nid989/FNC-1",
            hub_config=None,
            # upstream card order: headline first, then the article body
            text_fields=("Headline", "articleBody"),
            label_field="Stance",
            train_split="train",
            test_split="test",
            num_classes=4,
            imbalanced=True,
            expected_train=None,
            expected_test=4_998,
            label_names=("unrelated", "discuss", "agree", "disagree"),
        ),
        DatasetSpec(
            name="mnli",
            hub_path="multi_nli",
            hub_config=None,
            text_fields=("premise", "hypothesis"),
            label_field="label",
            train_split="train",
            test_split="validation_matched",  # no public test labels
            num_classes=3,
            imbalanced=False,
            expected_train=None,
            expected_test=9_815,
        ),
        DatasetSpec(
            name="qnli",
            hub_path="glue",
            hub_config="qnli",
            text_fields=("question", "sentence"),
            label_field="label",
            train_split="train",
            test_split="validation",
            num_classes=2,
            imbalanced=False,
            expected_train=None,
            expected_test=5_463,
        ),
        DatasetSpec(
            name="sst2",
            hub_path="sst2",
            hub_config=None,
            text_fields=("sentence",),
            label_field="label",
            train_split="train",
            test_split="validation",
            num_classes=2,
            imbalanced=False,
            expected_train=None,
            expected_test=872,
        ),
        DatasetSpec(
            name="trec6",
            hub_path="trec",
            hub_config=None,
            text_fields=("text",),
            label_field="coarse_label",
            train_split="train",
            test_split="test",
            num_classes=6,
            imbalanced=False,
            expected_train=5_452,
            expected_test=500,
        ),
        DatasetSpec(
            name="wikitalk",
            hub_path="jigsaw_toxicity_pred",
            hub_config=None,
            text_fields=("comment_text",),
            label_field="toxic",
            train_split="train",
            test_split="test",
            num_classes=2,
            imbalanced=True,
            expected_train=None,
            expected_test=None,
        ),
        DatasetSpec(
            name="yelp5",
            hub_path="yelp_review_full",
            hub_config=None,
            text_fields=("text",),
            label_field="label",
            train_split="train",
            test_split="test",
            num_classes=5,
            imbalanced=False,
            expected_train=650_000,
            expected_test=50_000,
        ),
    )
}


def dataset_spec(name: str) -> DatasetSpec:
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(
            f"unknown dataset {name!r}; supported: {sorted(CATALOG)}"
        ) from None
