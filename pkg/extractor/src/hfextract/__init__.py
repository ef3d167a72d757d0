"""hfextract: hub datasets -> frozen-encoder embeddings -> engine files."""

from .catalog import CATALOG, DatasetSpec, dataset_spec
from .encoders import HashedStubEncoder, TransformerClsEncoder
from .extract import ExtractionJob, SplitData, extract, load_from_hub
from .formats import update_manifest, write_features, write_labels

__version__ = "0.1.0"

__all__ = [
    "CATALOG",
    "DatasetSpec",
    "dataset_spec",
    "HashedStubEncoder",
    "TransformerClsEncoder",
    "ExtractionJob",
    "SplitData",
    "extract",
    "load_from_hub",
    "update_manifest",
    "write_features",
    "write_labels",
    "__version__",
]
