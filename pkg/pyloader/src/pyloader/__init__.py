"""Thin consumer of generated size-adjective manifests: loading + recheck."""
from .loader import (
    MANIFEST_FORMAT,
    OBJECT_HEAD,
    SCHEMA_VERSION,
    SPLITS,
    Dataset,
    DegenerateReferenceError,
    LoadedDatapoint,
    LoaderError,
    MissingImageError,
    Scene,
    SceneObject,
    SchemaMismatchError,
    open_dataset,
    recheck_truth,
)

__version__ = "0.1.0"

__all__ = [
    "MANIFEST_FORMAT",
    "OBJECT_HEAD",
    "SCHEMA_VERSION",
    "SPLITS",
    "Dataset",
    "DegenerateReferenceError",
    "LoadedDatapoint",
    "LoaderError",
    "MissingImageError",
    "Scene",
    "SceneObject",
    "SchemaMismatchError",
    "open_dataset",
    "recheck_truth",
    "__version__",
]
