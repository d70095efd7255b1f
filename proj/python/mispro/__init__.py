"""PCA-based hierarchical mispronunciation detection."""

from ._mispro import (
    Bundle,
    DataError,
    Eigenspace,
    MisproError,
    NumericalError,
    UsageError,
    bundle_from_bytes,
    detect,
    extract_features,
    fit_threshold,
    load_bundle,
    loo,
    preprocess,
    read_wav,
    reference_spec_json,
    synthesize,
    train,
    train_eigenspace,
)

__all__ = [
    "Bundle",
    "DataError",
    "Eigenspace",
    "MisproError",
    "NumericalError",
    "UsageError",
    "bundle_from_bytes",
    "detect",
    "extract_features",
    "fit_threshold",
    "load_bundle",
    "loo",
    "preprocess",
    "read_wav",
    "reference_spec_json",
    "synthesize",
    "train",
    "train_eigenspace",
]
