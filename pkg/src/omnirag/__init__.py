"""omnirag: multimodal document ingestion, hybrid retrieval, and RAG."""

__version__ = "0.1.0"

from .core import (
    DEFAULT_PLACEHOLDER,
    Modality,
    MultimodalSample,
    PlaceholderConfig,
    derive_doc_id,
    deserialize_sample,
    serialize_sample,
    validate_sample,
)

__all__ = [
    "DEFAULT_PLACEHOLDER",
    "Modality",
    "MultimodalSample",
    "PlaceholderConfig",
    "derive_doc_id",
    "deserialize_sample",
    "serialize_sample",
    "validate_sample",
    "__version__",
]
