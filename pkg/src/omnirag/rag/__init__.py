from .engine import (
    DEFAULT_TEMPLATE,
    EchoGenerator,
    ExtractiveGenerator,
    Generator,
    PromptTemplate,
    RagRequest,
    RagResponse,
    RemoteGenerator,
    answer,
    run_batch,
)
from .service import RagService

__all__ = [
    "DEFAULT_TEMPLATE",
    "EchoGenerator",
    "ExtractiveGenerator",
    "Generator",
    "PromptTemplate",
    "RagRequest",
    "RagResponse",
    "RagService",
    "RemoteGenerator",
    "answer",
    "run_batch",
]
