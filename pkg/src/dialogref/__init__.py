"""Reference resolution and query rewriting for multi-turn assistant requests.

Two independent paths read one frozen dialog snapshot: a rewriter that makes
the latest query context-free, and a detector + resolver that links referring
expressions to screen, conversational and background entities.
"""

from .core import (
    BoundingBox, Category, ContextError, ContextSnapshot, ConversationTurn, DialogStore, Entity,
    EntityLocation, Mention, Provenance, Resolution, RewriteClass, Source, Speaker, UnderstandingOutput,
)
from .pipeline import Models, Pipeline, PipelineConfig, process, process_batch

__all__ = [
    "BoundingBox", "Category", "ContextError", "ContextSnapshot", "ConversationTurn", "DialogStore",
    "Entity", "EntityLocation", "Mention", "Provenance", "Resolution", "RewriteClass", "Source",
    "Speaker", "UnderstandingOutput", "Models", "Pipeline", "PipelineConfig", "process", "process_batch",
]
