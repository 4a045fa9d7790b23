"""HTTP sidecar for the nrpheno annotator: parses and contextual embeddings."""

from .embedder import (
    EmbedderConfig,
    TransformerEmbedder,
    build_default_embedder,
    read_synonym_kb,
    vocabulary_from_synonyms,
)
from .export import export_lexicon, read_vocabulary
from .finetune import FinetuneResult, finetune_sts, nearest_entity_accuracy
from .parser import PARSER_NAME, split_sentences, to_conllu
from .server import create_app, serve

__version__ = "0.1.0"

__all__ = [
    "EmbedderConfig",
    "FinetuneResult",
    "PARSER_NAME",
    "TransformerEmbedder",
    "build_default_embedder",
    "create_app",
    "export_lexicon",
    "finetune_sts",
    "nearest_entity_accuracy",
    "read_synonym_kb",
    "read_vocabulary",
    "serve",
    "split_sentences",
    "to_conllu",
]
