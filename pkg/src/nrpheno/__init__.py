"""Numerical-reasoning phenotype annotation for clinical text."""

from .assignment import (
    Annotation,
    annotate_document,
    assign_hpo,
    infer_unit,
    read_annotations,
    unit_ratios,
    write_annotations,
)
from .embedding import (
    Lexicon,
    TrainConfig,
    TrainingPair,
    embed_phrase,
    load_lexicon,
    reference_embeddings,
    save_lexicon,
    sts_loss,
    train_lexicon,
)
from .evaluation import Metrics, evaluate_exact, evaluate_generalized, read_labeled
from .extraction import (
    Candidate,
    CandidateSet,
    Document,
    ExclusionDict,
    NumberMention,
    Sentence,
    Token,
    extract_candidates,
    extract_numbers,
    load_exclusions,
    parse_conllu,
)
from .knowledge import KnowledgeBase, load_kb, store_kb, validate_kb
from .linking import LinkResult, link, link_all, shallow_link
from .ontology import Ontology, parse_ontology
from .resources import data_path

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "Candidate",
    "CandidateSet",
    "Document",
    "ExclusionDict",
    "KnowledgeBase",
    "Lexicon",
    "LinkResult",
    "Metrics",
    "NumberMention",
    "Ontology",
    "Sentence",
    "Token",
    "TrainConfig",
    "TrainingPair",
    "annotate_document",
    "assign_hpo",
    "data_path",
    "embed_phrase",
    "evaluate_exact",
    "evaluate_generalized",
    "extract_candidates",
    "extract_numbers",
    "infer_unit",
    "link",
    "link_all",
    "load_exclusions",
    "load_kb",
    "load_lexicon",
    "parse_conllu",
    "parse_ontology",
    "read_annotations",
    "read_labeled",
    "reference_embeddings",
    "save_lexicon",
    "shallow_link",
    "store_kb",
    "sts_loss",
    "train_lexicon",
    "unit_ratios",
    "validate_kb",
    "write_annotations",
]
