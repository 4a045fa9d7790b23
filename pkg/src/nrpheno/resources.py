"""Paths to the data files shipped with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

_FILES = {
    "kb": "sample_kb.nrkb",
    "lexicon_train_kb": "lexicon_train.nrkb",
    "toy_kb": "toy_synonyms.nrkb",
    "ontology": "hpo_mini.obo",
    "exclusions": "exclusions.txt",
    "canonical": "canonical_sentence.conllu",
    "corpus": "vitals_corpus.conllu",
    "corpus_gold": "vitals_corpus.gold.jsonl",
    "paraphrase": "paraphrase_corpus.conllu",
    "paraphrase_gold": "paraphrase_corpus.gold.jsonl",
    "lexicon": "lexicon.nremb",
}


def data_path(name: str) -> Path:
    """Filesystem path of a shipped data file, by short name or filename."""
    filename = _FILES.get(name, name)
    path = Path(str(resources.files("nrpheno").joinpath("data", filename)))
    if not path.exists():
        raise FileNotFoundError(f"no shipped data file {name!r} ({filename})")
    return path
