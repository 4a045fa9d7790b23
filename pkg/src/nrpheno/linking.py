"""Candidate-to-entity linking by embedding cosine, plus a keyword fallback.

The embedding linker scores the Cartesian product of candidate embeddings
and entity reference embeddings, taking the best pair at or above the
threshold. Each number's candidate set is linked independently, so one
sentence can yield several entities. The shallow linker is an exact-string
ablation against names, abbreviations and listed synonyms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .embedding import Lexicon, ZeroNormError, cosine, embed_phrase
from .extraction import Candidate, CandidateSet, NumberMention
from .knowledge import KnowledgeBase

DEFAULT_THRESHOLD = 0.9


@dataclass(frozen=True)
class LinkResult:
    number: NumberMention
    entity_id: int
    winning_candidate: Candidate
    score: float


def link(
    candidate_set: CandidateSet,
    entity_embeddings: Mapping[int, np.ndarray],
    lexicon: Lexicon,
    threshold: float = DEFAULT_THRESHOLD,
) -> LinkResult | None:
    """Best (candidate, entity) cosine pair, or None below the threshold.

    Ties break by higher score, then lower entity id, then lower candidate
    token index, making the result deterministic.
    """
    if not entity_embeddings:
        raise ValueError("entity_embeddings must be non-empty")
    best_key: tuple[float, int, int] | None = None
    best: LinkResult | None = None
    for cand in candidate_set.candidates:
        try:
            v = embed_phrase(lexicon, cand.phrase)
        except ZeroNormError:
            continue
        if float(np.linalg.norm(v)) == 0.0:
            continue
        for eid in sorted(entity_embeddings):
            try:
                score = cosine(v, entity_embeddings[eid], what=cand.phrase)
            except ZeroNormError:
                continue  # degenerate reference embedding: skip the pair
            key = (score, -eid, -cand.head_token_index)
            if best_key is None or key > best_key:
                best_key = key
                best = LinkResult(candidate_set.number, eid, cand, score)
    if best is not None and best.score >= threshold:
        return best
    return None


def link_all(
    candidate_sets: Iterable[CandidateSet],
    entity_embeddings: Mapping[int, np.ndarray],
    lexicon: Lexicon,
    threshold: float = DEFAULT_THRESHOLD,
) -> list[LinkResult]:
    """link() applied per candidate set independently, order preserved."""
    out = []
    for cset in candidate_sets:
        result = link(cset, entity_embeddings, lexicon, threshold)
        if result is not None:
            out.append(result)
    return out


def shallow_link(candidate_set: CandidateSet, kb: KnowledgeBase) -> LinkResult | None:
    """Exact lowercase string match against names, abbreviations, synonyms.

    First match by candidate order wins; score is fixed at 1.0.
    """
    for cand in candidate_set.candidates:
        phrase = cand.phrase
        for entity in sorted(kb.entities, key=lambda e: e.entity_id):
            if (
                phrase == entity.name
                or phrase == entity.abbreviation
                or phrase in kb.synonyms_for(entity.entity_id)
            ):
                return LinkResult(candidate_set.number, entity.entity_id, cand, 1.0)
    return None
