"""Unit inference, HPO assignment and whole-document annotation.

A linked (entity, value) resolves its unit either from an explicit hint or
by comparing the value's ratio to the extreme ends of each unit's normal
range (the smaller overshoot wins; an in-range unit wins outright). The
phenotype then follows deterministically: below the range affirms the low
concept, above affirms the high concept, inside negates the normal-range
concept; affirmed values falling in a granular band are refined to the
band's concept.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .embedding import Lexicon
from .extraction import (
    Document,
    ExclusionDict,
    extract_candidates,
    extract_numbers,
)
from .knowledge import KnowledgeBase, ReferenceRange
from .linking import DEFAULT_THRESHOLD, LinkResult, link, shallow_link
from .ontology import Ontology

AFFIRMED = "affirmed"
NEGATED = "negated"

# Accepted spellings of explicit unit hints found glued to numbers.
UNIT_ALIASES = {
    "f": "fahrenheit",
    "fahrenheit": "fahrenheit",
    "c": "celsius",
    "celsius": "celsius",
    "%": "%",
    "percent": "%",
    "bpm": "bpm",
}


class AssignmentError(Exception):
    pass


class UndefinedRatioError(AssignmentError):
    def __init__(self, value: float, unit: str):
        super().__init__(
            f"ratio undefined for value {value} against unit {unit!r} "
            "(non-positive denominator)"
        )


class MissingRangeError(AssignmentError):
    def __init__(self, entity_id: int, unit: str):
        super().__init__(f"entity {entity_id} has no reference range for unit {unit!r}")


@dataclass(frozen=True)
class Annotation:
    doc_id: str
    sent: int
    start: int
    end: int
    hpo_id: str
    hpo_name: str
    polarity: str
    entity_id: int
    value: float
    unit: str
    score: float


def unit_ratios(value: float, ranges: Sequence[ReferenceRange]) -> list[tuple[str, float]]:
    """Overshoot ratio of the value against each unit's normal range.

    Exactly 1 inside the range; value/upper above it; lower/value below it.
    Declaration order is preserved.
    """
    out: list[tuple[str, float]] = []
    for r in ranges:
        if r.lower <= value <= r.upper:
            out.append((r.unit, 1.0))
        elif value > r.upper:
            if r.upper <= 0:
                raise UndefinedRatioError(value, r.unit)
            out.append((r.unit, value / r.upper))
        else:
            if value <= 0:
                raise UndefinedRatioError(value, r.unit)
            out.append((r.unit, r.lower / value))
    return out


def infer_unit(
    value: float, ranges: Sequence[ReferenceRange], unit_hint: str | None = None
) -> str:
    """Resolve the measurement unit for a value.

    A recognizable explicit hint wins regardless of the value; otherwise
    the unit with the smallest overshoot ratio is chosen, ties going to
    the earlier-declared unit.
    """
    if not ranges:
        raise AssignmentError("no reference ranges to infer a unit from")
    known_units = [r.unit for r in ranges]
    if unit_hint:
        canonical = UNIT_ALIASES.get(unit_hint.lower(), unit_hint.lower())
        if canonical in known_units:
            return canonical
    ratios = unit_ratios(value, ranges)
    best_unit, best_ratio = ratios[0]
    for unit, ratio in ratios[1:]:
        if ratio < best_ratio:
            best_unit, best_ratio = unit, ratio
    return best_unit


def assign_hpo(
    entity_id: int, value: float, unit: str, kb: KnowledgeBase
) -> tuple[str, str]:
    """Map (entity, value, unit) to an (hpo_id, polarity) pair.

    Affirmed assignments falling inside a granular band (same unit) are
    substituted with the band's finer concept; in-range values negate the
    normal-range concept and never granularize.
    """
    rng = kb.range_for(entity_id, unit)
    if rng is None:
        raise MissingRangeError(entity_id, unit)
    triple = kb.triple_for(entity_id)
    if value < rng.lower:
        hpo, polarity = triple.below_hpo, AFFIRMED
    elif value > rng.upper:
        hpo, polarity = triple.above_hpo, AFFIRMED
    else:
        return triple.normal_hpo, NEGATED
    for band in kb.bands_for(hpo, unit):
        if band.lower <= value <= band.upper:
            return band.granular_hpo, polarity
    return hpo, polarity


def _span(document: Document, sent_index: int, result: LinkResult) -> tuple[int, int]:
    sentence = document.sentences[sent_index]
    num_tok = sentence.token(result.number.token_index)
    toks = [sentence.token(i) for i in result.winning_candidate.token_indices]
    toks.append(num_tok)
    return min(t.start for t in toks), max(t.end for t in toks)


def annotate_document(
    document: Document,
    kb: KnowledgeBase,
    ontology: Ontology,
    lexicon: Lexicon | None,
    entity_embeddings: Mapping[int, np.ndarray] | None,
    threshold: float = DEFAULT_THRESHOLD,
    exclusions: ExclusionDict | None = None,
    linker: str = "embedding",
) -> list[Annotation]:
    """Full pipeline for one document: numbers -> candidates -> link -> assign.

    Unlinked numbers produce nothing. Output is ordered by (sentence, token
    index, slash component). linker is "embedding" (default) or "shallow";
    the shallow mode needs no lexicon.
    """
    if linker not in ("embedding", "shallow"):
        raise ValueError(f"unknown linker {linker!r}")
    if linker == "embedding" and (lexicon is None or entity_embeddings is None):
        raise ValueError("embedding linker requires a lexicon and entity embeddings")
    annotations: list[Annotation] = []
    for sentence in document.sentences:
        numbers = extract_numbers(sentence, exclusions)
        for number in numbers:
            cset = extract_candidates(sentence, number)
            if linker == "embedding":
                result = link(cset, entity_embeddings, lexicon, threshold)
            else:
                result = shallow_link(cset, kb)
            if result is None:
                continue
            ranges = kb.ranges_for(result.entity_id)
            unit = infer_unit(number.value, ranges, number.unit_hint)
            hpo_id, polarity = assign_hpo(result.entity_id, number.value, unit, kb)
            start, end = _span(document, sentence.index, result)
            annotations.append(
                Annotation(
                    doc_id=document.doc_id,
                    sent=sentence.index,
                    start=start,
                    end=end,
                    hpo_id=hpo_id,
                    hpo_name=ontology.name(hpo_id),
                    polarity=polarity,
                    entity_id=result.entity_id,
                    value=number.value,
                    unit=unit,
                    score=result.score,
                )
            )
    annotations.sort(key=lambda a: (a.sent, a.start, a.end))
    return annotations


def write_annotations(annotations: Iterable[Annotation], fp: IO[str]) -> int:
    """Write annotations as JSON lines in the documented field order."""
    n = 0
    for a in annotations:
        fp.write(json.dumps(asdict(a), ensure_ascii=False) + "\n")
        n += 1
    return n


def read_annotations(fp: IO[str]) -> list[Annotation]:
    out = []
    for line in fp:
        line = line.strip()
        if not line:
            continue
        out.append(Annotation(**json.loads(line)))
    return out
