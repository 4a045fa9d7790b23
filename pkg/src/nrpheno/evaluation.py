"""Micro-averaged exact and generalized precision/recall/F1.

Both scorers pool true/false positives over all documents. Generalized
scoring first extends every (doc, hpo, polarity) triple with the concept's
ancestors up to (excluding) the phenotypic-abnormality root, carrying the
polarity onto the ancestors, then applies the exact metrics to the closed
sets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable

from .ontology import Ontology

LabeledTriple = tuple[str, str, str]  # (doc_id, hpo_id, polarity)


class EvaluationError(Exception):
    pass


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


def _metrics(tp: int, fp: int, fn: int) -> Metrics:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return Metrics(precision, recall, f1, tp, fp, fn)


def evaluate_exact(gold: set[LabeledTriple], pred: set[LabeledTriple]) -> Metrics:
    """Set intersection scoring over pooled (doc, hpo, polarity) triples."""
    tp = len(gold & pred)
    return _metrics(tp, len(pred - gold), len(gold - pred))


def closure(labeled: set[LabeledTriple], ontology: Ontology) -> set[LabeledTriple]:
    """Extend each triple with its HPO ancestors, preserving polarity."""
    out = set(labeled)
    for doc_id, hpo_id, polarity in labeled:
        if hpo_id not in ontology:
            raise EvaluationError(f"unknown HPO id {hpo_id!r}")
        for anc in ontology.ancestors(hpo_id):
            out.add((doc_id, anc, polarity))
    return out


def evaluate_generalized(
    gold: set[LabeledTriple], pred: set[LabeledTriple], ontology: Ontology
) -> Metrics:
    """Exact metrics applied to the ancestor-closed gold and prediction sets."""
    return evaluate_exact(closure(gold, ontology), closure(pred, ontology))


def strip_polarity(labeled: set[LabeledTriple]) -> set[LabeledTriple]:
    """Collapse polarity for comparison with polarity-blind baselines."""
    return {(doc, hpo, "") for doc, hpo, _ in labeled}


def read_labeled(fp: IO[str]) -> set[LabeledTriple]:
    """Read a JSONL file of {doc_id, hpo_id, polarity} objects as a set.

    polarity defaults to "affirmed" when absent; extra fields are ignored,
    so annotation output files load directly.
    """
    out: set[LabeledTriple] = set()
    for lineno, line in enumerate(fp, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise EvaluationError(f"line {lineno}: bad JSON ({exc})") from None
        try:
            doc_id, hpo_id = obj["doc_id"], obj["hpo_id"]
        except KeyError as exc:
            raise EvaluationError(f"line {lineno}: missing field {exc}") from None
        out.add((str(doc_id), str(hpo_id), str(obj.get("polarity", "affirmed"))))
    return out


def metrics_json(mode: str, m: Metrics) -> str:
    return json.dumps(
        {
            "mode": mode,
            "precision": m.precision,
            "recall": m.recall,
            "f1": m.f1,
            "tp": m.tp,
            "fp": m.fp,
            "fn": m.fn,
        }
    )


def metrics_table(rows: Iterable[tuple[str, Metrics]]) -> str:
    """Aligned plain-text table, metrics printed to 4 decimals."""
    header = f"{'mode':<12} {'precision':>9} {'recall':>9} {'f1':>9} {'tp':>6} {'fp':>6} {'fn':>6}"
    lines = [header]
    for mode, m in rows:
        lines.append(
            f"{mode:<12} {m.precision:>9.4f} {m.recall:>9.4f} {m.f1:>9.4f} "
            f"{m.tp:>6d} {m.fp:>6d} {m.fn:>6d}"
        )
    return "\n".join(lines)
