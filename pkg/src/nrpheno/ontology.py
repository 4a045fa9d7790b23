"""Minimal HPO ontology: term parsing and ancestor closure.

Two input formats are accepted: minimal OBO (``[Term]`` stanzas with
``id:``, ``name:`` and ``is_a:`` lines) and a TSV edge-list fallback with
lines ``child_id<TAB>parent_id<TAB>child_name`` (empty parent_id for
parentless terms). Ancestor queries stop below the generalization root
HP:0000118: the root itself, anything above it, and branches that never
reach it are excluded.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

GENERALIZATION_ROOT = "HP:0000118"
_ROOT_NAME = "Phenotypic abnormality"
_ID_PATTERN = re.compile(r"^HP:\d{7}$")


class OntologyError(Exception):
    pass


@dataclass(frozen=True)
class HpoTerm:
    hpo_id: str
    name: str
    parent_ids: tuple[str, ...]


class Ontology:
    """Immutable term map with memoized ancestor closure.

    The memo table only caches pure results, so concurrent readers may race
    on fills without harm.
    """

    def __init__(self, terms: dict[str, HpoTerm]):
        if GENERALIZATION_ROOT not in terms:
            terms = dict(terms)
            terms[GENERALIZATION_ROOT] = HpoTerm(GENERALIZATION_ROOT, _ROOT_NAME, ())
        self._terms = terms
        self._check_ids()
        self._check_parents()
        self._check_acyclic()
        self._closure_memo: dict[str, frozenset[str]] = {}
        self._under_root_memo: dict[str, bool] = {}

    def _check_ids(self) -> None:
        for hid in self._terms:
            if not _ID_PATTERN.match(hid):
                raise OntologyError(f"bad HPO id {hid!r} (expected HP:NNNNNNN)")

    def _check_parents(self) -> None:
        for term in self._terms.values():
            for pid in term.parent_ids:
                if pid not in self._terms:
                    raise OntologyError(
                        f"dangling parent reference: {term.hpo_id} is_a {pid}, "
                        f"but {pid} is not defined"
                    )

    def _check_acyclic(self) -> None:
        WHITE, GREY, BLACK = 0, 1, 2
        color = {hid: WHITE for hid in self._terms}
        for start in sorted(self._terms):
            if color[start] != WHITE:
                continue
            stack: list[tuple[str, int]] = [(start, 0)]
            path = [start]
            color[start] = GREY
            while stack:
                node, i = stack[-1]
                parents = self._terms[node].parent_ids
                if i < len(parents):
                    stack[-1] = (node, i + 1)
                    nxt = parents[i]
                    if color[nxt] == GREY:
                        cycle = path[path.index(nxt):] + [nxt]
                        raise OntologyError("cycle detected: " + " -> ".join(cycle))
                    if color[nxt] == WHITE:
                        color[nxt] = GREY
                        stack.append((nxt, 0))
                        path.append(nxt)
                else:
                    color[node] = BLACK
                    stack.pop()
                    path.pop()

    def __contains__(self, hpo_id: str) -> bool:
        return hpo_id in self._terms

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def terms(self) -> dict[str, HpoTerm]:
        return dict(self._terms)

    def term(self, hpo_id: str) -> HpoTerm:
        try:
            return self._terms[hpo_id]
        except KeyError:
            raise OntologyError(f"unknown HPO id {hpo_id!r}") from None

    def name(self, hpo_id: str) -> str:
        return self.term(hpo_id).name

    def _full_closure(self, hpo_id: str) -> frozenset[str]:
        memo = self._closure_memo
        cached = memo.get(hpo_id)
        if cached is not None:
            return cached
        out: set[str] = set()
        for pid in self._terms[hpo_id].parent_ids:
            out.add(pid)
            out |= self._full_closure(pid)
        result = frozenset(out)
        memo[hpo_id] = result
        return result

    def _under_root(self, hpo_id: str) -> bool:
        memo = self._under_root_memo
        cached = memo.get(hpo_id)
        if cached is not None:
            return cached
        result = GENERALIZATION_ROOT in self._full_closure(hpo_id)
        memo[hpo_id] = result
        return result

    def ancestors(self, hpo_id: str) -> frozenset[str]:
        """Transitive ancestors strictly below the generalization root.

        Excludes hpo_id itself, HP:0000118, everything above it, and any
        ancestor from a branch that does not reach HP:0000118.
        """
        self.term(hpo_id)  # raises on unknown id
        return frozenset(
            a
            for a in self._full_closure(hpo_id)
            if a != GENERALIZATION_ROOT and self._under_root(a)
        )


def _parse_obo(text: str) -> dict[str, HpoTerm]:
    terms: dict[str, HpoTerm] = {}
    cur_id: str | None = None
    cur_name = ""
    cur_parents: list[str] = []
    in_term = False

    def flush() -> None:
        nonlocal cur_id, cur_name, cur_parents
        if cur_id is not None:
            if cur_id in terms:
                raise OntologyError(f"duplicate term {cur_id}")
            terms[cur_id] = HpoTerm(cur_id, cur_name, tuple(cur_parents))
        cur_id, cur_name, cur_parents = None, "", []

    for raw in text.split("\n"):
        line = raw.strip()
        if line.startswith("["):
            flush()
            in_term = line == "[Term]"
            continue
        if not in_term or not line or line.startswith("!"):
            continue
        key, _, value = line.partition(":")
        value = value.strip()
        key = key.strip()
        if key == "id":
            cur_id = value
        elif key == "name":
            cur_name = value
        elif key == "is_a":
            cur_parents.append(value.split("!")[0].strip())
        # other OBO keys are out of scope and ignored
    flush()
    return terms


def _parse_tsv(text: str) -> dict[str, HpoTerm]:
    names: dict[str, str] = {}
    parents: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise OntologyError(f"line {lineno}: expected child<TAB>parent<TAB>name")
        child, parent, name = (f.strip() for f in fields)
        if child not in names or not names[child]:
            names[child] = name
        plist = parents.setdefault(child, [])
        if parent and parent not in plist:
            plist.append(parent)
    return {
        child: HpoTerm(child, names[child], tuple(parents[child])) for child in names
    }


def parse_ontology(path: str | Path) -> Ontology:
    """Parse an ontology file, sniffing OBO vs TSV from the content."""
    text = Path(path).read_text(encoding="utf-8")
    if "[Term]" in text:
        terms = _parse_obo(text)
    else:
        terms = _parse_tsv(text)
    if not terms:
        raise OntologyError("no terms defined")
    return Ontology(terms)
