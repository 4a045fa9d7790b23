"""Deterministic rule-based dependency parser emitting CoNLL-U.

A lexicon-plus-heuristics tagger and a small set of attachment rules
tuned for clinical measurement prose ("temperature was 98.6F on
admission.", "pulse of 110 was noted."). Output is always a well-formed
single-root tree in standard 10-column CoNLL-U, with ``# newdoc id``,
``# sent_id`` and ``# text`` comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

PARSER_NAME = "nrsidecar-rule-parser/0.1"

_PUNCT_CHARS = ".,;:!?()[]\"'"

_DETS = {"a", "an", "the", "this", "these", "those", "each", "every", "no", "some", "any"}
_COPULAS = {"is", "are", "was", "were", "be", "been", "being", "am"}
_AUX_OTHER = {"will", "would", "can", "could", "shall", "should", "may", "might", "must",
              "do", "does", "did"}
_ADPS = {"of", "in", "on", "at", "to", "with", "by", "for", "from", "into", "under",
         "over", "after", "before", "during", "without", "per", "since", "within"}
_PRON_POSS = {"her", "his", "their", "its", "my", "our", "your"}
_PRON_OTHER = {"she", "he", "it", "they", "i", "we", "you", "him", "them", "who"}
_CCONJ = {"and", "or", "but", "nor"}
_ADVS = {"not", "also", "very", "too", "overnight", "today", "yesterday", "now",
         "then", "still", "again", "never", "currently", "recently", "here", "there"}
_ADJS = {"stable", "normal", "abnormal", "high", "low", "mild", "moderate", "severe",
         "acute", "chronic", "afebrile", "febrile", "elevated", "reduced", "bibasilar",
         "scant", "oral", "room", "new", "old", "significant"}
_VERBS = {"has", "have", "had", "increased", "decreased", "dropped", "spiked", "rose",
          "fell", "improved", "worsened", "noted", "observed", "recorded", "measured",
          "checked", "admitted", "required", "begun", "started", "denied", "reported",
          "found", "presented", "remains", "remained", "shows", "showed", "show",
          "reveals", "revealed", "continues", "continued", "documented", "obtained",
          "discharged", "transferred", "given", "taken", "seen", "felt", "states",
          "stated", "complained", "developed", "returned", "resolved"}
_PARTICIPLES = {"noted", "observed", "recorded", "measured", "checked", "admitted",
                "begun", "started", "found", "given", "taken", "seen", "documented",
                "obtained", "discharged", "transferred", "reported", "elevated",
                "reduced", "increased", "decreased"}

_NUM_RE = re.compile(r"^[+-]?\d+(?:\.\d+)?(?:[A-Za-z%]{1,12})?$")
_SLASH_NUM_RE = re.compile(r"^\d+(?:\.\d+)?(?:/\d+(?:\.\d+)?)+$")
_DATE_RE = re.compile(r"^\d{1,4}[/-]\d{1,4}[/-]\d{1,4}$")
_ALNUM_RE = re.compile(r"^[A-Za-z]{1,12}\d+(?:\.\d+)?$")

_LEMMA_MAP = {
    "was": "be", "were": "be", "is": "be", "are": "be", "been": "be", "being": "be",
    "am": "be", "has": "have", "had": "have", "begun": "begin", "noted": "note",
    "increased": "increase", "decreased": "decrease", "dropped": "drop",
    "spiked": "spike", "observed": "observe", "recorded": "record",
    "measured": "measure", "checked": "check", "admitted": "admit",
    "required": "require", "found": "find", "given": "give", "taken": "take",
    "seen": "see", "days": "day", "respirations": "respiration", "vitals": "vital",
    "states": "state", "shows": "show", "reveals": "reveal",
}


@dataclass
class _Tok:
    form: str
    space_after: bool
    upos: str = ""
    head: int = -1
    deprel: str = ""
    index: int = 0


def _tokenize(sentence: str) -> list[_Tok]:
    toks: list[_Tok] = []
    for chunk in sentence.split():
        trailing: list[str] = []
        while chunk and chunk[-1] in _PUNCT_CHARS and not (
            len(chunk) > 1 and chunk[-1] == "." and chunk[-2].isdigit() and _NUM_RE.match(chunk)
        ):
            trailing.append(chunk[-1])
            chunk = chunk[:-1]
        while chunk and chunk[0] in "\"'([":
            toks.append(_Tok(chunk[0], space_after=False))
            chunk = chunk[1:]
        if chunk:
            toks.append(_Tok(chunk, space_after=not trailing))
        for i, ch in enumerate(reversed(trailing)):
            toks.append(_Tok(ch, space_after=i < len(trailing) - 1))
    if toks:
        toks[-1].space_after = False
    return toks


def _tag(toks: list[_Tok]) -> None:
    for i, tok in enumerate(toks):
        low = tok.form.lower()
        if all(c in _PUNCT_CHARS or c == "-" for c in tok.form):
            tok.upos = "PUNCT"
        elif _NUM_RE.match(tok.form) or _SLASH_NUM_RE.match(tok.form) or _DATE_RE.match(tok.form):
            tok.upos = "NUM"
        elif _ALNUM_RE.match(tok.form):
            tok.upos = "PROPN"  # B12, O2, T4: letters-first alphanumerics
        elif low in _DETS:
            tok.upos = "DET"
        elif low in _COPULAS or low in _AUX_OTHER:
            tok.upos = "AUX"
        elif low in _ADPS:
            tok.upos = "ADP"
        elif low in _PRON_POSS or low in _PRON_OTHER:
            tok.upos = "PRON"
        elif low in _CCONJ:
            tok.upos = "CCONJ"
        elif low in _ADVS or (low.endswith("ly") and len(low) > 3):
            tok.upos = "ADV"
        elif low in _VERBS:
            tok.upos = "VERB"
        elif low in _ADJS:
            tok.upos = "ADJ"
        else:
            tok.upos = "NOUN"
    # "has/have/had" before another verb form is the perfect auxiliary
    for i, tok in enumerate(toks):
        if tok.form.lower() in ("has", "have", "had"):
            nxt = next((t for t in toks[i + 1:] if t.upos != "ADV"), None)
            if nxt is not None and nxt.upos == "VERB":
                tok.upos = "AUX"


def _noun_run_head(toks: list[_Tok], start: int) -> int | None:
    """Index of the last noun in the first noun run at or after start."""
    i = start
    while i < len(toks) and toks[i].upos in ("DET", "ADJ", "ADV"):
        i += 1
    if i >= len(toks) or toks[i].upos not in ("NOUN", "PROPN"):
        return None
    while i + 1 < len(toks) and toks[i + 1].upos in ("NOUN", "PROPN"):
        i += 1
    return i


def _prev_verb(toks: list[_Tok], i: int) -> int | None:
    for j in range(i - 1, -1, -1):
        if toks[j].upos == "VERB":
            return j
    return None


def _next_verb(toks: list[_Tok], i: int) -> int | None:
    for j in range(i + 1, len(toks)):
        if toks[j].upos == "VERB":
            return j
    return None


def _is_passive(toks: list[_Tok], verb_idx: int) -> bool:
    if toks[verb_idx].form.lower() not in _PARTICIPLES:
        return False
    for j in range(verb_idx - 1, -1, -1):
        if toks[j].upos == "AUX":
            return toks[j].form.lower() in _COPULAS
        if toks[j].upos not in ("ADV",):
            return False
    return False


def _pick_root(toks: list[_Tok]) -> int:
    for i, tok in enumerate(toks):
        if tok.upos == "VERB":
            return i
    aux = next((i for i, t in enumerate(toks) if t.upos == "AUX"), None)
    if aux is not None:
        for j in range(aux + 1, len(toks)):
            if toks[j].upos in ("NUM", "ADJ", "NOUN", "PROPN"):
                return j
    head = _noun_run_head(toks, 0)
    if head is not None:
        return head
    return next((i for i, t in enumerate(toks) if t.upos != "PUNCT"), 0)


def _attach(toks: list[_Tok]) -> None:
    n = len(toks)
    root = _pick_root(toks)
    toks[root].head = 0
    toks[root].deprel = "root"

    def set_head(i: int, head_idx: int, deprel: str) -> None:
        if toks[i].head == -1 and head_idx != i:
            toks[i].head = head_idx + 1
            toks[i].deprel = deprel

    # compounds inside noun runs
    i = 0
    while i < n:
        if toks[i].upos in ("NOUN", "PROPN"):
            j = i
            while j + 1 < n and toks[j + 1].upos in ("NOUN", "PROPN"):
                j += 1
            for k in range(i, j):
                if k != root:
                    set_head(k, j, "compound")
            i = j + 1
        else:
            i += 1

    for i, tok in enumerate(toks):
        if i == root or tok.head != -1:
            continue
        upos, low = tok.upos, tok.form.lower()
        if upos == "PUNCT":
            set_head(i, root, "punct")
        elif upos == "DET":
            target = _noun_run_head(toks, i + 1)
            set_head(i, target if target is not None else root, "det")
        elif upos == "ADJ":
            target = _noun_run_head(toks, i + 1)
            if target is not None:
                set_head(i, target, "amod")
            else:
                set_head(i, root, "amod")
        elif upos == "PRON":
            if low in _PRON_POSS:
                target = _noun_run_head(toks, i + 1)
                if target is not None:
                    set_head(i, target, "nmod:poss")
                    continue
            verb = _next_verb(toks, i)
            if verb is not None:
                deprel = "nsubj:pass" if _is_passive(toks, verb) else "nsubj"
                set_head(i, verb, deprel)
            else:
                set_head(i, root, "nsubj" if i < root else "obj")
        elif upos == "CCONJ":
            verb = _next_verb(toks, i)
            if verb is not None:
                set_head(i, verb, "cc")
            else:
                target = _noun_run_head(toks, i + 1)
                set_head(i, target if target is not None else root, "cc")
        elif upos == "ADV":
            verb = _prev_verb(toks, i)
            if verb is None:
                verb = _next_verb(toks, i)
            set_head(i, verb if verb is not None else root, "advmod")
        elif upos == "AUX":
            verb = _next_verb(toks, i)
            if verb is not None:
                deprel = "aux:pass" if _is_passive(toks, verb) else "aux"
                set_head(i, verb, deprel)
            elif toks[root].upos in ("NUM", "NOUN", "PROPN", "ADJ") and i < root:
                set_head(i, root, "cop")
            else:
                set_head(i, root, "aux")
        elif upos == "ADP":
            for j in range(i + 1, n):
                if toks[j].upos == "NUM":
                    set_head(i, j, "case")
                    break
                if toks[j].upos in ("NOUN", "PROPN"):
                    target = _noun_run_head(toks, j)
                    set_head(i, target if target is not None else j, "case")
                    break
                if toks[j].upos not in ("DET", "ADJ", "ADV"):
                    break
            if tok.head == -1:
                set_head(i, root, "case")
        elif upos == "VERB":
            set_head(i, root, "conj")
        elif upos == "NUM":
            prev = toks[i - 1] if i > 0 else None
            if prev is not None and prev.upos == "ADP":
                before = toks[i - 2] if i > 1 else None
                if before is not None and before.upos in ("NOUN", "PROPN"):
                    set_head(i, i - 2, "nmod")
                    continue
                verb = _prev_verb(toks, i)
                if verb is not None:
                    set_head(i, verb, "obl")
                else:
                    set_head(i, root, "obl" if toks[root].upos == "VERB" else "nmod")
            elif prev is not None and prev.upos in ("NOUN", "PROPN"):
                set_head(i, i - 1, "nummod")
            else:
                verb = _prev_verb(toks, i)
                set_head(i, verb if verb is not None else root, "nummod")
        else:  # NOUN / PROPN run heads and leftovers
            preceded_by_adp = i > 0 and toks[i - 1].upos == "ADP" or (
                i > 1 and toks[i - 1].upos in ("DET", "ADJ") and toks[i - 2].upos == "ADP"
            )
            verb_after = _next_verb(toks, i)
            verb_before = _prev_verb(toks, i)
            if preceded_by_adp:
                if verb_before is not None:
                    set_head(i, verb_before, "obl")
                elif toks[root].upos == "NUM":
                    set_head(i, root, "obl")
                else:
                    set_head(i, root, "nmod")
            elif verb_after is not None and i < root and toks[root].upos == "VERB":
                deprel = "nsubj:pass" if _is_passive(toks, verb_after) else "nsubj"
                set_head(i, verb_after, deprel)
            elif verb_after is not None and toks[root].upos != "VERB":
                deprel = "nsubj:pass" if _is_passive(toks, verb_after) else "nsubj"
                set_head(i, verb_after, deprel)
            elif verb_before is not None:
                set_head(i, verb_before, "obj")
            elif toks[root].upos in ("NUM", "NOUN", "PROPN", "ADJ") and i < root:
                set_head(i, root, "nsubj")
            elif toks[root].upos in ("NOUN", "PROPN") and i > root:
                set_head(i, root, "conj")
            else:
                set_head(i, root, "dep")

    # safety: orphans hang off the root; cycles collapse onto the root
    for i, tok in enumerate(toks):
        if tok.head == -1 and i != root:
            tok.head = root + 1
            tok.deprel = "dep"
    for i in range(n):
        seen = set()
        j = i
        while j != root and toks[j].head != 0:
            if j in seen:
                toks[j].head = root + 1
                toks[j].deprel = "dep"
                break
            seen.add(j)
            j = toks[j].head - 1


def _lemma(tok: _Tok) -> str:
    low = tok.form.lower()
    if low in _LEMMA_MAP:
        return _LEMMA_MAP[low]
    if tok.upos == "NOUN" and low.endswith("s") and len(low) > 3 and not low.endswith("ss"):
        return low[:-1]
    return low


def split_sentences(text: str) -> list[str]:
    """Break raw text into sentences on terminal punctuation and newlines."""
    out: list[str] = []
    for line in text.split("\n"):
        line = line.strip()
        if not line:
            continue
        buf: list[str] = []
        for chunk in line.split():
            buf.append(chunk)
            if chunk.endswith((".", "!", "?")):
                out.append(" ".join(buf))
                buf = []
        if buf:
            out.append(" ".join(buf))
    return out


def parse_sentence(sentence: str) -> list[_Tok]:
    toks = _tokenize(sentence)
    if not toks:
        return []
    _tag(toks)
    _attach(toks)
    for idx, tok in enumerate(toks, start=1):
        tok.index = idx
    return toks


def to_conllu(doc_id: str, text: str) -> str:
    """Parse raw text into a CoNLL-U document string."""
    lines = [f"# newdoc id = {doc_id}"]
    sentences = split_sentences(text)
    for k, sentence in enumerate(sentences, start=1):
        toks = parse_sentence(sentence)
        if not toks:
            continue
        lines.append(f"# sent_id = {doc_id}-{k}")
        lines.append(f"# text = {sentence}")
        for tok in toks:
            misc = "_" if tok.space_after else "SpaceAfter=No"
            lines.append(
                f"{tok.index}\t{tok.form}\t{_lemma(tok)}\t{tok.upos}\t_\t_\t"
                f"{tok.head}\t{tok.deprel}\t_\t{misc}"
            )
        lines.append("")
    return "\n".join(lines) + "\n"
