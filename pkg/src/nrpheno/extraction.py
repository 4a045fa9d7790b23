"""CoNLL-U ingestion, number-mention extraction and lexical candidates.

Numbers are pulled from individual tokens by a permissive alpha-numeric
grammar (recall first; the exclusion dictionary and date patterns prune
the known junk). Candidates are the content words syntactically connected
to each number: its head, its children, and, when the number hangs off its
head via ``obl``, the head's subject/object/conjunct dependents as well.
Each candidate token is expanded with its ``compound`` children so
multi-word measurements ("heart rate") survive as one phrase.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

ELIGIBLE_UPOS = {"NOUN", "PROPN", "ADJ", "VERB"}
OBL_EXTRA_DEPRELS = {"nsubj", "obj", "conj"}

_MONTHS = {
    "january", "february", "march", "april", "may", "june", "july",
    "august", "september", "october", "november", "december",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept",
    "oct", "nov", "dec",
}

_NUMBER_RE = re.compile(
    r"^(?P<pre>[A-Za-z]{1,12})?(?P<sign>[+-])?(?P<num>\d+(?:\.\d+)?)(?P<suf>[A-Za-z%]{1,12})?$"
)
_SLASH_RE = re.compile(r"^(?P<a>\d+(?:\.\d+)?)/(?P<b>\d+(?:\.\d+)?)$")
_DATE_RE = re.compile(r"^\d{1,4}([/-])\d{1,4}\1\d{1,4}$")


class ConlluError(Exception):
    pass


@dataclass(frozen=True)
class Token:
    index: int  # 1-based within sentence
    form: str
    lemma: str
    upos: str
    head: int  # 0 = sentence root
    deprel: str
    start: int = -1  # char offsets into the document text
    end: int = -1

    @property
    def base_deprel(self) -> str:
        return self.deprel.split(":")[0]


@dataclass(frozen=True)
class Sentence:
    index: int
    text: str
    tokens: tuple[Token, ...]
    sent_id: str = ""

    def token(self, index: int) -> Token:
        tok = self.tokens[index - 1]
        if tok.index != index:
            raise KeyError(f"no token with index {index}")
        return tok

    def children_of(self, index: int) -> tuple[Token, ...]:
        return tuple(t for t in self.tokens if t.head == index)


@dataclass(frozen=True)
class Document:
    doc_id: str
    sentences: tuple[Sentence, ...]
    text: str = ""


@dataclass(frozen=True)
class NumberMention:
    """A numeric value found in one token.

    unit_hint is the alphabetic affix glued to the digits ("F", "%"),
    None when absent. component is set (1 or 2) for slash-compound values
    like blood-pressure readings.
    """

    value: float
    unit_hint: str | None
    token_index: int
    raw: str
    component: int | None = None


@dataclass(frozen=True)
class Candidate:
    phrase: str  # compound-merged, lowercase
    head_token_index: int
    relation_path: str
    token_indices: tuple[int, ...] = ()


@dataclass(frozen=True)
class CandidateSet:
    number: NumberMention
    candidates: tuple[Candidate, ...] = ()


class ExclusionDict:
    """Case-insensitive membership set of alpha-numeric non-measurements."""

    def __init__(self, tokens: set[str] | None = None):
        self._tokens = {t.lower() for t in (tokens or set())}

    def __contains__(self, token: str) -> bool:
        return token.lower() in self._tokens

    def __len__(self) -> int:
        return len(self._tokens)


def load_exclusions(path: str | Path) -> ExclusionDict:
    tokens: set[str] = set()
    for raw in Path(path).read_text(encoding="utf-8").split("\n"):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens.add(line.lower())
    return ExclusionDict(tokens)


def _token_offsets(text: str, forms: list[str]) -> list[tuple[int, int]]:
    offsets = []
    cursor = 0
    for form in forms:
        pos = text.find(form, cursor)
        if pos < 0:
            # token not recoverable from the text; fall back to cursor
            pos = cursor
        offsets.append((pos, pos + len(form)))
        cursor = pos + len(form)
    return offsets


def parse_conllu(text: str) -> list[Document]:
    """Parse CoNLL-U text into documents.

    ``# newdoc id =`` comments separate documents; multi-word token ranges
    and empty nodes are skipped. Raises ConlluError with the offending line
    number on malformed rows.
    """
    docs: list[Document] = []
    cur_doc_id: str | None = None
    cur_sentences: list[Sentence] = []
    cur_rows: list[tuple[int, str, str, str, int, str]] = []
    cur_text: str | None = None
    cur_sent_id = ""
    doc_text_parts: list[str] = []
    doc_counter = 0

    def flush_sentence(lineno: int) -> None:
        nonlocal cur_rows, cur_text, cur_sent_id
        if not cur_rows:
            cur_text, cur_sent_id = None, ""
            return
        forms = [r[1] for r in cur_rows]
        sent_text = cur_text if cur_text is not None else " ".join(forms)
        base = sum(len(p) + 1 for p in doc_text_parts)  # +1 for joining "\n"
        offs = _token_offsets(sent_text, forms)
        n = len(cur_rows)
        toks = []
        for (idx, form, lemma, upos, head, deprel), (s, e) in zip(cur_rows, offs):
            if not (0 <= head <= n):
                raise ConlluError(
                    f"line {lineno}: head {head} out of range for sentence of {n} tokens"
                )
            toks.append(Token(idx, form, lemma, upos, head, deprel, base + s, base + e))
        for pos, t in enumerate(toks, start=1):
            if t.index != pos:
                raise ConlluError(f"line {lineno}: token indices not contiguous")
        cur_sentences.append(Sentence(len(cur_sentences), sent_text, tuple(toks), cur_sent_id))
        doc_text_parts.append(sent_text)
        cur_rows, cur_text, cur_sent_id = [], None, ""

    def flush_document() -> None:
        nonlocal cur_doc_id, cur_sentences, doc_text_parts, doc_counter
        if cur_sentences:
            doc_id = cur_doc_id if cur_doc_id is not None else f"doc{doc_counter}"
            docs.append(Document(doc_id, tuple(cur_sentences), "\n".join(doc_text_parts)))
            doc_counter += 1
        cur_doc_id, cur_sentences, doc_text_parts = None, [], []

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            flush_sentence(lineno)
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            key, _, value = body.partition("=")
            key = key.strip()
            if body.startswith("newdoc"):
                flush_sentence(lineno)
                flush_document()
                cur_doc_id = value.strip() or None
            elif key == "sent_id":
                cur_sent_id = value.strip()
            elif key == "text":
                cur_text = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluError(f"line {lineno}: expected 10 columns, got {len(cols)}")
        tok_id = cols[0]
        if "-" in tok_id or "." in tok_id:
            continue  # multi-word token range / empty node
        try:
            idx = int(tok_id)
        except ValueError:
            raise ConlluError(f"line {lineno}: non-integer token id {tok_id!r}") from None
        try:
            head = int(cols[6])
        except ValueError:
            raise ConlluError(f"line {lineno}: non-integer head {cols[6]!r}") from None
        cur_rows.append((idx, cols[1], cols[2], cols[3], head, cols[7]))

    flush_sentence(len(text.split("\n")))
    flush_document()
    return docs


def _is_date_token(sentence: Sentence, token: Token) -> bool:
    if _DATE_RE.match(token.form):
        return True
    if re.match(r"^\d{1,4}$", token.form):
        i = token.index
        for neighbor in (i - 1, i + 1):
            if 1 <= neighbor <= len(sentence.tokens):
                form = sentence.token(neighbor).form.lower().rstrip(".")
                if form in _MONTHS:
                    return True
    return False


def extract_numbers(
    sentence: Sentence, exclusions: ExclusionDict | None = None
) -> list[NumberMention]:
    """Extract number mentions from a sentence's tokens, in token order.

    Alpha-numeric tokens split into value + unit hint ("102F" -> 102, "F");
    a lone trailing plural "s" is dropped; slash-compounds like "124/55"
    yield two mentions. Date-pattern tokens and exclusion-dictionary
    entries yield nothing. Non-matches are skipped silently.
    """
    exclusions = exclusions or ExclusionDict()
    out: list[NumberMention] = []
    for token in sentence.tokens:
        form = token.form
        if form in exclusions:
            continue
        if _is_date_token(sentence, token):
            continue
        m = _SLASH_RE.match(form)
        if m:
            a, b = float(m.group("a")), float(m.group("b"))
            out.append(NumberMention(a, None, token.index, form, component=1))
            out.append(NumberMention(b, None, token.index, form, component=2))
            continue
        m = _NUMBER_RE.match(form)
        if not m:
            continue
        pre, suf = m.group("pre"), m.group("suf")
        if pre and suf:
            continue  # doubly-affixed tokens are not measurements
        value = float((m.group("sign") or "") + m.group("num"))
        if value != value or value in (float("inf"), float("-inf")):
            continue
        hint = pre or suf
        if hint == "s":
            hint = None  # plural: "90s" is the value 90
        out.append(NumberMention(value, hint, token.index, form))
    return out


def _compound_phrase(sentence: Sentence, token: Token) -> tuple[str, tuple[int, ...]]:
    parts = [token] + [
        c for c in sentence.children_of(token.index) if c.base_deprel == "compound"
    ]
    parts.sort(key=lambda t: t.index)
    phrase = " ".join(t.form.lower() for t in parts)
    return phrase, tuple(t.index for t in parts)


def extract_candidates(sentence: Sentence, number: NumberMention) -> CandidateSet:
    """Collect content words syntactically connected to a number mention.

    Takes the number's head and children, plus the head's nsubj/obj/conj
    dependents when the number attaches via ``obl``. Only NOUN/PROPN/ADJ/
    VERB tokens qualify; each is merged with its ``compound`` children.
    """
    num_tok = sentence.token(number.token_index)
    picked: list[tuple[Token, str]] = []

    if num_tok.head != 0:
        head_tok = sentence.token(num_tok.head)
        picked.append((head_tok, "head"))
        if num_tok.base_deprel == "obl":
            for sib in sentence.children_of(head_tok.index):
                if sib.index == num_tok.index:
                    continue
                if sib.base_deprel in OBL_EXTRA_DEPRELS:
                    picked.append((sib, f"obl+{sib.base_deprel}"))
    for child in sentence.children_of(num_tok.index):
        picked.append((child, "child"))

    picked = [(t, rel) for t, rel in picked if t.upos in ELIGIBLE_UPOS]
    picked.sort(key=lambda pair: pair[0].index)

    seen: set[tuple[str, int]] = set()
    candidates: list[Candidate] = []
    for tok, rel in picked:
        phrase, indices = _compound_phrase(sentence, tok)
        key = (phrase, tok.index)
        if key in seen:
            continue
        seen.add(key)
        candidates.append(Candidate(phrase, tok.index, rel, indices))
    return CandidateSet(number, tuple(candidates))
