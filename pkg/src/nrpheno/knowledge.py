"""Knowledge base of numeric entities, reference ranges and phenotype triples.

The KB is a single UTF-8 file of comma-separated tables. Each table starts
with a section marker (``#ENTITIES``, ``#RANGES``, ``#TRIPLES``,
``#GRANULAR``, ``#SYNONYMS``) followed by a column-header row, then data
rows. A ``#`` in column 0 starts a comment unless the line is one of the
five section markers. Decimal point is ``.``, no thousands separators,
line endings are ``\\n``, and fields must not contain commas.

Section columns:

    #ENTITIES  id,name,abbreviation
    #RANGES    id,name,abbreviation,unit,lower,upper
    #TRIPLES   id,name,abbreviation,below_hpo,below_name,above_hpo,above_name,normal_hpo,normal_name
    #GRANULAR  primary_hpo,primary_name,unit,lower,upper,granular_hpo,granular_name
    #SYNONYMS  id,synonym

The redundant name/abbreviation columns in #RANGES and #TRIPLES must agree
with #ENTITIES; the loader checks this as part of referential integrity.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, TextIO

HPO_ID_PATTERN = re.compile(r"^HP:\d{7}$")

SECTION_MARKERS = ("#ENTITIES", "#RANGES", "#TRIPLES", "#GRANULAR", "#SYNONYMS")

_HEADERS = {
    "#ENTITIES": "id,name,abbreviation",
    "#RANGES": "id,name,abbreviation,unit,lower,upper",
    "#TRIPLES": "id,name,abbreviation,below_hpo,below_name,above_hpo,above_name,normal_hpo,normal_name",
    "#GRANULAR": "primary_hpo,primary_name,unit,lower,upper,granular_hpo,granular_name",
    "#SYNONYMS": "id,synonym",
}


class KBError(Exception):
    """Base error for knowledge-base loading and validation."""


class KBParseError(KBError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class KBIntegrityError(KBError):
    """Raised by load_kb when the parsed tables violate KB invariants."""

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"{len(self.violations)} violation(s): {lines}")


@dataclass(frozen=True)
class NumericEntity:
    entity_id: int
    name: str
    abbreviation: str


@dataclass(frozen=True)
class ReferenceRange:
    entity_id: int
    unit: str
    lower: float
    upper: float


@dataclass(frozen=True)
class PhenotypeTriple:
    """The three HPO concepts tied to one entity.

    below_hpo / above_hpo are affirmed when a value falls outside the normal
    range on the respective side; normal_hpo is negated for in-range values.
    The *_name fields are informational copies of the ontology labels.
    """

    entity_id: int
    below_hpo: str
    above_hpo: str
    normal_hpo: str
    below_name: str = ""
    above_name: str = ""
    normal_name: str = ""


@dataclass(frozen=True)
class GranularBand:
    """Severity sub-interval under an abnormal-side primary phenotype."""

    primary_hpo: str
    unit: str
    lower: float
    upper: float
    granular_hpo: str
    primary_name: str = ""
    granular_name: str = ""


@dataclass(frozen=True)
class Violation:
    rule: str
    detail: str

    def __str__(self) -> str:
        return f"[{self.rule}] {self.detail}"


@dataclass(frozen=True)
class KnowledgeBase:
    """Immutable, fully cross-linked view of one KB file.

    Safe to share across any number of concurrent readers.
    """

    entities: tuple[NumericEntity, ...]
    ranges: tuple[ReferenceRange, ...]
    triples: tuple[PhenotypeTriple, ...]
    granular_bands: tuple[GranularBand, ...]
    synonym_sets: dict[int, tuple[str, ...]] = field(default_factory=dict)

    def entity(self, entity_id: int) -> NumericEntity:
        for e in self.entities:
            if e.entity_id == entity_id:
                return e
        raise KeyError(f"unknown entity id {entity_id}")

    def entity_ids(self) -> tuple[int, ...]:
        return tuple(e.entity_id for e in self.entities)

    def ranges_for(self, entity_id: int) -> tuple[ReferenceRange, ...]:
        """Reference ranges of an entity, in file declaration order."""
        return tuple(r for r in self.ranges if r.entity_id == entity_id)

    def range_for(self, entity_id: int, unit: str) -> ReferenceRange | None:
        for r in self.ranges:
            if r.entity_id == entity_id and r.unit == unit:
                return r
        return None

    def triple_for(self, entity_id: int) -> PhenotypeTriple:
        for t in self.triples:
            if t.entity_id == entity_id:
                return t
        raise KeyError(f"entity {entity_id} has no phenotype triple")

    def bands_for(self, primary_hpo: str, unit: str) -> tuple[GranularBand, ...]:
        return tuple(
            b for b in self.granular_bands if b.primary_hpo == primary_hpo and b.unit == unit
        )

    def synonyms_for(self, entity_id: int) -> tuple[str, ...]:
        return self.synonym_sets.get(entity_id, ())

    def hpo_ids(self) -> set[str]:
        """All HPO ids referenced anywhere in the KB."""
        ids: set[str] = set()
        for t in self.triples:
            ids.update((t.below_hpo, t.above_hpo, t.normal_hpo))
        for b in self.granular_bands:
            ids.update((b.primary_hpo, b.granular_hpo))
        return ids


def _norm(text: str) -> str:
    return " ".join(text.strip().lower().split())


def _parse_int(value: str, line: int, what: str) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise KBParseError(f"{what} is not an integer: {value!r}", line) from None


def _parse_float(value: str, line: int, what: str) -> float:
    try:
        out = float(value.strip())
    except ValueError:
        raise KBParseError(f"{what} is not a number: {value!r}", line) from None
    if not math.isfinite(out):
        raise KBParseError(f"{what} must be finite: {value!r}", line)
    return out


def _split_row(line_text: str, line: int, ncols: int, section: str) -> list[str]:
    fields = line_text.split(",")
    if len(fields) != ncols:
        raise KBParseError(
            f"{section} row has {len(fields)} fields, expected {ncols}", line
        )
    return [f.strip() for f in fields]


def parse_kb_tables(text: str) -> dict[str, list[tuple[int, list[str]]]]:
    """Split KB text into raw rows per section, keeping line numbers.

    Validates section markers, header rows and column counts only; field
    typing and cross-linking happen in load_kb.
    """
    tables: dict[str, list[tuple[int, list[str]]]] = {m: [] for m in SECTION_MARKERS}
    section: str | None = None
    header_seen = False
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped in SECTION_MARKERS:
            section = stripped
            header_seen = False
            continue
        if line.startswith("#"):
            continue  # comment
        if section is None:
            raise KBParseError("data row before any section marker", lineno)
        expected_header = _HEADERS[section]
        if not header_seen:
            got = ",".join(f.strip() for f in line.split(","))
            if got != expected_header:
                raise KBParseError(
                    f"bad {section} header: expected {expected_header!r}, got {got!r}",
                    lineno,
                )
            header_seen = True
            continue
        ncols = expected_header.count(",") + 1
        tables[section].append((lineno, _split_row(line, lineno, ncols, section)))
    return tables


def load_kb(path: str | Path) -> KnowledgeBase:
    """Load and fully validate a KB file.

    Raises KBParseError (with line number) on malformed rows and
    KBIntegrityError when any invariant is violated. The synonym set of
    each entity always includes its name and abbreviation.
    """
    text = Path(path).read_text(encoding="utf-8")
    tables = parse_kb_tables(text)

    if not tables["#ENTITIES"]:
        raise KBParseError("no entities defined", 1)

    entities: list[NumericEntity] = []
    for lineno, row in tables["#ENTITIES"]:
        eid = _parse_int(row[0], lineno, "entity id")
        entities.append(NumericEntity(eid, _norm(row[1]), _norm(row[2])))

    ranges: list[ReferenceRange] = []
    range_labels: list[tuple[int, int, str, str]] = []  # lineno, id, name, abbr
    for lineno, row in tables["#RANGES"]:
        eid = _parse_int(row[0], lineno, "entity id")
        lower = _parse_float(row[4], lineno, "lower bound")
        upper = _parse_float(row[5], lineno, "upper bound")
        ranges.append(ReferenceRange(eid, _norm(row[3]), lower, upper))
        range_labels.append((lineno, eid, _norm(row[1]), _norm(row[2])))

    triples: list[PhenotypeTriple] = []
    triple_labels: list[tuple[int, int, str, str]] = []
    for lineno, row in tables["#TRIPLES"]:
        eid = _parse_int(row[0], lineno, "entity id")
        triples.append(
            PhenotypeTriple(
                entity_id=eid,
                below_hpo=row[3],
                above_hpo=row[5],
                normal_hpo=row[7],
                below_name=row[4],
                above_name=row[6],
                normal_name=row[8],
            )
        )
        triple_labels.append((lineno, eid, _norm(row[1]), _norm(row[2])))

    bands: list[GranularBand] = []
    for lineno, row in tables["#GRANULAR"]:
        bands.append(
            GranularBand(
                primary_hpo=row[0],
                unit=_norm(row[2]),
                lower=_parse_float(row[3], lineno, "band lower"),
                upper=_parse_float(row[4], lineno, "band upper"),
                granular_hpo=row[5],
                primary_name=row[1],
                granular_name=row[6],
            )
        )

    synonyms: dict[int, list[str]] = {}
    for lineno, row in tables["#SYNONYMS"]:
        eid = _parse_int(row[0], lineno, "entity id")
        synonyms.setdefault(eid, []).append(_norm(row[1]))

    # Name/abbreviation lead each synonym set; extra listings deduplicate.
    by_id = {e.entity_id: e for e in entities}
    synonym_sets: dict[int, tuple[str, ...]] = {}
    for e in entities:
        seen: list[str] = [e.name]
        if e.abbreviation not in seen:
            seen.append(e.abbreviation)
        for s in synonyms.get(e.entity_id, []):
            if s not in seen:
                seen.append(s)
        synonym_sets[e.entity_id] = tuple(seen)
    for eid in synonyms:
        if eid not in by_id:
            synonym_sets.setdefault(eid, tuple(synonyms[eid]))

    kb = KnowledgeBase(
        entities=tuple(entities),
        ranges=tuple(ranges),
        triples=tuple(triples),
        granular_bands=tuple(bands),
        synonym_sets=synonym_sets,
    )

    violations = validate_kb(kb)
    # Label-consistency checks need the raw rows, so they live here.
    for lineno, eid, name, abbr in range_labels + triple_labels:
        ent = by_id.get(eid)
        if ent is not None and (ent.name != name or ent.abbreviation != abbr):
            violations.append(
                Violation(
                    "label.mismatch",
                    f"line {lineno}: entity {eid} labelled {name!r}/{abbr!r}, "
                    f"but #ENTITIES says {ent.name!r}/{ent.abbreviation!r}",
                )
            )
    if violations:
        raise KBIntegrityError(violations)
    return kb


def validate_kb(kb: KnowledgeBase) -> list[Violation]:
    """Check every KB invariant; violations are data, not failures.

    Returns an empty list iff the KB is fully consistent.
    """
    out: list[Violation] = []
    ids_seen: set[int] = set()
    for e in kb.entities:
        if e.entity_id in ids_seen:
            out.append(Violation("entity.id_unique", f"duplicate entity id {e.entity_id}"))
        ids_seen.add(e.entity_id)
        if not e.name or not e.abbreviation:
            out.append(
                Violation("entity.nonempty", f"entity {e.entity_id} has empty name or abbreviation")
            )
        if e.name != e.name.lower() or e.abbreviation != e.abbreviation.lower():
            out.append(
                Violation("entity.lowercase", f"entity {e.entity_id} labels not lowercase")
            )
    known = {e.entity_id for e in kb.entities}

    units_per_entity: dict[int, set[str]] = {}
    for r in kb.ranges:
        if r.entity_id not in known:
            out.append(Violation("range.entity_ref", f"range references unknown entity {r.entity_id}"))
        if not (r.lower < r.upper):
            out.append(
                Violation(
                    "range.bounds",
                    f"lower >= upper for entity {r.entity_id} unit {r.unit!r} "
                    f"({r.lower} >= {r.upper})",
                )
            )
        seen_units = units_per_entity.setdefault(r.entity_id, set())
        if r.unit in seen_units:
            out.append(
                Violation("range.unit_unique", f"entity {r.entity_id} unit {r.unit!r} declared twice")
            )
        seen_units.add(r.unit)

    triple_counts: dict[int, int] = {}
    for t in kb.triples:
        triple_counts[t.entity_id] = triple_counts.get(t.entity_id, 0) + 1
        if t.entity_id not in known:
            out.append(Violation("triple.entity_ref", f"triple references unknown entity {t.entity_id}"))
        three = (t.below_hpo, t.above_hpo, t.normal_hpo)
        if len(set(three)) != 3:
            out.append(
                Violation("triple.distinct", f"entity {t.entity_id} triple ids not distinct: {three}")
            )
        for hid in three:
            if not HPO_ID_PATTERN.match(hid):
                out.append(
                    Violation("triple.hpo_format", f"entity {t.entity_id}: bad HPO id {hid!r}")
                )
    for eid in known:
        n = triple_counts.get(eid, 0)
        if n != 1:
            out.append(
                Violation(
                    "triple.exactly_one",
                    f"entity {eid} has {n} phenotype triples, expected exactly 1",
                )
            )

    # A band must sit entirely on the abnormal side its primary phenotype
    # covers, for that entity's range in the same unit.
    side_by_hpo: dict[str, tuple[int, str]] = {}
    for t in kb.triples:
        side_by_hpo[t.below_hpo] = (t.entity_id, "below")
        side_by_hpo[t.above_hpo] = (t.entity_id, "above")
    for b in kb.granular_bands:
        if not (b.lower < b.upper):
            out.append(
                Violation(
                    "band.bounds",
                    f"band {b.granular_hpo}: lower >= upper ({b.lower} >= {b.upper})",
                )
            )
        for hid in (b.primary_hpo, b.granular_hpo):
            if not HPO_ID_PATTERN.match(hid):
                out.append(Violation("band.hpo_format", f"bad HPO id {hid!r} in granular band"))
        if b.primary_hpo not in side_by_hpo:
            out.append(
                Violation(
                    "band.primary_ref",
                    f"band primary {b.primary_hpo} is not a below/above phenotype of any entity",
                )
            )
            continue
        eid, side = side_by_hpo[b.primary_hpo]
        rng = kb.range_for(eid, b.unit)
        if rng is None:
            out.append(
                Violation(
                    "band.unit_ref",
                    f"band {b.granular_hpo}: entity {eid} has no {b.unit!r} range",
                )
            )
            continue
        if side == "below":
            ok = b.upper < rng.lower
        else:
            ok = b.lower > rng.upper
        if not ok:
            out.append(
                Violation(
                    "band.straddle",
                    f"band {b.lower}-{b.upper} {b.unit} for {b.primary_hpo} "
                    f"straddles normal range {rng.lower}-{rng.upper}",
                )
            )

    for eid in kb.synonym_sets:
        if eid not in known:
            out.append(Violation("synonym.entity_ref", f"synonyms reference unknown entity {eid}"))
    for eid, syns in kb.synonym_sets.items():
        for s in syns:
            if not s:
                out.append(Violation("synonym.nonempty", f"entity {eid} has an empty synonym"))

    return out


def _fmt_num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def store_kb(kb: KnowledgeBase, path: str | Path | TextIO) -> None:
    """Serialize a KB in the canonical file format (load_kb round-trips it)."""
    by_id = {e.entity_id: e for e in kb.entities}

    def labels(eid: int) -> str:
        e = by_id[eid]
        return f"{e.entity_id},{e.name},{e.abbreviation}"

    lines: list[str] = ["#ENTITIES", _HEADERS["#ENTITIES"]]
    for e in kb.entities:
        lines.append(f"{e.entity_id},{e.name},{e.abbreviation}")
    lines += ["#RANGES", _HEADERS["#RANGES"]]
    for r in kb.ranges:
        lines.append(f"{labels(r.entity_id)},{r.unit},{_fmt_num(r.lower)},{_fmt_num(r.upper)}")
    lines += ["#TRIPLES", _HEADERS["#TRIPLES"]]
    for t in kb.triples:
        lines.append(
            f"{labels(t.entity_id)},{t.below_hpo},{t.below_name},"
            f"{t.above_hpo},{t.above_name},{t.normal_hpo},{t.normal_name}"
        )
    lines += ["#GRANULAR", _HEADERS["#GRANULAR"]]
    for b in kb.granular_bands:
        lines.append(
            f"{b.primary_hpo},{b.primary_name},{b.unit},"
            f"{_fmt_num(b.lower)},{_fmt_num(b.upper)},{b.granular_hpo},{b.granular_name}"
        )
    lines += ["#SYNONYMS", _HEADERS["#SYNONYMS"]]
    for eid, syns in kb.synonym_sets.items():
        for s in syns:
            lines.append(f"{eid},{s}")
    text_fields: list[str] = []
    for e in kb.entities:
        text_fields += [e.name, e.abbreviation]
    text_fields += [r.unit for r in kb.ranges]
    for t in kb.triples:
        text_fields += [t.below_name, t.above_name, t.normal_name]
    for b in kb.granular_bands:
        text_fields += [b.unit, b.primary_name, b.granular_name]
    for syns in kb.synonym_sets.values():
        text_fields += list(syns)
    for fld in text_fields:
        if "," in fld or "\n" in fld:
            raise KBError(f"KB fields must not contain commas or newlines: {fld!r}")
    payload = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(payload)  # type: ignore[union-attr]
    else:
        Path(path).write_text(payload, encoding="utf-8")
