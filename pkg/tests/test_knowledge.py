import dataclasses
import io

import pytest

from nrpheno import load_kb, store_kb, validate_kb
from nrpheno.knowledge import (
    GranularBand,
    KBIntegrityError,
    KBParseError,
    KnowledgeBase,
    NumericEntity,
    PhenotypeTriple,
    ReferenceRange,
)

MINIMAL_KB = """\
#ENTITIES
id,name,abbreviation
0,temperature,temp
1,heart rate,heart rate
#RANGES
id,name,abbreviation,unit,lower,upper
0,temperature,temp,celsius,36.4,37.3
0,temperature,temp,fahrenheit,97.5,99.1
1,heart rate,heart rate,bpm,60,80
#TRIPLES
id,name,abbreviation,below_hpo,below_name,above_hpo,above_name,normal_hpo,normal_name
0,temperature,temp,HP:0002045,Hypothermia,HP:0001945,Fever,HP:0004370,Abnormality of temperature regulation
1,heart rate,heart rate,HP:0001662,Bradycardia,HP:0001649,Tachycardia,HP:0011675,Arrhythmia
#GRANULAR
primary_hpo,primary_name,unit,lower,upper,granular_hpo,granular_name
HP:0001945,Fever,fahrenheit,99.2,100.4,HP:0011134,Low-grade fever
#SYNONYMS
id,synonym
0,pyrexia
"""


def write_kb(tmp_path, text, name="kb.nrkb"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoad:
    def test_range_row_mirrors_published_table(self, tmp_path):
        kb = load_kb(write_kb(tmp_path, MINIMAL_KB))
        assert ReferenceRange(0, "fahrenheit", 97.5, 99.1) in kb.ranges

    def test_empty_file_rejected(self, tmp_path):
        with pytest.raises(KBParseError, match="no entities defined"):
            load_kb(write_kb(tmp_path, ""))

    def test_inverted_bounds_rejected(self, tmp_path):
        text = MINIMAL_KB.replace("1,heart rate,heart rate,bpm,60,80",
                                  "1,heart rate,heart rate,bpm,48,41")
        with pytest.raises(KBIntegrityError, match="lower >= upper"):
            load_kb(write_kb(tmp_path, text))

    def test_synonyms_include_name_and_abbreviation(self, tmp_path):
        kb = load_kb(write_kb(tmp_path, MINIMAL_KB))
        assert kb.synonyms_for(0)[:2] == ("temperature", "temp")
        assert "pyrexia" in kb.synonyms_for(0)
        # entity without listed synonyms still carries name/abbreviation
        assert kb.synonyms_for(1) == ("heart rate",)

    def test_parse_error_reports_line_number(self, tmp_path):
        text = MINIMAL_KB.replace("0,temperature,temp,celsius,36.4,37.3",
                                  "0,temperature,temp,celsius,36.4")
        with pytest.raises(KBParseError, match="line 7"):
            load_kb(write_kb(tmp_path, text))

    def test_unknown_entity_reference_listed(self, tmp_path):
        text = MINIMAL_KB + "9,ghost\n"
        with pytest.raises(KBIntegrityError, match="unknown entity 9"):
            load_kb(write_kb(tmp_path, text))

    def test_bad_header_rejected(self, tmp_path):
        text = MINIMAL_KB.replace("id,name,abbreviation\n0,temperature",
                                  "id,label\n0,temperature")
        with pytest.raises(KBParseError, match="header"):
            load_kb(write_kb(tmp_path, text))

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        text = "# leading comment\n\n" + MINIMAL_KB.replace(
            "#SYNONYMS", "# mid comment\n#SYNONYMS"
        )
        kb = load_kb(write_kb(tmp_path, text))
        assert len(kb.entities) == 2

    def test_label_mismatch_between_sections(self, tmp_path):
        text = MINIMAL_KB.replace(
            "0,temperature,temp,celsius", "0,temperature,temperature,celsius"
        )
        with pytest.raises(KBIntegrityError, match="label.mismatch"):
            load_kb(write_kb(tmp_path, text))


class TestShippedKb:
    def test_shipped_kb_validates_clean(self, sample_kb):
        assert validate_kb(sample_kb) == []

    def test_shipped_training_kbs_validate_clean(self, train_kb, toy_kb):
        assert validate_kb(train_kb) == []
        assert validate_kb(toy_kb) == []

    def test_published_rows_present(self, sample_kb):
        assert sample_kb.range_for(0, "fahrenheit") == ReferenceRange(0, "fahrenheit", 97.5, 99.1)
        assert sample_kb.range_for(0, "celsius") == ReferenceRange(0, "celsius", 36.4, 37.3)
        assert sample_kb.range_for(3, "mg/dl") == ReferenceRange(3, "mg/dl", 0.6, 1.2)
        triple = sample_kb.triple_for(0)
        assert (triple.below_hpo, triple.above_hpo, triple.normal_hpo) == (
            "HP:0002045", "HP:0001945", "HP:0004370",
        )
        bands = sample_kb.bands_for("HP:0012664", "%")
        assert [(b.lower, b.upper, b.granular_hpo) for b in bands] == [
            (0.0, 29.9, "HP:0012666"),
            (30.0, 39.9, "HP:0012665"),
            (40.0, 49.9, "HP:0012663"),
        ]

    def test_multi_unit_ranges_order_isomorphic(self, sample_kb):
        # For each entity, bounds across unit pairs map in one direction.
        for eid in sample_kb.entity_ids():
            ranges = sample_kb.ranges_for(eid)
            for i in range(len(ranges)):
                for j in range(i + 1, len(ranges)):
                    a, b = ranges[i], ranges[j]
                    assert (a.lower < b.lower) == (a.upper < b.upper)

    def test_round_trip(self, sample_kb, tmp_path):
        out = tmp_path / "rt.nrkb"
        store_kb(sample_kb, out)
        assert load_kb(out) == sample_kb

    def test_round_trip_via_buffer(self, toy_kb, tmp_path):
        buf = io.StringIO()
        store_kb(toy_kb, buf)
        out = tmp_path / "rt2.nrkb"
        out.write_text(buf.getvalue(), encoding="utf-8")
        assert load_kb(out) == toy_kb

    def test_store_rejects_commas_in_fields(self, sample_kb, tmp_path):
        import dataclasses

        from nrpheno.knowledge import KBError

        broken = dataclasses.replace(
            sample_kb,
            synonym_sets={**sample_kb.synonym_sets, 0: ("high, spiking fever",)},
        )
        with pytest.raises(KBError, match="commas"):
            store_kb(broken, tmp_path / "bad.nrkb")


def test_round_trip_on_random_kbs(tmp_path):
    import random

    rng = random.Random(4242)
    for trial in range(25):
        n = rng.randint(1, 6)
        entities, ranges, triples, bands, synonyms = [], [], [], {}, {}
        hpo_counter = 1
        for eid in range(n):
            entities.append(NumericEntity(eid, f"entity{eid}", f"e{eid}"))
            three = [f"HP:{hpo_counter + k:07d}" for k in range(3)]
            hpo_counter += 3
            triples.append(PhenotypeTriple(eid, *three))
            for u in range(rng.randint(1, 3)):
                lower = round(rng.uniform(1, 50), 2)
                upper = round(lower + rng.uniform(0.5, 40), 2)
                ranges.append(ReferenceRange(eid, f"unit{u}", lower, upper))
            synonyms[eid] = (f"entity{eid}", f"e{eid}") + tuple(
                f"syn{eid}{k}" for k in range(rng.randint(0, 3))
            )
        kb = KnowledgeBase(
            entities=tuple(entities),
            ranges=tuple(ranges),
            triples=tuple(triples),
            granular_bands=(),
            synonym_sets=synonyms,
        )
        assert validate_kb(kb) == []
        out = tmp_path / f"random{trial}.nrkb"
        store_kb(kb, out)
        assert load_kb(out) == kb, f"trial {trial}"


def mutate(kb: KnowledgeBase, **replacements) -> KnowledgeBase:
    return dataclasses.replace(kb, **replacements)


class TestValidate:
    def test_clean_kb_no_violations(self, sample_kb):
        assert validate_kb(sample_kb) == []

    def test_triple_ids_not_distinct(self, sample_kb):
        broken = list(sample_kb.triples)
        broken[0] = dataclasses.replace(broken[0], below_hpo=broken[0].above_hpo)
        violations = validate_kb(mutate(sample_kb, triples=tuple(broken)))
        assert [v.rule for v in violations] == ["triple.distinct"]
        assert "not distinct" in violations[0].detail

    def test_band_straddling_normal_range(self, sample_kb):
        straddler = GranularBand("HP:0001945", "fahrenheit", 95.0, 100.4, "HP:0011134")
        bands = sample_kb.granular_bands + (straddler,)
        violations = validate_kb(mutate(sample_kb, granular_bands=bands))
        assert [v.rule for v in violations] == ["band.straddle"]
        assert "straddles normal range" in violations[0].detail

    @pytest.mark.parametrize(
        "breaker,expected_rule",
        [
            (lambda kb: mutate(kb, entities=kb.entities + (NumericEntity(0, "dup", "dup"),)),
             "entity.id_unique"),
            (lambda kb: mutate(kb, entities=kb.entities[:-1] + (
                dataclasses.replace(kb.entities[-1], name=""),)),
             "entity.nonempty"),
            (lambda kb: mutate(kb, ranges=kb.ranges + (ReferenceRange(0, "kelvin", 10, 5),)),
             "range.bounds"),
            (lambda kb: mutate(kb, ranges=kb.ranges + (kb.ranges[0],)),
             "range.unit_unique"),
            (lambda kb: mutate(kb, ranges=kb.ranges + (ReferenceRange(99, "x", 1, 2),)),
             "range.entity_ref"),
            (lambda kb: mutate(kb, triples=kb.triples[:1] + kb.triples[2:]),
             "triple.exactly_one"),
            (lambda kb: mutate(kb, granular_bands=kb.granular_bands + (
                GranularBand("HP:0001945", "fahrenheit", 101, 100, "HP:0011134"),)),
             "band.bounds"),
            (lambda kb: mutate(kb, granular_bands=kb.granular_bands + (
                GranularBand("HP:0099999", "fahrenheit", 101, 102, "HP:0011134"),)),
             "band.primary_ref"),
            (lambda kb: mutate(kb, granular_bands=kb.granular_bands + (
                GranularBand("HP:0001945", "kelvin", 101, 102, "HP:0011134"),)),
             "band.unit_ref"),
            (lambda kb: mutate(kb, synonym_sets={**kb.synonym_sets, 42: ("ghost",)}),
             "synonym.entity_ref"),
        ],
    )
    def test_single_broken_invariant_yields_single_violation(
        self, sample_kb, breaker, expected_rule
    ):
        violations = validate_kb(breaker(sample_kb))
        assert len(violations) == 1
        assert violations[0].rule == expected_rule
