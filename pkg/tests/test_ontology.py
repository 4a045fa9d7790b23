import random

import pytest

from nrpheno import parse_ontology
from nrpheno.ontology import GENERALIZATION_ROOT, HpoTerm, Ontology, OntologyError


def write(tmp_path, text, name="onto.obo"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def hp(n: int) -> str:
    return f"HP:{n:07d}"


class TestParse:
    def test_minimal_stanza(self, tmp_path):
        text = (
            "[Term]\nid: HP:0004370\nname: Abnormality of temperature regulation\n"
            "is_a: HP:0000118\n\n"
            "[Term]\nid: HP:0001945\nname: Fever\nis_a: HP:0004370 ! parent comment\n"
        )
        onto = parse_ontology(write(tmp_path, text))
        assert onto.term("HP:0001945").parent_ids == ("HP:0004370",)
        assert onto.name("HP:0001945") == "Fever"

    def test_root_only_ontology(self, tmp_path):
        text = "[Term]\nid: HP:0000118\nname: Phenotypic abnormality\n"
        onto = parse_ontology(write(tmp_path, text))
        assert onto.ancestors(GENERALIZATION_ROOT) == frozenset()

    def test_cycle_reported_with_path(self, tmp_path):
        text = (
            "[Term]\nid: HP:0000001\nname: A\nis_a: HP:0000002\n\n"
            "[Term]\nid: HP:0000002\nname: B\nis_a: HP:0000001\n"
        )
        with pytest.raises(OntologyError, match="cycle detected.*HP:000000"):
            parse_ontology(write(tmp_path, text))

    def test_dangling_parent(self, tmp_path):
        text = "[Term]\nid: HP:0000002\nname: B\nis_a: HP:0000042\n"
        with pytest.raises(OntologyError, match="dangling parent.*HP:0000042"):
            parse_ontology(write(tmp_path, text))

    def test_tsv_fallback(self, tmp_path):
        text = (
            "HP:0004370\tHP:0000118\tAbnormality of temperature regulation\n"
            "HP:0001945\tHP:0004370\tFever\n"
            "HP:0011134\tHP:0001945\tLow-grade fever\n"
        )
        onto = parse_ontology(write(tmp_path, text, "onto.tsv"))
        assert onto.ancestors("HP:0011134") == {"HP:0001945", "HP:0004370"}

    def test_tsv_multi_parent_and_parentless(self, tmp_path):
        text = (
            "HP:0000003\t\tNo parents\n"
            "HP:0000004\tHP:0000118\tUnder root\n"
            "HP:0000005\tHP:0000004\tChild\n"
            "HP:0000005\tHP:0000003\tChild\n"
        )
        onto = parse_ontology(write(tmp_path, text, "onto.tsv"))
        assert set(onto.term("HP:0000005").parent_ids) == {"HP:0000004", "HP:0000003"}

    def test_bad_id_format(self, tmp_path):
        text = "[Term]\nid: HP:12\nname: short id\n"
        with pytest.raises(OntologyError, match="bad HPO id"):
            parse_ontology(write(tmp_path, text))

    def test_duplicate_term_rejected(self, tmp_path):
        text = (
            "[Term]\nid: HP:0000001\nname: A\n\n"
            "[Term]\nid: HP:0000001\nname: A again\n"
        )
        with pytest.raises(OntologyError, match="duplicate term"):
            parse_ontology(write(tmp_path, text))

    def test_empty_file_rejected(self, tmp_path):
        with pytest.raises(OntologyError, match="no terms"):
            parse_ontology(write(tmp_path, ""))


class TestAncestors:
    def test_shipped_low_grade_fever_closure(self, mini_ontology):
        assert mini_ontology.ancestors("HP:0011134") == {"HP:0001945", "HP:0004370"}

    def test_root_has_no_ancestors(self, mini_ontology):
        assert mini_ontology.ancestors(GENERALIZATION_ROOT) == frozenset()

    def test_root_never_in_any_result(self, mini_ontology):
        for hpo_id in mini_ontology.terms:
            assert GENERALIZATION_ROOT not in mini_ontology.ancestors(hpo_id)

    def test_unknown_id(self, mini_ontology):
        with pytest.raises(OntologyError, match="unknown HPO id"):
            mini_ontology.ancestors("HP:0099999")

    def test_multi_parent_union_on_hand_built_dag(self):
        # 6-node DAG: F has parents D and E; D -> B -> root; E -> C -> root.
        terms = {
            hp(118): HpoTerm(hp(118), "root", ()),
            hp(2): HpoTerm(hp(2), "B", (hp(118),)),
            hp(3): HpoTerm(hp(3), "C", (hp(118),)),
            hp(4): HpoTerm(hp(4), "D", (hp(2),)),
            hp(5): HpoTerm(hp(5), "E", (hp(3),)),
            hp(6): HpoTerm(hp(6), "F", (hp(4), hp(5))),
        }
        onto = Ontology(terms)
        # brute-force DFS oracle over the explicit edge lists
        def reach(node, acc):
            for p in terms[node].parent_ids:
                if p not in acc:
                    acc.add(p)
                    reach(p, acc)
            return acc
        expected = {a for a in reach(hp(6), set()) if a != hp(118)}
        assert onto.ancestors(hp(6)) == expected
        # union of both parents' closures plus the parents themselves
        union = (reach(hp(4), set()) | reach(hp(5), set()) | {hp(4), hp(5)}) - {hp(118)}
        assert onto.ancestors(hp(6)) == union

    def test_side_branch_truncated(self):
        # M0 <- M1 never reach the root; X has parents under root and in the branch.
        terms = {
            hp(118): HpoTerm(hp(118), "root", ()),
            hp(10): HpoTerm(hp(10), "under", (hp(118),)),
            hp(20): HpoTerm(hp(20), "M0", ()),
            hp(21): HpoTerm(hp(21), "M1", (hp(20),)),
            hp(30): HpoTerm(hp(30), "X", (hp(10), hp(21))),
        }
        onto = Ontology(terms)
        assert onto.ancestors(hp(30)) == {hp(10)}
        assert onto.ancestors(hp(21)) == frozenset()

    def test_monotone_closure(self, mini_ontology):
        for hpo_id in mini_ontology.terms:
            anc = mini_ontology.ancestors(hpo_id)
            for a in anc:
                assert mini_ontology.ancestors(a) <= anc


def random_dag(rng: random.Random, n_nodes: int) -> dict[str, HpoTerm]:
    """Rooted random DAG; node i may only parent into earlier nodes."""
    terms = {hp(118): HpoTerm(hp(118), "root", ())}
    ids = [hp(118)]
    for i in range(1, n_nodes):
        nid = hp(1000 + i)
        k = rng.randint(1, min(2, len(ids)))
        parents = tuple(rng.sample(ids, k))
        terms[nid] = HpoTerm(nid, f"node{i}", parents)
        ids.append(nid)
    return terms


def brute_force_ancestors(terms: dict[str, HpoTerm], node: str) -> set[str]:
    seen: set[str] = set()
    stack = list(terms[node].parent_ids)
    while stack:
        cur = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        stack.extend(terms[cur].parent_ids)
    # keep only strict descendants of the root boundary
    def reaches_root(x: str) -> bool:
        if x == hp(118):
            return False
        frontier = [x]
        visited = set()
        while frontier:
            cur = frontier.pop()
            if cur == hp(118):
                return True
            for p in terms[cur].parent_ids:
                if p not in visited:
                    visited.add(p)
                    frontier.append(p)
        return False
    return {a for a in seen if reaches_root(a)}


def test_concurrent_ancestor_queries_are_consistent(mini_ontology):
    # memo fills are idempotent; hammering from threads must agree with
    # a fresh single-threaded ontology
    from concurrent.futures import ThreadPoolExecutor

    from nrpheno import data_path, parse_ontology

    ids = sorted(mini_ontology.terms)
    fresh = parse_ontology(data_path("ontology"))
    expected = {i: fresh.ancestors(i) for i in ids}
    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(mini_ontology.ancestors, ids * 16))
    for k, got in enumerate(results):
        assert got == expected[ids[k % len(ids)]]


def test_ancestors_match_reachability_oracle_on_random_dags():
    rng = random.Random(20240814)
    for trial in range(60):
        terms = random_dag(rng, rng.randint(2, 50))
        onto = Ontology(terms)
        for node in terms:
            assert onto.ancestors(node) == brute_force_ancestors(terms, node), (
                f"trial {trial}, node {node}"
            )
