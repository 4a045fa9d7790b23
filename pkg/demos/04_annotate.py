"""The whole pipeline over the shipped 20-sentence corpus.

Every number goes extract -> candidates -> cosine link -> unit inference
-> range rules. Values outside the normal range affirm a phenotype
(refined by granular bands); in-range values negate the parent concept;
unlinked numbers are dropped.
"""

from nrpheno import (
    annotate_document,
    data_path,
    load_exclusions,
    load_kb,
    load_lexicon,
    parse_conllu,
    parse_ontology,
    reference_embeddings,
)

kb = load_kb(data_path("kb"))
ontology = parse_ontology(data_path("ontology"))
lexicon = load_lexicon(data_path("lexicon"))
exclusions = load_exclusions(data_path("exclusions"))
refs = reference_embeddings(lexicon, kb)

documents = parse_conllu(data_path("corpus").read_text(encoding="utf-8"))
total = 0
for doc in documents:
    annotations = annotate_document(
        doc, kb, ontology, lexicon, refs, exclusions=exclusions
    )
    text = doc.sentences[0].text
    if not annotations:
        print(f"{doc.doc_id}: {text}")
        print("      -> no phenotype")
        continue
    for a in annotations:
        total += 1
        span = doc.text[a.start:a.end]
        print(f"{doc.doc_id}: {text}")
        print(f"      -> {a.hpo_id} {a.hpo_name} ({a.polarity}), "
              f"value {a.value} {a.unit}, span {span!r}, score {a.score:.3f}")

print(f"\n{total} annotations over {len(documents)} documents")
print("Same thing on the command line:")
print("  nr annotate --kb ... --ontology ... --lexicon ... --input corpus.conllu")
