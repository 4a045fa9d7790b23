"""Raw text to annotations through the parsing/embedding sidecar.

The sidecar (sidecar/ package) parses raw clinical prose into CoNLL-U
and serves contextual phrase embeddings. Here both run in-process; in
production you'd `nr-sidecar --port 8900` and point the annotator at it
with `nr annotate --parse-service http://127.0.0.1:8900`.
"""

try:
    from nrsidecar import build_default_embedder, finetune_sts, to_conllu
except ImportError:
    raise SystemExit(
        "nrsidecar is not installed; run `pip install -e sidecar/ "
        "--no-build-isolation` first"
    )

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

note = (
    "her pyrexia increased to 102F and she was begun on levofloxacin. "
    "oxygen saturation of 91% on arrival. heart rate 79."
)
print("raw note:", note)

conllu = to_conllu("note", note)
print("\nparser output (first sentence):")
print("\n".join(conllu.splitlines()[:15]))

kb = load_kb(data_path("kb"))
ontology = parse_ontology(data_path("ontology"))
lexicon = load_lexicon(data_path("lexicon"))
refs = reference_embeddings(lexicon, kb)
exclusions = load_exclusions(data_path("exclusions"))

doc = parse_conllu(conllu)[0]
print("\nannotations:")
for a in annotate_document(doc, kb, ontology, lexicon, refs, exclusions=exclusions):
    print(f"  sent {a.sent}: {a.hpo_id} {a.hpo_name} ({a.polarity}), "
          f"value {a.value} {a.unit}")

# The embedding side: finetuning clusters synonyms around their entity
result = finetune_sts(data_path("toy_kb"), epochs=2, batch_size=16, seed=7)
print(f"\nembedder finetuning: baseline loss {result.baseline_loss:.4f} -> "
      f"{result.epoch_losses[-1]:.4f} after {len(result.epoch_losses)} epochs")
vectors = result.model.embed(["pyrexia", "temperature"])
print(f"contextual vectors: shape {vectors.shape}, model {result.model.identifier}")
