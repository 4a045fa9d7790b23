"""Walk through the knowledge base: entities, ranges, triples, bands.

The KB is one comma-separated file with five sections. Every numeric
entity carries per-unit normal ranges and exactly three phenotype
concepts: below-range, above-range (both affirmed when a measurement
falls outside) and the in-range concept (negated).
"""

from nrpheno import data_path, load_kb, validate_kb

kb = load_kb(data_path("kb"))

print(f"{len(kb.entities)} numeric entities:")
for entity in kb.entities:
    units = ", ".join(
        f"{r.unit} [{r.lower}-{r.upper}]" for r in kb.ranges_for(entity.entity_id)
    )
    print(f"  {entity.entity_id}: {entity.name} ({entity.abbreviation})  {units}")

print("\nPhenotype triples:")
for triple in kb.triples:
    name = kb.entity(triple.entity_id).name
    print(f"  {name}: below={triple.below_name}, above={triple.above_name}, "
          f"normal(negated)={triple.normal_name}")

print("\nGranular severity bands:")
for band in kb.granular_bands:
    print(f"  {band.primary_name} {band.lower}-{band.upper} {band.unit} "
          f"-> {band.granular_name}")

violations = validate_kb(kb)
print(f"\nvalidate_kb: {len(violations)} violations")

# Breaking an invariant turns up as data, not an exception
import dataclasses

broken = dataclasses.replace(
    kb, triples=(dataclasses.replace(kb.triples[0], below_hpo=kb.triples[0].above_hpo),)
    + kb.triples[1:]
)
for v in validate_kb(broken):
    print(f"  after mutation: {v}")
