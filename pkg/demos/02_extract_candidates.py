"""Number mentions and lexical candidates from a dependency parse.

The canonical sentence "her pyrexia increased to 102F and she was begun
on levofloxacin." illustrates the traversal: the number's head, its
children, and, because 102F attaches via the oblique relation, the
head's subject/object/conjunct dependents too. That picks up exactly
pyrexia, increased and begun.
"""

from nrpheno import data_path, extract_candidates, extract_numbers, load_exclusions, parse_conllu

doc = parse_conllu(data_path("canonical").read_text(encoding="utf-8"))[0]
sentence = doc.sentences[0]
exclusions = load_exclusions(data_path("exclusions"))

print("sentence:", sentence.text)
print("\ntokens:")
for tok in sentence.tokens:
    print(f"  {tok.index:>2} {tok.form:<14} {tok.upos:<6} head={tok.head:<2} {tok.deprel}")

numbers = extract_numbers(sentence, exclusions)
print("\nnumber mentions:")
for n in numbers:
    print(f"  value={n.value} unit_hint={n.unit_hint!r} raw={n.raw!r}")

for n in numbers:
    cset = extract_candidates(sentence, n)
    print(f"\ncandidates connected to {n.raw}:")
    for cand in cset.candidates:
        print(f"  {cand.phrase!r:<14} via {cand.relation_path}")

# Tokens the exclusion dictionary rejects never become numbers
print("\nexclusion examples: 'B12' in dictionary:", "B12" in exclusions)
print("date tokens like 12/03/2019 are dropped by pattern, slash pairs like")
print("124/55 split into two component mentions instead.")
