"""The ``nr`` command line: annotate, evaluate, kb validate, embed train/nearest.

Configuration precedence: explicit flag > key=value config file (--config)
> NR_THRESHOLD environment variable (threshold only) > built-in default.
Exit codes: 0 success, 1 validation failure, 2 resource or I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import embedding, evaluation, extraction, knowledge, ontology
from .assignment import AssignmentError, annotate_document, write_annotations
from .linking import DEFAULT_THRESHOLD

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RESOURCE = 2


class ResourceError(Exception):
    pass


def _fail(message: str, code: int) -> int:
    print(f"nr: error: {message}", file=sys.stderr)
    return code


def _read_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ResourceError(f"cannot read config file: {exc}") from None
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ResourceError(f"config line {lineno}: expected key=value")
        out[key.strip()] = value.strip()
    return out


def _resolve_threshold(args: argparse.Namespace, config: dict[str, str]) -> float:
    if args.threshold is not None:
        return args.threshold
    for source, raw in (("config file", config.get("threshold")),
                        ("NR_THRESHOLD", os.environ.get("NR_THRESHOLD"))):
        if raw is not None:
            try:
                return float(raw)
            except ValueError:
                raise ResourceError(f"bad threshold in {source}: {raw!r}") from None
    return DEFAULT_THRESHOLD


def _resolve(args: argparse.Namespace, config: dict[str, str], key: str):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return config.get(key)


def _load_resources(kb_path, onto_path, lexicon_path, exclusions_path, need_lexicon):
    if not kb_path:
        raise ResourceError("a knowledge base is required (--kb)")
    if not onto_path:
        raise ResourceError("an ontology is required (--ontology)")
    try:
        kb = knowledge.load_kb(kb_path)
    except (OSError, knowledge.KBError) as exc:
        raise ResourceError(f"knowledge base: {exc}") from None
    try:
        onto = ontology.parse_ontology(onto_path)
    except (OSError, ontology.OntologyError) as exc:
        raise ResourceError(f"ontology: {exc}") from None
    missing = sorted(h for h in kb.hpo_ids() if h not in onto)
    if missing:
        raise ResourceError(f"KB references HPO ids missing from the ontology: {missing}")
    lexicon = None
    if need_lexicon:
        if not lexicon_path:
            raise ResourceError("the embedding linker needs a lexicon (--lexicon)")
        try:
            lexicon = embedding.load_lexicon(lexicon_path)
        except (OSError, embedding.EmbeddingError) as exc:
            raise ResourceError(f"lexicon: {exc}") from None
    exclusions = None
    if exclusions_path:
        try:
            exclusions = extraction.load_exclusions(exclusions_path)
        except OSError as exc:
            raise ResourceError(f"exclusions: {exc}") from None
    return kb, onto, lexicon, exclusions


def _fetch_parses(text: str, service_url: str, doc_prefix: str) -> str:
    """Send blank-line-separated blocks of raw text to a /parse endpoint."""
    blocks = [b.strip() for b in text.split("\n\n") if b.strip()]
    chunks = []
    for i, block in enumerate(blocks, start=1):
        payload = json.dumps({"doc_id": f"{doc_prefix}{i:04d}", "text": block}).encode("utf-8")
        req = urllib.request.Request(
            service_url.rstrip("/") + "/parse",
            data=payload,
            headers={"Content-Type": "application/json"},
        )
        try:
            with urllib.request.urlopen(req) as resp:
                chunks.append(resp.read().decode("utf-8"))
        except OSError as exc:
            raise ResourceError(f"parse service: {exc}") from None
    return "\n".join(chunks)


def _looks_like_conllu(text: str) -> bool:
    for raw in text.split("\n"):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith(("newdoc", "sent_id", "text")):
                return True
            continue
        return len(line.split("\t")) == 10
    return False


def cmd_annotate(args: argparse.Namespace) -> int:
    config = _read_config_file(args.config) if args.config else {}
    threshold = _resolve_threshold(args, config)
    if not 0 < threshold <= 1:
        return _fail(f"threshold must be in (0, 1], got {threshold}", EXIT_VALIDATION)
    linker = args.linker or config.get("linker", "embedding")
    kb_path = _resolve(args, config, "kb")
    onto_path = _resolve(args, config, "ontology")
    lex_path = _resolve(args, config, "lexicon")
    excl_path = _resolve(args, config, "exclusions")
    input_path = _resolve(args, config, "input")
    output_path = _resolve(args, config, "output")
    if not input_path:
        return _fail("an input file is required (--input)", EXIT_RESOURCE)

    try:
        kb, onto, lexicon, exclusions = _load_resources(
            kb_path, onto_path, lex_path, excl_path, need_lexicon=linker == "embedding"
        )
        try:
            text = Path(input_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ResourceError(f"input: {exc}") from None
        if not _looks_like_conllu(text):
            if args.parse_service:
                text = _fetch_parses(text, args.parse_service, Path(input_path).stem + "-")
            else:
                raise ResourceError(
                    "input does not look like CoNLL-U; pass dependency-parsed "
                    "input, or give --parse-service URL to parse raw text"
                )
        try:
            documents = extraction.parse_conllu(text)
        except extraction.ConlluError as exc:
            raise ResourceError(f"input: {exc}") from None
    except ResourceError as exc:
        return _fail(str(exc), EXIT_RESOURCE)

    refs = embedding.reference_embeddings(lexicon, kb) if lexicon is not None else None

    def work(doc):
        return annotate_document(
            doc, kb, onto, lexicon, refs,
            threshold=threshold, exclusions=exclusions, linker=linker,
        )

    jobs = max(1, args.jobs)
    try:
        if jobs == 1 or len(documents) <= 1:
            per_doc = [work(d) for d in documents]
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                per_doc = list(pool.map(work, documents))
    except (AssignmentError, embedding.EmbeddingError) as exc:
        return _fail(f"annotation: {exc}", EXIT_VALIDATION)

    annotations = [a for doc_annos in per_doc for a in doc_annos]
    if args.suppress_negated:
        annotations = [a for a in annotations if a.polarity == "affirmed"]

    n_numbers = sum(
        len(extraction.extract_numbers(s, exclusions))
        for d in documents
        for s in d.sentences
    )
    n_linked = sum(len(doc_annos) for doc_annos in per_doc)

    if output_path and output_path != "-":
        with open(output_path, "w", encoding="utf-8", newline="\n") as fp:
            written = write_annotations(annotations, fp)
    else:
        written = write_annotations(annotations, sys.stdout)
    print(
        f"documents={len(documents)} numbers={n_numbers} linked={n_linked} annotated={written}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _read_config_file(args.config) if args.config else {}
    gold_path = _resolve(args, config, "gold")
    pred_path = _resolve(args, config, "pred")
    onto_path = _resolve(args, config, "ontology")
    if not gold_path or not pred_path:
        return _fail("gold and prediction files are required", EXIT_RESOURCE)
    try:
        with open(gold_path, encoding="utf-8") as fp:
            gold = evaluation.read_labeled(fp)
        with open(pred_path, encoding="utf-8") as fp:
            pred = evaluation.read_labeled(fp)
    except (OSError, evaluation.EvaluationError) as exc:
        return _fail(str(exc), EXIT_RESOURCE)
    if args.ignore_polarity:
        gold = evaluation.strip_polarity(gold)
        pred = evaluation.strip_polarity(pred)

    rows: list[tuple[str, evaluation.Metrics]] = []
    if args.mode in ("exact", "both"):
        rows.append(("exact", evaluation.evaluate_exact(gold, pred)))
    if args.mode in ("generalized", "both"):
        if not onto_path:
            return _fail("generalized evaluation needs --ontology", EXIT_RESOURCE)
        try:
            onto = ontology.parse_ontology(onto_path)
            rows.append(("generalized", evaluation.evaluate_generalized(gold, pred, onto)))
        except (OSError, ontology.OntologyError, evaluation.EvaluationError) as exc:
            return _fail(str(exc), EXIT_RESOURCE)
    for mode, m in rows:
        print(evaluation.metrics_json(mode, m))
    print(evaluation.metrics_table(rows))
    return EXIT_OK


def cmd_kb_validate(args: argparse.Namespace) -> int:
    try:
        kb = knowledge.load_kb(args.kb)
        violations = knowledge.validate_kb(kb)
    except OSError as exc:
        return _fail(str(exc), EXIT_RESOURCE)
    except knowledge.KBIntegrityError as exc:
        violations = exc.violations
    except knowledge.KBParseError as exc:
        return _fail(f"parse error: {exc}", EXIT_VALIDATION)
    print(f"{len(violations)} violations")
    for v in violations:
        print(str(v))
    return EXIT_OK if not violations else EXIT_VALIDATION


def cmd_embed_train(args: argparse.Namespace) -> int:
    try:
        kb = knowledge.load_kb(args.kb)
    except (OSError, knowledge.KBError) as exc:
        return _fail(str(exc), EXIT_RESOURCE)
    try:
        cfg = embedding.TrainConfig(
            dim=args.dim,
            epochs=args.epochs,
            learning_rate=args.learning_rate,
            batch_size=args.batch_size,
            seed=args.seed,
            negative_ratio=args.negative_ratio,
        )
        lexicon = embedding.train_lexicon(
            kb, cfg,
            on_epoch=lambda e, l: print(f"epoch {e} loss {l:.6f}", file=sys.stderr),
        )
    except embedding.DivergenceError as exc:
        return _fail(str(exc), EXIT_VALIDATION)
    except embedding.EmbeddingError as exc:
        return _fail(str(exc), EXIT_VALIDATION)
    try:
        embedding.save_lexicon(lexicon, args.out)
    except OSError as exc:
        return _fail(str(exc), EXIT_RESOURCE)
    print(f"wrote {len(lexicon)} vectors (dim {lexicon.dim}) to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_embed_nearest(args: argparse.Namespace) -> int:
    try:
        lexicon = embedding.load_lexicon(args.lexicon)
        kb = knowledge.load_kb(args.kb)
    except (OSError, embedding.EmbeddingError, knowledge.KBError) as exc:
        return _fail(str(exc), EXIT_RESOURCE)
    refs = embedding.reference_embeddings(lexicon, kb)
    ranked = embedding.nearest_entities(lexicon, refs, args.phrase, top_k=args.top)
    for eid, score in ranked:
        print(f"{score:.4f}\t{eid}\t{kb.entity(eid).name}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ann = sub.add_parser("annotate", help="annotate a CoNLL-U file with phenotype concepts")
    p_ann.add_argument("--kb")
    p_ann.add_argument("--ontology")
    p_ann.add_argument("--lexicon")
    p_ann.add_argument("--exclusions")
    p_ann.add_argument("--input")
    p_ann.add_argument("--output", help="annotation JSONL path ('-' or omitted: stdout)")
    p_ann.add_argument("--threshold", type=float, default=None)
    p_ann.add_argument("--linker", choices=["embedding", "shallow"], default=None)
    p_ann.add_argument("--suppress-negated", action="store_true")
    p_ann.add_argument("--jobs", type=int, default=1)
    p_ann.add_argument("--parse-service", help="URL of a /parse service for raw-text input")
    p_ann.add_argument("--config")
    p_ann.set_defaults(func=cmd_annotate)

    p_eval = sub.add_parser("evaluate", help="score predictions against a gold file")
    p_eval.add_argument("--gold")
    p_eval.add_argument("--pred")
    p_eval.add_argument("--ontology")
    p_eval.add_argument("--mode", choices=["exact", "generalized", "both"], default="both")
    p_eval.add_argument("--ignore-polarity", action="store_true")
    p_eval.add_argument("--config")
    p_eval.set_defaults(func=cmd_evaluate)

    p_kb = sub.add_parser("kb", help="knowledge-base tools")
    kb_sub = p_kb.add_subparsers(dest="kb_command", required=True)
    p_kbv = kb_sub.add_parser("validate", help="check a KB file against every invariant")
    p_kbv.add_argument("--kb", required=True)
    p_kbv.set_defaults(func=cmd_kb_validate)

    p_embed = sub.add_parser("embed", help="lexicon tools")
    embed_sub = p_embed.add_subparsers(dest="embed_command", required=True)
    p_tr = embed_sub.add_parser("train", help="fit a lexicon from a KB synonym file")
    p_tr.add_argument("--kb", required=True)
    p_tr.add_argument("--out", required=True)
    p_tr.add_argument("--dim", type=int, default=16)
    p_tr.add_argument("--epochs", type=int, default=200)
    p_tr.add_argument("--learning-rate", type=float, default=0.5)
    p_tr.add_argument("--batch-size", type=int, default=16)
    p_tr.add_argument("--seed", type=int, default=7)
    p_tr.add_argument("--negative-ratio", type=int, default=4)
    p_tr.set_defaults(func=cmd_embed_train)
    p_nn = embed_sub.add_parser("nearest", help="rank entities by cosine for a phrase")
    p_nn.add_argument("--lexicon", required=True)
    p_nn.add_argument("--kb", required=True)
    p_nn.add_argument("--top", type=int, default=3)
    p_nn.add_argument("phrase")
    p_nn.set_defaults(func=cmd_embed_nearest)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceError as exc:
        return _fail(str(exc), EXIT_RESOURCE)


if __name__ == "__main__":
    sys.exit(main())
