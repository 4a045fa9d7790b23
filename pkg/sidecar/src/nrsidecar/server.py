"""HTTP service: POST /parse (CoNLL-U), POST /embed (vectors), GET /health.

Stateless after startup; the single embedder instance is shared read-only
across requests. Returns 400 for malformed bodies and 503 when the
embedding model is not loaded.
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from .embedder import TransformerEmbedder, build_default_embedder
from .parser import PARSER_NAME, to_conllu

logger = logging.getLogger(__name__)


class ParseRequest(BaseModel):
    doc_id: str
    text: str


class EmbedRequest(BaseModel):
    phrases: list[str]


def create_app(embedder: TransformerEmbedder | None = None) -> FastAPI:
    app = FastAPI(title="nrsidecar", version="0.1.0")
    app.state.embedder = embedder

    @app.get("/health")
    def health():
        model = app.state.embedder
        return {
            "parser": PARSER_NAME,
            "embedder": model.identifier if model is not None else "not loaded",
        }

    @app.post("/parse", response_class=PlainTextResponse)
    def parse(request: ParseRequest) -> str:
        if not request.doc_id.strip() or not request.text.strip():
            raise HTTPException(status_code=400, detail="doc_id and text must be non-empty")
        return to_conllu(request.doc_id.strip(), request.text)

    @app.post("/embed")
    def embed(request: EmbedRequest):
        model = app.state.embedder
        if model is None:
            raise HTTPException(status_code=503, detail="embedding model not loaded")
        if not request.phrases:
            raise HTTPException(status_code=400, detail="phrases must be non-empty")
        if any(not p.strip() for p in request.phrases):
            raise HTTPException(status_code=400, detail="phrases must be non-blank")
        vectors = model.embed(request.phrases)
        return {"dim": int(vectors.shape[1]), "vectors": vectors.tolist()}

    return app


def load_embedder(checkpoint: str | None, synonym_kb: str | None) -> TransformerEmbedder | None:
    """Checkpoint wins; otherwise build the seeded default from a synonym file."""
    try:
        if checkpoint:
            return TransformerEmbedder.load(checkpoint)
        if synonym_kb:
            return build_default_embedder(synonym_kb)
    except (OSError, ValueError, RuntimeError) as exc:
        logger.error("embedder load failed: %s", exc)
    return None


def serve(host: str = "127.0.0.1", port: int = 8900,
          checkpoint: str | None = None, synonym_kb: str | None = None) -> None:
    import uvicorn

    app = create_app(load_embedder(checkpoint, synonym_kb))
    uvicorn.run(app, host=host, port=port, log_level="info")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="nr-sidecar", description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8900)
    parser.add_argument("--checkpoint", help="finetuned embedder checkpoint (.pt)")
    parser.add_argument("--synonym-kb", help="knowledge file to build the default embedder from")
    args = parser.parse_args(argv)
    if args.checkpoint and not Path(args.checkpoint).exists():
        parser.error(f"checkpoint not found: {args.checkpoint}")
    serve(args.host, args.port, args.checkpoint, args.synonym_kb)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
