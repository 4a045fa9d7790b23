"""Export model token embeddings as an annotator-loadable lexicon file.

The file layout is the annotator's binary lexicon format: magic
``NREMB1``, u32-LE dim, u32-LE entry count, then per entry a u16-LE key
byte-length, UTF-8 key, and dim float32-LE components, entries sorted by
key. Keys are surface tokens; the annotator mean-pools them per phrase.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .embedder import TransformerEmbedder

MAGIC = b"NREMB1"


def read_vocabulary(path: str | Path) -> list[str]:
    """Unique lowercase tokens from a vocabulary file (one entry per line;
    multi-word lines contribute each of their words)."""
    tokens: set[str] = set()
    for raw in Path(path).read_text(encoding="utf-8").split("\n"):
        line = raw.strip().lower()
        if not line or line.startswith("#"):
            continue
        tokens.update(line.split())
    return sorted(tokens)


def export_lexicon(
    model: TransformerEmbedder, vocabulary_file: str | Path, out_path: str | Path
) -> int:
    """Write one vector per vocabulary token; returns the entry count."""
    tokens = read_vocabulary(vocabulary_file)
    if not tokens:
        raise ValueError(f"{vocabulary_file}: empty vocabulary")
    # one forward pass per token: a token's vector must not depend on what
    # else happens to be in the vocabulary file (batching changes gemm
    # rounding on CPU)
    vectors = np.vstack([model.embed([token]) for token in tokens])
    dim = vectors.shape[1]
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", dim)
    out += struct.pack("<I", len(tokens))
    for token, vector in zip(tokens, vectors):
        key = token.encode("utf-8")
        out += struct.pack("<H", len(key))
        out += key
        out += np.ascontiguousarray(vector, dtype="<f4").tobytes()
    Path(out_path).write_bytes(bytes(out))
    return len(tokens)
