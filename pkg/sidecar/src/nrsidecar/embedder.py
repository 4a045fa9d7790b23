"""Contextual phrase embedder: a small transformer encoder over word tokens.

The default model is built from scratch with a seeded initialization and a
vocabulary taken from the synonym knowledge file, plus hash buckets for
out-of-vocabulary words. The model identifier travels in checkpoints and
the /health endpoint; any other encoder can be swapped in by loading a
different checkpoint path, so the model is configuration, not code.

Phrase vectors are the mean over token positions of the encoder output
(mean pooling), matching the pooling the downstream linker assumes.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

DEFAULT_MODEL_NAME = "tiny-clinical-encoder"


@dataclass(frozen=True)
class EmbedderConfig:
    dim: int = 64
    layers: int = 2
    heads: int = 4
    feedforward: int = 128
    max_len: int = 32
    oov_buckets: int = 256
    seed: int = 1234
    name: str = DEFAULT_MODEL_NAME


def _bucket(token: str, n_buckets: int) -> int:
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") % n_buckets


class TransformerEmbedder(nn.Module):
    """Word-level encoder with deterministic seeded initialization."""

    def __init__(self, vocab: list[str], config: EmbedderConfig | None = None):
        super().__init__()
        self.config = config or EmbedderConfig()
        self.vocab = sorted(set(w.lower() for w in vocab))
        self._ids = {w: i for i, w in enumerate(self.vocab)}
        cfg = self.config
        torch.manual_seed(cfg.seed)
        n_embeddings = len(self.vocab) + cfg.oov_buckets
        self.token_embedding = nn.Embedding(n_embeddings, cfg.dim)
        self.position_embedding = nn.Embedding(cfg.max_len, cfg.dim)
        layer = nn.TransformerEncoderLayer(
            d_model=cfg.dim,
            nhead=cfg.heads,
            dim_feedforward=cfg.feedforward,
            batch_first=True,
            dropout=0.0,
        )
        self.encoder = nn.TransformerEncoder(
            layer, num_layers=cfg.layers, enable_nested_tensor=False
        )

    @property
    def identifier(self) -> str:
        cfg = self.config
        return f"{cfg.name}-d{cfg.dim}-l{cfg.layers}"

    def token_ids(self, phrase: str) -> list[int]:
        ids = []
        for word in phrase.lower().split()[: self.config.max_len]:
            idx = self._ids.get(word)
            if idx is None:
                idx = len(self.vocab) + _bucket(word, self.config.oov_buckets)
            ids.append(idx)
        return ids

    def forward(self, phrases: list[str]) -> torch.Tensor:
        """(len(phrases), dim) mean-pooled phrase embeddings, with grad."""
        if not phrases:
            raise ValueError("phrases must be non-empty")
        id_lists = [self.token_ids(p) for p in phrases]
        if any(not ids for ids in id_lists):
            raise ValueError("cannot embed an empty phrase")
        width = max(len(ids) for ids in id_lists)
        batch = torch.zeros(len(id_lists), width, dtype=torch.long)
        mask = torch.ones(len(id_lists), width, dtype=torch.bool)  # True = pad
        for r, ids in enumerate(id_lists):
            batch[r, : len(ids)] = torch.tensor(ids, dtype=torch.long)
            mask[r, : len(ids)] = False
        positions = torch.arange(width).unsqueeze(0)
        hidden = self.token_embedding(batch) + self.position_embedding(positions)
        hidden = self.encoder(hidden, src_key_padding_mask=mask)
        keep = (~mask).unsqueeze(-1).to(hidden.dtype)
        summed = (hidden * keep).sum(dim=1)
        counts = keep.sum(dim=1).clamp(min=1.0)
        return summed / counts

    @torch.no_grad()
    def embed(self, phrases: list[str]) -> np.ndarray:
        self.eval()
        return self.forward(phrases).cpu().numpy().astype(np.float32)

    def save(self, path: str | Path) -> None:
        torch.save(
            {
                "config": asdict(self.config),
                "vocab": self.vocab,
                "state_dict": self.state_dict(),
            },
            str(path),
        )

    @classmethod
    def load(cls, path: str | Path) -> "TransformerEmbedder":
        payload = torch.load(str(path), map_location="cpu", weights_only=False)
        model = cls(payload["vocab"], EmbedderConfig(**payload["config"]))
        model.load_state_dict(payload["state_dict"])
        model.eval()
        return model


def read_synonym_kb(path: str | Path) -> dict[int, dict]:
    """Read #ENTITIES and #SYNONYMS sections of a knowledge file.

    Returns {entity_id: {"name": str, "abbreviation": str, "synonyms":
    [str, ...]}} where the synonym list always starts with the name and
    abbreviation. Only the two sections this service needs are read; the
    rest of the file format belongs to the annotator.
    """
    entities: dict[int, dict] = {}
    synonyms: dict[int, list[str]] = {}
    section = None
    header_seen = False
    markers = {"#ENTITIES", "#RANGES", "#TRIPLES", "#GRANULAR", "#SYNONYMS"}
    for raw in Path(path).read_text(encoding="utf-8").split("\n"):
        line = raw.strip()
        if not line:
            continue
        if line in markers:
            section = line
            header_seen = False
            continue
        if line.startswith("#"):
            continue
        if section not in ("#ENTITIES", "#SYNONYMS"):
            continue
        if not header_seen:
            header_seen = True
            continue
        fields = [f.strip() for f in line.split(",")]
        if section == "#ENTITIES":
            eid = int(fields[0])
            entities[eid] = {
                "name": fields[1].lower(),
                "abbreviation": fields[2].lower(),
            }
        else:
            synonyms.setdefault(int(fields[0]), []).append(fields[1].lower())
    if not entities:
        raise ValueError(f"{path}: no entities defined")
    out: dict[int, dict] = {}
    for eid, info in entities.items():
        ordered = [info["name"]]
        if info["abbreviation"] not in ordered:
            ordered.append(info["abbreviation"])
        for syn in synonyms.get(eid, []):
            if syn not in ordered:
                ordered.append(syn)
        out[eid] = {**info, "synonyms": ordered}
    return out


def vocabulary_from_synonyms(synonym_table: dict[int, dict]) -> list[str]:
    vocab: set[str] = set()
    for info in synonym_table.values():
        for phrase in info["synonyms"]:
            vocab.update(phrase.split())
    return sorted(vocab)


def build_default_embedder(synonym_kb_path: str | Path,
                           config: EmbedderConfig | None = None) -> TransformerEmbedder:
    table = read_synonym_kb(synonym_kb_path)
    return TransformerEmbedder(vocabulary_from_synonyms(table), config)
