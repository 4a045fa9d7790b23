"""Trainable token-embedding lexicon and its cosine-similarity objective.

The lexicon maps lowercase surface tokens to vectors; phrases embed as the
arithmetic mean of their token vectors. Training pulls the cosine between
each entity's name embedding and its synonyms' embeddings toward 1 and
pushes cross-entity pairs toward 0, by mini-batch gradient descent on the
squared error between cosine and label.

Serialized lexicons are bit-exact binary files: magic ``NREMB1``, u32-LE
dim, u32-LE entry count, then per entry a u16-LE key byte-length, the
UTF-8 key, and dim float32-LE components.
"""

from __future__ import annotations

import hashlib
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .knowledge import KnowledgeBase

logger = logging.getLogger(__name__)

MAGIC = b"NREMB1"
FULL_GRID_LIMIT = 10_000


class EmbeddingError(Exception):
    pass


class ZeroNormError(EmbeddingError):
    """Cosine similarity is undefined against a zero-norm vector."""

    def __init__(self, what: str):
        super().__init__(f"zero-norm vector for {what!r}: cosine undefined")
        self.what = what


class LexiconFormatError(EmbeddingError):
    pass


class DivergenceError(EmbeddingError):
    def __init__(self) -> None:
        super().__init__(
            "training loss became non-finite; use a smaller learning rate"
        )


def _oov_vector(token: str, dim: int) -> np.ndarray:
    """Deterministic unit vector for a token missing from the lexicon."""
    seed = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "little")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


class Lexicon:
    """Immutable token -> vector table of a fixed dimension.

    Published lexicons hold float32 vectors (the storage dtype); float64
    tables are accepted for numerical work such as gradient checking.
    """

    def __init__(self, dim: int, table: Mapping[str, np.ndarray]):
        if dim <= 0:
            raise EmbeddingError("dim must be positive")
        self.dim = dim
        frozen: dict[str, np.ndarray] = {}
        for key, vec in table.items():
            if not key:
                raise EmbeddingError("lexicon keys must be non-empty")
            arr = np.asarray(vec)
            if arr.shape != (dim,):
                raise EmbeddingError(
                    f"vector for {key!r} has shape {arr.shape}, expected ({dim},)"
                )
            if not np.all(np.isfinite(arr)):
                raise EmbeddingError(f"non-finite components in vector for {key!r}")
            arr = arr.copy()
            arr.setflags(write=False)
            frozen[key] = arr
        self._table = frozen

    def __contains__(self, token: str) -> bool:
        return token in self._table

    def __len__(self) -> int:
        return len(self._table)

    def keys(self) -> list[str]:
        return sorted(self._table)

    def vector(self, token: str) -> np.ndarray:
        """The token's vector; out-of-vocabulary tokens hash to a unit vector."""
        vec = self._table.get(token.lower())
        if vec is None:
            return _oov_vector(token.lower(), self.dim)
        return vec

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Lexicon):
            return NotImplemented
        if self.dim != other.dim or set(self._table) != set(other._table):
            return False
        return all(
            np.array_equal(self._table[k], other._table[k])
            and self._table[k].dtype == other._table[k].dtype
            for k in self._table
        )


def tokenize(phrase: str) -> list[str]:
    return phrase.lower().split()


def embed_phrase(lexicon: Lexicon, phrase: str) -> np.ndarray:
    """Mean of the per-token vectors of a phrase.

    Tokens are sorted before averaging so the result is bitwise invariant
    under token reordering.
    """
    tokens = tokenize(phrase)
    if not tokens:
        raise EmbeddingError("cannot embed an empty phrase")
    vecs = [np.asarray(lexicon.vector(t), dtype=np.float64) for t in sorted(tokens)]
    return np.mean(vecs, axis=0)


def cosine(u: np.ndarray, v: np.ndarray, what: str = "vector") -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroNormError(what)
    return float(np.dot(u, v) / (nu * nv))


@dataclass(frozen=True)
class TrainingPair:
    """One (entity, phrase) cell of the similarity-label grid.

    entity_phrase is the entity's name (the reference side of the cosine);
    label is 1.0 when phrase is one of that entity's synonyms, else 0.0.
    """

    entity_id: int
    entity_phrase: str
    phrase: str
    label: float


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 16
    epochs: int = 200
    learning_rate: float = 0.5
    batch_size: int = 16
    seed: int = 7
    negative_ratio: int = 4

    def __post_init__(self) -> None:
        for name in ("dim", "epochs", "batch_size", "seed", "negative_ratio"):
            if getattr(self, name) <= 0:
                raise EmbeddingError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise EmbeddingError("learning_rate must be positive")


def sts_loss(pairs: Sequence[TrainingPair], lexicon: Lexicon) -> float:
    """Mean squared difference between pair cosines and their labels.

    Over the full entity x synonym grid this equals the double mean across
    entities and synonyms; over a sampled subset it is the mean across the
    sampled cells.
    """
    if not pairs:
        raise EmbeddingError("sts_loss needs at least one pair")
    total = 0.0
    for p in pairs:
        u = embed_phrase(lexicon, p.entity_phrase)
        v = embed_phrase(lexicon, p.phrase)
        c = cosine(u, v, what=f"{p.entity_phrase} / {p.phrase}")
        total += (c - p.label) ** 2
    return total / len(pairs)


def _loss_and_grad(
    pairs: Sequence[TrainingPair], table: dict[str, np.ndarray], dim: int
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss over pairs and its gradient w.r.t. every table vector."""
    grads: dict[str, np.ndarray] = {}
    total = 0.0
    n = len(pairs)
    for p in pairs:
        tok_u = sorted(tokenize(p.entity_phrase))
        tok_v = sorted(tokenize(p.phrase))
        u = np.mean([table.get(t, _oov_vector(t, dim)) for t in tok_u], axis=0)
        v = np.mean([table.get(t, _oov_vector(t, dim)) for t in tok_v], axis=0)
        nu = float(np.linalg.norm(u))
        nv = float(np.linalg.norm(v))
        if nu == 0.0 or nv == 0.0:
            raise ZeroNormError(f"{p.entity_phrase} / {p.phrase}")
        c = float(np.dot(u, v) / (nu * nv))
        r = c - p.label
        total += r * r
        dc = 2.0 * r / n
        du = dc * (v / (nu * nv) - c * u / (nu * nu))
        dv = dc * (u / (nu * nv) - c * v / (nv * nv))
        share_u = du / len(tok_u)
        share_v = dv / len(tok_v)
        for t in tok_u:
            if t in table:
                g = grads.get(t)
                grads[t] = share_u.copy() if g is None else g + share_u
        for t in tok_v:
            if t in table:
                g = grads.get(t)
                grads[t] = share_v.copy() if g is None else g + share_v
    return total / n, grads


def loss_gradient(
    pairs: Sequence[TrainingPair], lexicon: Lexicon
) -> dict[str, np.ndarray]:
    """Analytic gradient of sts_loss w.r.t. each lexicon vector."""
    table = {k: np.asarray(lexicon.vector(k), dtype=np.float64) for k in lexicon.keys()}
    _, grads = _loss_and_grad(pairs, table, lexicon.dim)
    return {k: grads.get(k, np.zeros(lexicon.dim)) for k in table}


def training_vocabulary(kb: KnowledgeBase) -> list[str]:
    vocab: set[str] = set()
    for e in kb.entities:
        vocab.update(tokenize(e.name))
        for syn in kb.synonyms_for(e.entity_id):
            vocab.update(tokenize(syn))
    return sorted(vocab)


def initial_lexicon(vocab: Iterable[str], config: TrainConfig) -> Lexicon:
    """Seeded unit-norm starting table; deterministic for a given vocab set."""
    rng = np.random.default_rng(config.seed)
    table: dict[str, np.ndarray] = {}
    for token in sorted(set(vocab)):
        v = rng.standard_normal(config.dim)
        table[token] = (v / np.linalg.norm(v)).astype(np.float32)
    return Lexicon(config.dim, table)


def build_training_pairs(
    kb: KnowledgeBase, config: TrainConfig, rng: np.random.Generator | None = None
) -> list[TrainingPair]:
    """The entity x synonym label grid, sampled when it would be large.

    Below FULL_GRID_LIMIT cells the full grid is used; otherwise positives
    are kept and negatives sampled cross-entity at the configured ratio.
    """
    names = {e.entity_id: e.name for e in kb.entities}
    all_syns: list[tuple[int, str]] = []
    for e in kb.entities:
        for syn in kb.synonyms_for(e.entity_id):
            all_syns.append((e.entity_id, syn))
    phrases = list(dict.fromkeys(s for _, s in all_syns))
    owned = {eid: set(kb.synonyms_for(eid)) for eid in names}

    if len(names) * len(phrases) <= FULL_GRID_LIMIT:
        return [
            TrainingPair(eid, names[eid], s, 1.0 if s in owned[eid] else 0.0)
            for eid in names
            for s in phrases
        ]

    rng = rng or np.random.default_rng(config.seed)
    pairs: list[TrainingPair] = []
    for eid, syn in all_syns:
        pairs.append(TrainingPair(eid, names[eid], syn, 1.0))
        foreign = [s for s in phrases if s not in owned[eid]]
        if not foreign:
            continue
        picks = rng.choice(len(foreign), size=min(config.negative_ratio, len(foreign)), replace=False)
        for i in picks:
            pairs.append(TrainingPair(eid, names[eid], foreign[int(i)], 0.0))
    return pairs


def train_lexicon(
    kb: KnowledgeBase,
    config: TrainConfig | None = None,
    on_epoch: Callable[[int, float], None] | None = None,
) -> Lexicon:
    """Fit the token table to the synonym grid by mini-batch gradient descent.

    Deterministic for a given (kb file, config): initialization, shuffling
    and sampling all derive from config.seed. Logs per-epoch loss.
    """
    config = config or TrainConfig()
    entities_with_syns = [e for e in kb.entities if kb.synonyms_for(e.entity_id)]
    if len(entities_with_syns) < 2:
        raise EmbeddingError("training needs at least 2 entities with synonyms")

    rng = np.random.default_rng(config.seed)
    pairs = build_training_pairs(kb, config, rng)
    vocab = training_vocabulary(kb)
    init = initial_lexicon(vocab, config)
    table = {k: np.asarray(init.vector(k), dtype=np.float64) for k in init.keys()}

    order = np.arange(len(pairs))
    for epoch in range(config.epochs):
        rng.shuffle(order)
        # divergence surfaces as a non-finite epoch loss; suppress the
        # intermediate overflow warnings that precede it
        with np.errstate(over="ignore", invalid="ignore"):
            for lo in range(0, len(order), config.batch_size):
                batch = [pairs[i] for i in order[lo : lo + config.batch_size]]
                _, grads = _loss_and_grad(batch, table, config.dim)
                for tok, g in grads.items():
                    table[tok] = table[tok] - config.learning_rate * g
            epoch_loss, _ = _loss_and_grad(pairs, table, config.dim)
        if not np.isfinite(epoch_loss):
            raise DivergenceError()
        logger.info("epoch %d loss %.6f", epoch + 1, epoch_loss)
        if on_epoch is not None:
            on_epoch(epoch + 1, epoch_loss)

    published: dict[str, np.ndarray] = {}
    with np.errstate(over="ignore"):
        for tok, vec in table.items():
            cast = vec.astype(np.float32)
            if not np.all(np.isfinite(cast)):
                # finite in float64 but out of float32 range: training ran away
                raise DivergenceError()
            published[tok] = cast
    return Lexicon(config.dim, published)


def reference_embeddings(lexicon: Lexicon, kb: KnowledgeBase) -> dict[int, np.ndarray]:
    """Embedding of each entity's name, keyed by entity id.

    Pure and deterministic; compute once per run and share.
    """
    return {e.entity_id: embed_phrase(lexicon, e.name) for e in kb.entities}


def nearest_entities(
    lexicon: Lexicon,
    entity_embeddings: Mapping[int, np.ndarray],
    phrase: str,
    top_k: int = 3,
) -> list[tuple[int, float]]:
    """Entities ranked by cosine against the phrase embedding."""
    v = embed_phrase(lexicon, phrase)
    scored = [
        (eid, cosine(v, entity_embeddings[eid], what=phrase))
        for eid in sorted(entity_embeddings)
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:top_k]


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    """Write the bit-exact binary format; entries sorted by key."""
    keys = lexicon.keys()
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", lexicon.dim)
    out += struct.pack("<I", len(keys))
    for key in keys:
        kb_ = key.encode("utf-8")
        if len(kb_) > 0xFFFF:
            raise LexiconFormatError(f"key too long: {key[:32]!r}...")
        out += struct.pack("<H", len(kb_))
        out += kb_
        out += np.asarray(lexicon.vector(key), dtype="<f4").tobytes()
    Path(path).write_bytes(bytes(out))


def load_lexicon(path: str | Path, expected_dim: int | None = None) -> Lexicon:
    """Read a lexicon file, verifying magic, sizes and finiteness."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise LexiconFormatError(f"{path}: not a lexicon file (bad magic)")
    if len(data) < len(MAGIC) + 8:
        raise LexiconFormatError(f"{path}: truncated header")
    dim = struct.unpack_from("<I", data, len(MAGIC))[0]
    count = struct.unpack_from("<I", data, len(MAGIC) + 4)[0]
    if dim == 0:
        raise LexiconFormatError(f"{path}: dim must be positive")
    if expected_dim is not None and dim != expected_dim:
        raise LexiconFormatError(f"{path}: dim mismatch (file {dim}, expected {expected_dim})")
    offset = len(MAGIC) + 8
    table: dict[str, np.ndarray] = {}
    vec_bytes = dim * 4
    for k in range(count):
        if offset + 2 > len(data):
            raise LexiconFormatError(f"{path}: truncated at entry {k}")
        (key_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if key_len == 0:
            raise LexiconFormatError(f"{path}: empty key at entry {k}")
        if offset + key_len + vec_bytes > len(data):
            raise LexiconFormatError(f"{path}: truncated at entry {k}")
        key = data[offset : offset + key_len].decode("utf-8")
        offset += key_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += vec_bytes
        if key in table:
            raise LexiconFormatError(f"{path}: duplicate key {key!r}")
        if not np.all(np.isfinite(vec)):
            raise LexiconFormatError(f"{path}: non-finite components for key {key!r}")
        table[key] = vec
    if offset != len(data):
        raise LexiconFormatError(f"{path}: trailing data after entry {count - 1}")
    return Lexicon(dim, table)
