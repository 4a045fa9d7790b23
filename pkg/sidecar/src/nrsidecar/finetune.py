"""Cosine-similarity finetuning of the embedder on a synonym knowledge file.

Each (entity name, phrase) cell of the synonym grid carries a 0/1 label;
the loss is the mean squared gap between the embedding cosine and the
label, pulling an entity's synonyms together and pushing other entities'
synonyms away.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import torch

from .embedder import (
    EmbedderConfig,
    TransformerEmbedder,
    read_synonym_kb,
    vocabulary_from_synonyms,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FinetuneResult:
    model: TransformerEmbedder
    epoch_losses: list[float]
    baseline_loss: float


def label_grid(synonym_table: dict[int, dict]) -> list[tuple[str, str, float]]:
    """(entity name, phrase, label) over the full entity x synonym grid."""
    phrases: list[str] = []
    owners: dict[str, set[int]] = {}
    for eid, info in synonym_table.items():
        for syn in info["synonyms"]:
            if syn not in owners:
                phrases.append(syn)
                owners[syn] = set()
            owners[syn].add(eid)
    grid = []
    for eid, info in synonym_table.items():
        for phrase in phrases:
            grid.append((info["name"], phrase, 1.0 if eid in owners[phrase] else 0.0))
    return grid


def grid_loss(model: TransformerEmbedder, grid: list[tuple[str, str, float]]) -> float:
    with torch.no_grad():
        return float(_batch_loss(model, grid))


def _batch_loss(model: TransformerEmbedder, batch: list[tuple[str, str, float]]) -> torch.Tensor:
    lefts = model.forward([g[0] for g in batch])
    rights = model.forward([g[1] for g in batch])
    labels = torch.tensor([g[2] for g in batch], dtype=lefts.dtype)
    cosines = torch.nn.functional.cosine_similarity(lefts, rights, dim=1)
    return torch.mean((cosines - labels) ** 2)


def finetune_sts(
    synonym_file: str | Path,
    epochs: int = 4,
    batch_size: int = 16,
    learning_rate: float = 1e-3,
    seed: int = 7,
    base_model: TransformerEmbedder | None = None,
) -> FinetuneResult:
    """Finetune (or train from the seeded base) on the synonym grid.

    Zero epochs returns the base model untouched. Loss is logged per
    epoch; the baseline is the grid loss before any update.
    """
    table = read_synonym_kb(synonym_file)
    if not any(info["synonyms"] for info in table.values()):
        raise ValueError(f"{synonym_file}: no synonyms to train on")
    if base_model is None:
        base_model = TransformerEmbedder(
            vocabulary_from_synonyms(table), EmbedderConfig()
        )
    model = base_model
    grid = label_grid(table)
    baseline = grid_loss(model, grid)
    logger.info("baseline loss %.6f over %d pairs", baseline, len(grid))

    generator = torch.Generator().manual_seed(seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=learning_rate)
    losses: list[float] = []
    for epoch in range(epochs):
        model.train()
        order = torch.randperm(len(grid), generator=generator).tolist()
        for lo in range(0, len(order), batch_size):
            batch = [grid[i] for i in order[lo : lo + batch_size]]
            optimizer.zero_grad()
            loss = _batch_loss(model, batch)
            loss.backward()
            optimizer.step()
        epoch_loss = grid_loss(model, grid)
        losses.append(epoch_loss)
        logger.info("epoch %d loss %.6f", epoch + 1, epoch_loss)
    model.eval()
    return FinetuneResult(model=model, epoch_losses=losses, baseline_loss=baseline)


def nearest_entity_accuracy(model: TransformerEmbedder, synonym_table: dict[int, dict]) -> float:
    """Fraction of synonyms whose nearest entity-name embedding is their own."""
    names = {eid: info["name"] for eid, info in synonym_table.items()}
    eids = sorted(names)
    refs = torch.tensor(model.embed([names[e] for e in eids]))
    hits = total = 0
    for eid, info in synonym_table.items():
        for syn in info["synonyms"]:
            v = torch.tensor(model.embed([syn])[0])
            cosines = torch.nn.functional.cosine_similarity(refs, v.unsqueeze(0), dim=1)
            best = eids[int(torch.argmax(cosines))]
            total += 1
            hits += best == eid
    return hits / total if total else 0.0
