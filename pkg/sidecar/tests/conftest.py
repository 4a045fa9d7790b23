import pytest

from nrpheno import data_path
from nrsidecar import build_default_embedder, finetune_sts, read_synonym_kb


@pytest.fixture(scope="session")
def toy_kb_path():
    return str(data_path("toy_kb"))


@pytest.fixture(scope="session")
def toy_synonym_table(toy_kb_path):
    return read_synonym_kb(toy_kb_path)


@pytest.fixture(scope="session")
def base_embedder(toy_kb_path):
    return build_default_embedder(toy_kb_path)


@pytest.fixture(scope="session")
def finetuned(toy_kb_path):
    # fresh base so the session-wide base_embedder stays pretrained
    return finetune_sts(toy_kb_path, epochs=4, batch_size=16, seed=7)
