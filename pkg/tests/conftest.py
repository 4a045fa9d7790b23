import pytest

from nrpheno import data_path, load_kb, load_lexicon, parse_ontology


@pytest.fixture(scope="session")
def sample_kb():
    return load_kb(data_path("kb"))


@pytest.fixture(scope="session")
def train_kb():
    return load_kb(data_path("lexicon_train_kb"))


@pytest.fixture(scope="session")
def toy_kb():
    return load_kb(data_path("toy_kb"))


@pytest.fixture(scope="session")
def mini_ontology():
    return parse_ontology(data_path("ontology"))


@pytest.fixture(scope="session")
def shipped_lexicon():
    return load_lexicon(data_path("lexicon"))


@pytest.fixture(scope="session")
def canonical_document():
    from nrpheno import parse_conllu

    return parse_conllu(data_path("canonical").read_text(encoding="utf-8"))[0]
