import os

import pytest

from cbharness.codebook import parse_codebook
from cbharness.corpus import load_dataset

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def data_path(name: str) -> str:
    return os.path.join(DATA_DIR, name)


@pytest.fixture(scope="session")
def excerpt_path():
    return data_path("excerpt.cb.txt")


@pytest.fixture(scope="session")
def excerpt_source(excerpt_path):
    with open(excerpt_path, encoding="utf-8") as handle:
        return handle.read()


@pytest.fixture(scope="session")
def excerpt(excerpt_source):
    return parse_codebook(excerpt_source)


@pytest.fixture(scope="session")
def behave_cb_path():
    return data_path("behave.cb.txt")


@pytest.fixture(scope="session")
def behave_cb(behave_cb_path):
    with open(behave_cb_path, encoding="utf-8") as handle:
        return parse_codebook(handle.read())


@pytest.fixture(scope="session")
def corpus_path():
    return data_path("corpus.jsonl")


@pytest.fixture(scope="session")
def corpus(corpus_path):
    return load_dataset(corpus_path)


@pytest.fixture(scope="session")
def duplicate_cb_path():
    return data_path("duplicate.cb.txt")
