from pathlib import Path

import pytest
from hypothesis import settings

from hadamard_spectra import ExactMatrix, Triple, check_hadamard

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
DATA = Path(__file__).resolve().parent / "data"

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def triple(R, B, L=None):
    if isinstance(R, int):
        R = [[R]]
        B = [[b] for b in B]
        L = None if L is None else [[l] for l in L]
    return Triple(ExactMatrix(R), B, L)


def load(name) -> Triple:
    return Triple.load(CORPUS / f"{name}.json")


def corpus_names():
    return sorted(p.stem for p in CORPUS.glob("*.json"))


def hadamard_corpus():
    out = []
    for name in corpus_names():
        T = load(name)
        if T.L is not None and check_hadamard(T).passed:
            out.append(name)
    return out


@pytest.fixture
def jp4():
    return load("jp4")


@pytest.fixture
def product2d():
    return load("product2d")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
