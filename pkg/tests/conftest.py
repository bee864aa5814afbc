from pathlib import Path

import pytest

import clploop
from clploop import analyze_program, parse_program

CORPUS_PATH = Path(clploop.__file__).resolve().parent / "corpus" / "demo.clp"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def corpus_path() -> Path:
    return CORPUS_PATH


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture(scope="session")
def corpus_program():
    return parse_program(CORPUS_PATH.read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def corpus_report(corpus_program):
    # one shared default-options analysis; tests that need other options
    # (timing, tiny limits) run their own
    return analyze_program(corpus_program)
