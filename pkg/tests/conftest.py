from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest
from hypothesis import settings

from hierpi.basetypes import BaseForest
from hierpi.syntax import parse_term

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def load(name: str):
    return parse_term((CORPUS / f"{name}.pi").read_text())


def forest(name: str) -> BaseForest:
    return BaseForest.from_json((CORPUS / f"{name}.json").read_text())


SCMD = BaseForest.chain("SCMD")


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture(scope="session")
def server_client():
    return load("server_client_annotated")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
