import os
import sys
from importlib import resources

import pytest
from hypothesis import settings

from termlab.abstract import fixture_triple, lifting_measure
from termlab.relations import parse_relation_fixture
from termlab.terms import Signature, TermCodec
from termlab.trs import parse_trs

DATA = resources.files("termlab") / "data"
DEFAULT_SEED = 20240611

# Property tests are reproducible by default; HYPOTHESIS_PROFILE=explore varies them.
settings.register_profile("default", derandomize=True)
settings.register_profile("explore", derandomize=False)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_addoption(parser):
    parser.addoption("--seed", type=int, default=DEFAULT_SEED, help="seed for randomised tests")


@pytest.fixture(scope="session")
def seed(request) -> int:
    return request.config.getoption("--seed")


def read_data(name: str) -> str:
    return (DATA / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def seven_tables():
    return parse_relation_fixture(read_data("seven.rel"))


@pytest.fixture(scope="session")
def seven(seven_tables):
    return fixture_triple(seven_tables)


@pytest.fixture(scope="session")
def seven_measure(seven):
    return lifting_measure(seven)


@pytest.fixture(scope="session")
def addition():
    return parse_trs(read_data("addition.trs"))


@pytest.fixture(scope="session")
def cfg3(addition):
    # shared across tests so the order's memo tables are built once
    return addition.config(3)


@pytest.fixture
def codec():
    return TermCodec(Signature.of(("plus", 2), ("s", 1), ("0", 0)))


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
