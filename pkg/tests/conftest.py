import numpy as np
import pytest

from bps._backend import BACKEND, kernels, pure
from bps.oracle import build_distance_table, distance_prior
from bps.phe import (
    PheModel,
    calibrate_full,
    calibrate_sampled,
    calibrate_transition,
    manhattan_table,
    variant_heuristic,
)


def pytest_addoption(parser):
    parser.addoption("--longrun", action="store_true", help="run the long horizon-20 slice")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--longrun"):
        return
    skip = pytest.mark.skip(reason="needs --longrun")
    for item in items:
        if "longrun" in item.keywords:
            item.add_marker(skip)


BACKENDS = [pytest.param(pure, id="python")]
if BACKEND == "cython":
    BACKENDS.append(pytest.param(kernels, id="cython"))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def table():
    return build_distance_table()


@pytest.fixture(scope="session")
def md():
    return manhattan_table()


@pytest.fixture(scope="session")
def full_counts(table, md):
    return calibrate_full(table, md)


@pytest.fixture(scope="session")
def full_phe(full_counts):
    return PheModel.from_counts(full_counts)


@pytest.fixture(scope="session")
def sampled_phe(table, md):
    return PheModel.from_counts(calibrate_sampled(table, md, 1000, 500, seed=0))


@pytest.fixture(scope="session")
def trans(table):
    return calibrate_transition(table)


@pytest.fixture(scope="session")
def prior(table):
    return distance_prior(table)


@pytest.fixture(scope="session")
def nobeacons(table):
    return variant_heuristic(table, "nobeacons")


@pytest.fixture(scope="session")
def goalonly(table):
    return variant_heuristic(table, "goalonly")


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
