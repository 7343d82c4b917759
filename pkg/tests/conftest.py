import os

import pytest
import yaml
from mock import patch as mock_patch

from crnrealize.realize import RealizationManager

run_names = []
runs = []


def pytest_addoption(parser):
    default_file = os.path.join(os.path.dirname(__file__), "realize_tests.yaml")
    parser.addoption("--realize-file", action="store", default=default_file)
    parser.addoption("--run-only", action="store", default="")
    parser.addoption("--run-slow", action="store_true", default=False)


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return

    skip_slow = pytest.mark.skip(reason="long solve, enable with --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def pytest_generate_tests(metafunc):
    if "run" in metafunc.fixturenames:
        init_realize_data(
            metafunc.config.getoption("--realize-file"),
            metafunc.config.getoption("--run-only"),
        )

        metafunc.parametrize("run", runs, ids=run_names, scope="class")


def init_realize_data(filename, run_only):
    """ Load the realization runs YAML
    """
    global run_names
    global runs
    if run_names and runs:
        return

    run_only_list = run_only.split(",") if run_only else None

    runs_root = None
    with open(filename) as fh:
        runs_root = yaml.safe_load(fh.read())

    for run in runs_root["runs"]:
        if run.get("skip"):
            continue

        if run_only_list and run["name"] not in run_only_list:
            continue

        run_names.append(run["name"])
        if run.get("slow"):
            runs.append(pytest.param(run, marks=pytest.mark.slow))
        else:
            runs.append(run)


@pytest.fixture
def manager():
    """ Manager with the built-in defaults, whatever the environment holds
    """
    with mock_patch.dict(os.environ, {}, clear=True):
        return RealizationManager()
