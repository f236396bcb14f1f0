import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from src.planner import DATA_DIR, dump_scenario, load_scenario  # noqa: E402


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch):
    for name in ("JAMSIM_LOG_LEVEL", "JAMSIM_OUT_DIR", "JAMSIM_SCENARIO"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def default_scenario():
    return load_scenario()


@pytest.fixture
def scenario_file(tmp_path):
    """Write a modified copy of the shipped scenario and return its path"""

    def _write(scenario, name="scenario.json"):
        path = str(tmp_path / name)
        dump_scenario(scenario, path)
        return path

    return _write


@pytest.fixture
def bandpass_path():
    return os.path.join(DATA_DIR, "scenario_bandpass.json")


@pytest.fixture
def wired_path():
    return os.path.join(DATA_DIR, "scenario_wired.json")
