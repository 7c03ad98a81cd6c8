import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from chebylab.config import load_scenario

settings.register_profile("ci", deadline=None, derandomize=True, max_examples=50)
settings.load_profile("ci")

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "src" / "chebylab" / "scenarios"
SCENARIOS = sorted(p.stem for p in SCENARIO_DIR.glob("*.json"))
CONVEX_SUITE = [s for s in SCENARIOS if s.startswith("convex_")]


def scenario_path(name: str) -> Path:
    return SCENARIO_DIR / f"{name}.json"


def scenario(name: str):
    return load_scenario(scenario_path(name))[1]


def scenario_json(name: str) -> dict:
    return json.loads(scenario_path(name).read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
