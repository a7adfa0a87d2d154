from pathlib import Path

import numpy as np
import pytest

from cicopula.cli import parse_model
from cicopula.copulas import FGM, Clayton, Independence
from cicopula.marginals import Exponential, Power, Uniform01
from cicopula.model import CiModel, Component

MODELS_DIR = Path(__file__).resolve().parent.parent / "models"
MODEL_FILES = sorted(MODELS_DIR.glob("*.json"))


def load(name: str) -> CiModel:
    return parse_model(MODELS_DIR / f"{name}.json")


def random_model(rng: np.random.Generator, n: int) -> CiModel:
    """Mixed FGM / Clayton / independence components with mixed marginals."""
    comps = []
    for _ in range(n):
        kind = rng.integers(3)
        if kind == 0:
            cop = FGM(float(rng.uniform(-1, 1)))
        elif kind == 1:
            cop = Clayton(float(rng.uniform(0.2, 4.0)))
        else:
            cop = Independence()
        kind = rng.integers(3)
        if kind == 0:
            marg = Uniform01()
        elif kind == 1:
            marg = Power(float(rng.uniform(0.5, 3.0)))
        else:
            marg = Exponential(float(rng.uniform(0.5, 3.0)))
        comps.append(Component(cop, marg))
    return CiModel(tuple(comps))


@pytest.fixture(params=MODEL_FILES, ids=lambda p: p.stem)
def fixture_model(request) -> CiModel:
    return parse_model(request.param)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record a one-line PASS/FAIL verdict, print it, and fail the test on FAIL."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(label: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
