import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conjpair import build_ball_mesh, build_cube_mesh  # noqa: E402


@pytest.fixture(scope="session")
def cube1():
    return build_cube_mesh(1)


@pytest.fixture(scope="session")
def cube2():
    return build_cube_mesh(2)


@pytest.fixture(scope="session")
def cube3():
    return build_cube_mesh(3)


@pytest.fixture(scope="session")
def cube4():
    return build_cube_mesh(4)


@pytest.fixture(scope="session")
def cube8():
    return build_cube_mesh(8)


@pytest.fixture(scope="session")
def ball2():
    return build_ball_mesh(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
