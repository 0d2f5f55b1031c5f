import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from milaps.geometry import PolygonalEnvironment, Region  # noqa: E402
from milaps.model import EtsProblem, TargetDistribution, TravelTimeModel  # noqa: E402
from milaps.synthetic import comb_corridor, u_corridor, uniform_problem  # noqa: E402

ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, name: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def square(side=10.0, x0=0.0, y0=0.0):
    return [(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)]


@pytest.fixture
def square_env():
    return PolygonalEnvironment(square())


@pytest.fixture
def wall_env():
    """10x10 room with a thin wall hanging from the top edge region."""
    return PolygonalEnvironment(square(), [[(4.8, 3.0), (5.2, 3.0), (5.2, 9.0), (4.8, 9.0)]])


@pytest.fixture
def u_problem():
    return uniform_problem(u_corridor(), (1.0, 9.0), r_vis=math.inf)


@pytest.fixture
def comb_problem():
    return uniform_problem(comb_corridor(), (0.75, 0.75), r_vis=4.0, t_ang=1.0, start_heading=0.0)


def make_problem(env, start, r_vis=math.inf, t_lin=1.0, t_ang=0.0, epsilon=1e-5, targets=None, heading=None):
    return EtsProblem(
        env=env,
        targets=targets or TargetDistribution.uniform(env),
        start=start,
        r_vis=r_vis,
        time_model=TravelTimeModel(t_lin, t_ang),
        start_heading=heading,
        epsilon=epsilon,
    )


def box_region(x0, y0, x1, y1):
    return Region.from_parts([([(x0, y0), (x1, y0), (x1, y1), (x0, y1)], [])])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
