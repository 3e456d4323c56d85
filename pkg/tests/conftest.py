import math

import numpy as np
import pytest

from grwlab import fiber as fb
from grwlab import graphgeo as gg
from grwlab import warp as wp


@pytest.fixture(scope="session")
def torus32():
    return fb.build_torus((32, 32), (2 * math.pi, 2 * math.pi))


@pytest.fixture(scope="session")
def sphere3():
    return fb.build_sphere(3)


@pytest.fixture(scope="session")
def circle64():
    return fb.build_circle(64, 2 * math.pi)


@pytest.fixture(scope="session")
def exp_warp():
    return wp.exponential(1.0, 1.0)


@pytest.fixture(scope="session")
def cosh_warp():
    return wp.cosh()


@pytest.fixture(scope="session")
def unit_warp():
    return wp.constant(1.0)


def catalog_warps():
    """One instance of every warp kind, each with an interior level to test at."""
    t = np.linspace(-2.0, 2.0, 9)
    return [
        (wp.constant(1.0), 0.3),
        (wp.constant(2.5), -0.7),
        (wp.exponential(1.0, 1.0), 0.5),
        (wp.exponential(2.0, -0.5), -0.4),
        (wp.cosh(), 0.8),
        (wp.polynomial((1.0, 0.2, 0.3), (-1.0, 1.0)), 0.25),
        (wp.tabulated(t, np.cosh(t)), 0.1),
    ]


def constant_graph(mesh, warp, c, margin=0.05):
    return gg.GraphFunction(mesh, warp, np.full(mesh.n_vertices, float(c)), margin)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
