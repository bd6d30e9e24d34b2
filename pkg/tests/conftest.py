import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tuckercoupling import kernels  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def loop_scene_12(m=20, d=0.8, op=kernels.Operator.HFIELD, freq=298.06):
    """12^3 grid over a 1 m cube with an m-segment loop of radius 0.5 m at y = d."""
    grid = kernels.VoxelGrid.centered((0, 0, 0), 1 / 12, (12, 12, 12))
    kern = kernels.KernelSpec(op, kernels.wavenumber(freq))
    return kernels.make_loop_scene(0.5, (0, d, 0), m, grid, kern)


@pytest.fixture(scope="session")
def scene12():
    return loop_scene_12()


@pytest.fixture(scope="session")
def small_scene():
    grid = kernels.VoxelGrid.centered((0, 0, 0), 0.1, (4, 5, 6))
    kern = kernels.KernelSpec(kernels.Operator.EFIELD, kernels.wavenumber(298.06))
    return kernels.make_loop_scene(0.3, (0, 0.7, 0), 7, grid, kern)


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
