import hypothesis
import numpy as np
import pytest

from pfunction_lab.geometry import disk, ellipse, make_grid
from pfunction_lab.problem import builtin_problem
from pfunction_lab.solver2d import newton_solve

np.seterr(all="warn")

hypothesis.settings.register_profile("default", deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False, deadline=None)
hypothesis.settings.load_profile("default")


# ┌─ Shared 2D solves ─┐
@pytest.fixture(scope="session")
def euclid_disk_field():
    grid = make_grid(disk(1.0), 1.0 / 32.0)
    return newton_solve(builtin_problem("euclidean"), grid)


@pytest.fixture(scope="session")
def poisson_disk_field():
    grid = make_grid(disk(1.0), 1.0 / 32.0)
    return newton_solve(builtin_problem("poisson"), grid)


@pytest.fixture(scope="session")
def euclid_ellipse_field():
    grid = make_grid(ellipse(2.0, 1.0), 1.0 / 64.0)
    return newton_solve(builtin_problem("euclidean"), grid)


@pytest.fixture(scope="session")
def euclid_disk_coarse_field():
    grid = make_grid(disk(1.0), 1.0 / 16.0)
    return newton_solve(builtin_problem("euclidean"), grid)


@pytest.fixture(scope="session")
def lorentz_small_disk_field():
    grid = make_grid(disk(0.3), 0.3 / 32.0)
    return newton_solve(builtin_problem("lorentzian"), grid)
