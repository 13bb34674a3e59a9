import numpy as np
import pytest

from circadian_mfg import ergodic
from circadian_mfg.grid import ModelParams, make_grid
from circadian_mfg.operators import Scheme


@pytest.fixture(scope="session")
def grid120():
    return make_grid(120)


@pytest.fixture(scope="session")
def ref_params():
    """Reference parameter set, stationary frame (p = 0)."""
    return ModelParams(p=0.0)


@pytest.fixture(scope="session")
def ref_solution(grid120, ref_params):
    """Method-1 centered stationary solution at the reference parameters."""
    sol = ergodic.solve_method1(grid120, ref_params, Scheme.CENTERED)
    assert sol.outcome == "converged"
    return sol


@pytest.fixture(scope="session")
def ref_solution_monotone(grid120, ref_params):
    sol = ergodic.solve_method1(grid120, ref_params, Scheme.MONOTONE)
    assert sol.outcome == "converged"
    return sol


def random_density(rng, grid):
    """Strictly positive normalized density for property tests."""
    vals = rng.uniform(0.05, 1.0, grid.n)
    return vals / (vals.sum() * grid.dphi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
