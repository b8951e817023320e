import json
import pathlib

import numpy as np
import pytest

from sdwigner import make_grid
from sdwigner.states import gaussian_density

FIXTURE_PATH = pathlib.Path(__file__).parent / "fixtures" / "gaussian_fixture.json"
NM = 1e-9


@pytest.fixture(scope="session")
def fixture_params():
    with open(FIXTURE_PATH) as fh:
        return json.load(fh)


def grid_from_params(p, dim):
    to_si = lambda v: tuple(np.atleast_1d(v) * NM) if not np.isscalar(v) else v * NM
    return make_grid(dim, to_si(p["L_nm"]), to_si(p["omega_nm"]),
                     tuple(np.atleast_1d(p["n_x"]).astype(int).tolist()) if not np.isscalar(p["n_x"]) else p["n_x"],
                     tuple(np.atleast_1d(p["n_p"]).astype(int).tolist()) if not np.isscalar(p["n_p"]) else p["n_p"])


def gaussian_from_params(p, grid):
    momentum = np.atleast_1d(p["momentum_dP"]) * np.asarray(grid.dp)
    sigma = np.atleast_1d(p["sigma_nm"]) * NM
    center = np.atleast_1d(p["center_nm"]) * NM
    if grid.dim == 1:
        return gaussian_density(grid, center[0], sigma[0], momentum[0])
    return gaussian_density(grid, tuple(center), tuple(sigma), tuple(momentum))


@pytest.fixture(scope="session")
def oracle_1d(fixture_params):
    p = fixture_params["oracle_1d"]
    grid = grid_from_params(p, 1)
    return p, grid, gaussian_from_params(p, grid)


@pytest.fixture(scope="session")
def gauge_2d(fixture_params):
    p = fixture_params["gauge_2d"]
    grid = grid_from_params(p, 2)
    return p, grid, gaussian_from_params(p, grid)
