import numpy as np
import pytest

from wrhlab.space import PointCloudSpace, grid_1d, grid_nd, matrix_space


def random_cloud_space(rng: np.random.Generator, n: int, dim: int = 2) -> PointCloudSpace:
    """Random euclidean point cloud with random masses, via an explicit matrix."""
    pts = rng.uniform(-1.0, 1.0, size=(n, dim))
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
    np.fill_diagonal(d, 0.0)
    d = 0.5 * (d + d.T)
    masses = rng.uniform(0.2, 2.0, size=n)
    return matrix_space(d, masses)


@pytest.fixture
def line11():
    """Unit-spaced 11-point line 0..10 with unit masses."""
    return grid_1d(0.0, 10.0, 1.0)


@pytest.fixture
def grid2d_cheb_small():
    return grid_nd([-2.0, -2.0], [2.0, 2.0], 0.5, metric="chebyshev")


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
