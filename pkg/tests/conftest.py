from __future__ import annotations

import numpy as np
import pytest

from bergmanatoms import quadrature as quad


@pytest.fixture(scope="session")
def grid64():
    return quad.build_grid(1, 0.0, radial=64, angular=128)


@pytest.fixture(scope="session")
def grid96():
    return quad.build_grid(1, 0.0, radial=96, angular=192)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


def random_points(rng, count, n=1, rmax=0.95):
    r = rmax * rng.random(count) ** (1.0 / (2 * n))
    dirs = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    return r[:, None] * dirs
