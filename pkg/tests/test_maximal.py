from __future__ import annotations

import numpy as np
import pytest

from bergmanatoms import kernel as ker
from bergmanatoms import maximal as mx
from bergmanatoms import quadrature as quad
from conftest import random_points


@pytest.fixture(scope="module")
def dict64(grid64):
    return mx.default_dictionary(grid64, delta=4.5, L=3)


def test_nontangential_constant(grid64):
    f = ker.HoloFunction.from_poly(1, {(0,): 2.0 - 1.0j})
    assert mx.non_tangential_max(f, np.array([0.3 + 0.1j]), 1.0, grid64) == \
        pytest.approx(abs(2.0 - 1.0j))


def test_nontangential_identity_at_origin(grid64):
    # sup |w| over {|w| < delta(1-|w|)} with delta = 1 approaches 1/2
    f = ker.HoloFunction.from_poly(1, {(1,): 1.0})
    val = mx.non_tangential_max(f, np.zeros(1, complex), 1.0, grid64)
    assert 0.47 <= val < 0.5


def test_nontangential_monotone_in_delta(grid64, rng):
    f = ker.HoloFunction.kernel_slice(1, [0.7], 2.0)
    for z in random_points(rng, 10):
        v1 = mx.non_tangential_max(f, z, 1.0, grid64)
        v2 = mx.non_tangential_max(f, z, 1.5, grid64)
        assert v2 >= v1 - 1e-14


def test_nontangential_field_matches_pointwise(grid64):
    f = ker.HoloFunction.kernel_slice(1, [0.6 + 0.3j], 2.0)
    fv = f.values(grid64.nodes)
    field = mx.nontangential_field(fv, grid64, 1.0)
    for i in (0, 777, 4321, grid64.size - 1):
        assert field[i] == pytest.approx(
            mx.non_tangential_max(f, grid64.nodes[i], 1.0, grid64), rel=1e-12
        )


def test_tangential_basic(grid64, rng):
    f = ker.HoloFunction.from_poly(1, {(0,): 1.5})
    z = random_points(rng, 1)[0]
    assert mx.tangential_max(f, z, 3.0, grid64) == pytest.approx(1.5)
    g = ker.HoloFunction.kernel_slice(1, [0.8], 2.0)
    zv = abs(g.values(z[None, :])[0])
    assert mx.tangential_max(g, z, 3.0, grid64) >= zv - 1e-12
    v3 = mx.tangential_max(g, z, 3.0, grid64)
    v5 = mx.tangential_max(g, z, 5.0, grid64)
    assert v5 <= v3 + 1e-12


def test_central_max(grid64, rng):
    ones = np.ones(grid64.size)
    z = random_points(rng, 1)[0]
    assert mx.central_max(ones, z, grid64) == pytest.approx(1.0)
    f = np.abs(grid64.nodes[:, 0]) ** 2
    avg = float(np.sum(f * grid64.weights))
    assert mx.central_max(f, z, grid64) >= avg - 1e-12
    # indicator of a ball around z averages to one at small radii
    d = grid64.rho_from_point(z)
    ind = (d < 0.2).astype(float)
    assert mx.central_max(ind, z, grid64) == pytest.approx(1.0)


def test_grand_max_zero_and_homogeneous(grid64, dict64):
    f0 = ker.HoloFunction.from_poly(1, {})
    z = np.array([0.5 + 0.1j])
    assert mx.grand_max(f0, z, 4.5, 3, dict64, grid64) == 0.0
    f = ker.HoloFunction.kernel_slice(1, [0.75], 2.0)
    v1 = mx.grand_max(f, z, 4.5, 3, dict64, grid64)
    v2 = mx.grand_max(2.0 * f, z, 4.5, 3, dict64, grid64)
    assert v2 == pytest.approx(2.0 * v1, rel=1e-12)
    assert v1 > 0


def test_grand_max_monotone_in_dictionary(grid64, dict64):
    bigger = mx.default_dictionary(grid64, delta=4.5, L=3, octaves=4)
    f = ker.HoloFunction.kernel_slice(1, [0.75], 2.0)
    p_small = dict64.pairings(f)
    p_big = bigger.pairings(f)
    K_small = dict64.field_values(p_small)
    K_big = bigger.field_values(p_big)
    assert np.all(K_big >= K_small - 1e-15)


def test_level_sets_constant(grid64, dict64):
    f = ker.HoloFunction.from_poly(1, {(0,): 1.0})
    lv = mx.level_sets(f, 1.0, 0.0, mu=4.5, L=3, delta=1.0, kmax=4,
                       grid=grid64, dictionary=dict64)
    assert not lv.mask(0).any()
    assert lv.norm == pytest.approx(1.0, rel=0.05)


def test_level_sets_nested_and_scaling(grid64, dict64):
    f = ker.HoloFunction.kernel_slice(1, [0.8], 2.0)
    lv = mx.level_sets(f, 1.0, 0.0, mu=4.5, L=3, delta=1.0, kmax=5,
                       grid=grid64, dictionary=dict64)
    for k in range(5):
        assert np.all(lv.masks[k + 1] <= lv.masks[k])
    assert np.all(np.diff(lv.measures) <= 1e-15)
    # doubling f shifts k0 by one and reproduces the same level sets
    lv2 = mx.level_sets(2.0 * f, 1.0, 0.0, mu=4.5, L=3, delta=1.0, kmax=5,
                        grid=grid64, dictionary=dict64)
    assert lv2.k0 == lv.k0 + 1
    assert np.array_equal(lv2.masks, lv.masks)


def test_level_sets_zero_function(grid64, dict64):
    f = ker.HoloFunction.from_poly(1, {})
    lv = mx.level_sets(f, 1.0, 0.0, mu=4.5, L=3, delta=1.0, kmax=3,
                       grid=grid64, dictionary=dict64)
    assert lv.norm == 0.0
    assert not lv.masks.any()
