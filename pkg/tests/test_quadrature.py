from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import quad as scipy_quad

from bergmanatoms import geometry as geo
from bergmanatoms import quadrature as quad


@pytest.mark.parametrize("alpha", [-0.5, 0.0, 1.0])
def test_weights_sum_to_one(alpha):
    g = quad.build_grid(1, alpha, radial=64, angular=128)
    assert quad.integrate(lambda W: np.ones(W.shape[0]), g) == pytest.approx(1.0, abs=1e-12)


def test_first_moment_vanishes(grid64):
    assert abs(quad.integrate(lambda W: W[:, 0], grid64)) < 1e-12


def test_second_moment_against_1d_oracle(grid64):
    # independent oracle: int_0^1 r^2 * 2r dr by adaptive 1-d quadrature
    oracle, err = scipy_quad(lambda r: 2.0 * r**3, 0.0, 1.0)
    got = quad.integrate(lambda W: np.abs(W[:, 0]) ** 2, grid64).real
    assert got == pytest.approx(oracle, abs=1e-12)
    assert oracle == pytest.approx(0.5, abs=err + 1e-12)


def test_integrate_linearity(grid64):
    f = lambda W: W[:, 0] ** 2
    g = lambda W: np.conj(W[:, 0]) * W[:, 0]
    a, b = 2.0 + 1.0j, -0.7
    lhs = quad.integrate(lambda W: a * f(W) + b * g(W), grid64)
    rhs = a * quad.integrate(f, grid64) + b * quad.integrate(g, grid64)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_integrate_subdisk_indicator(grid64):
    # c_alpha (1-|z|^2)^{-alpha} times the indicator integrates to the
    # normalized area of the sub-disk
    f = lambda W: (np.abs(W[:, 0]) < 0.5).astype(float)
    got = quad.integrate(f, grid64).real
    assert got == pytest.approx(0.25, rel=0.02)


def test_integrate_rejects_nonfinite(grid64):
    vals = np.ones(grid64.size)
    vals[7] = np.inf
    with pytest.raises(ValueError, match="node 7"):
        quad.integrate(vals, grid64)


def test_lp_norm_examples(grid64):
    c = 3.0 - 4.0j
    assert quad.lp_norm(lambda W: np.full(W.shape[0], c), 1.0, grid64) == pytest.approx(5.0)
    f = lambda W: W[:, 0]
    n1 = quad.lp_norm(f, 2.0, grid64)
    n2 = quad.lp_norm(lambda W: 2.0 * f(W), 2.0, grid64)
    assert n2 == pytest.approx(2.0 * n1)
    assert n1 == pytest.approx(np.sqrt(0.5), abs=1e-12)


def test_volume_disk(grid64):
    ball = geo.RhoBall((0.0 + 0j,), 0.5)
    assert quad.volume_alpha(ball, grid64, warn=False) == pytest.approx(0.25, rel=0.02)


def test_volume_whole_ball(grid64):
    ball = geo.RhoBall((0.3 + 0.2j,), 3.0)
    assert quad.volume_alpha(ball, grid64, warn=False) == pytest.approx(1.0, abs=1e-12)


def test_volume_monotone(grid64):
    z = (0.5 + 0.1j,)
    vols = [quad.volume_alpha(geo.RhoBall(z, r), grid64, warn=False)
            for r in (0.1, 0.2, 0.4, 0.8)]
    assert all(a <= b for a, b in zip(vols, vols[1:]))


def test_volume_warns_when_coarse(grid64):
    with pytest.warns(UserWarning, match="coarse"):
        quad.volume_alpha(geo.RhoBall((0.5 + 0j,), 1e-4), grid64)


def test_volume_model():
    assert quad.volume_alpha_model(geo.RhoBall((0.5,), 0.1), 0.0, 1) == pytest.approx(0.01)
    assert quad.volume_alpha_model(geo.RhoBall((0.99,), 0.5), 1.0, 1) == pytest.approx(0.125)
    with pytest.raises(ValueError):
        quad.volume_alpha_model(geo.RhoBall((0.5,), 3.5), 0.0, 1)


@pytest.mark.parametrize("alpha", [-0.5, 0.0, 1.0])
def test_moments_exact_to_degree_12(alpha):
    g = quad.build_grid(1, alpha, radial=128, angular=256)
    z = g.nodes[:, 0]
    for a in range(0, 7):
        for b in range(0, 7 - a):
            got = complex(np.sum(z**a * np.conj(z) ** b * g.weights))
            want = quad.holomorphic_moment((a,), 1, alpha) if a == b else 0.0
            assert abs(got - want) < 1e-10


def test_grid_rejects_bad_parameters():
    with pytest.raises(ValueError):
        quad.build_grid(1, -1.0)
    with pytest.raises(ValueError):
        quad.build_grid(3, 0.0)


def test_qmc_grid_n2():
    g = quad.build_grid(2, 0.0, samples=40_000, seed=1)
    total = quad.integrate(lambda W: np.ones(W.shape[0]), g).real
    assert total == pytest.approx(1.0, rel=0.02)
    got = quad.integrate(lambda W: np.abs(W[:, 0]) ** 2, g).real
    assert got == pytest.approx(quad.holomorphic_moment((1, 0), 2, 0.0), rel=0.05)


def test_ball_patch_consistency(grid64):
    # patch quadrature of a smooth localized function matches the global grid
    from bergmanatoms.bump import make_bump

    b = make_bump([0.5 + 0.1j], 0.2)
    patch = quad.ball_patch(geo.RhoBall((0.5 + 0.1j,), 0.2), 0.0, 1, 40, 40)
    got = float(np.sum(b.values(patch.nodes) * patch.weights))
    want = float(np.sum(b.values(grid64.nodes) * grid64.weights))
    assert got == pytest.approx(want, rel=5e-3)


def test_coarse_eval_set_preserves_mass(grid64):
    pts, w = grid64.coarse_eval_set()
    assert w.sum() == pytest.approx(grid64.weights.sum(), abs=1e-12)
    assert pts.shape[0] < grid64.size
