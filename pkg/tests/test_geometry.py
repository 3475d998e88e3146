from __future__ import annotations

import numpy as np
import pytest

from bergmanatoms import geometry as geo
from conftest import random_points


def test_rho_origin_branch():
    assert geo.rho([0.0], [0.5]) == pytest.approx(0.5)
    assert geo.rho([0.0 + 0.0j], [0.3 + 0.4j]) == pytest.approx(0.5)


def test_rho_identity_and_collinear():
    assert geo.rho([0.3 + 0.2j], [0.3 + 0.2j]) < 1e-14
    assert geo.rho([0.5], [0.25]) == pytest.approx(0.25)


def test_rho_orthogonal_n2():
    assert geo.rho([0.5, 0.0], [0.0, 0.5]) == pytest.approx(1.0)


def test_rho_symmetry_and_positivity(rng):
    Z = random_points(rng, 100)
    W = random_points(rng, 100)
    for z, w in zip(Z, W):
        assert geo.rho(z, w) == pytest.approx(geo.rho(w, z), abs=1e-14)
        assert geo.rho(z, w) > 0.0


def test_quasi_triangle_k2(rng):
    Z, W, Y = (random_points(rng, 2000) for _ in range(3))
    for z, w, y in zip(Z, W, Y):
        assert geo.rho(z, w) <= 2.0 * (geo.rho(z, y) + geo.rho(y, w)) * (1 + 1e-12)


def test_bergman_metric_values():
    assert geo.bergman_metric([0.0], [0.5]) == pytest.approx(0.5 * np.log(3.0))
    assert geo.bergman_metric([0.3 + 0.1j], [0.3 + 0.1j]) == pytest.approx(0.0, abs=1e-12)


def test_bergman_metric_symmetry(rng):
    Z = random_points(rng, 100)
    W = random_points(rng, 100)
    for z, w in zip(Z, W):
        assert geo.bergman_metric(z, w) == pytest.approx(geo.bergman_metric(w, z), abs=1e-12)


def test_mobius_properties(rng):
    for z, w in zip(random_points(rng, 50), random_points(rng, 50)):
        assert np.allclose(geo.mobius(z, np.zeros_like(z)), z)
        assert np.linalg.norm(geo.mobius(z, z)) < 1e-13
        assert np.linalg.norm(geo.mobius(z, geo.mobius(z, w)) - w) < 1e-12


def test_q_region():
    zeta = np.array([1.0 + 0j])
    assert geo.q_region_contains(zeta, 1.5, [0.0])
    assert not geo.q_region_contains(zeta, 0.5, [0.0])
    assert geo.q_region_contains(zeta, 0.2, [0.9])
    with pytest.raises(ValueError):
        geo.q_region_contains(np.array([0.5 + 0j]), 1.0, [0.0])


def test_approach_region_boundary_case():
    z = np.zeros(1, complex)
    assert geo.approach_region_contains([0.3 + 0.1j], [0.3 + 0.1j], 0.5)
    # rho(0, w) = 0.5 equals delta (1 - |w|) exactly: strict inequality fails
    assert not geo.approach_region_contains(z, [0.5], 1.0)
    assert geo.approach_region_contains(z, [0.5], 1.5)


def test_tau_frame_origin():
    fr = geo.tau_frame(np.zeros(2, complex))
    assert np.allclose(fr.real_frame(), np.eye(4))
    fr1 = geo.tau_frame(np.zeros(1, complex))
    assert np.allclose(fr1.real_frame(), np.eye(2))


def test_tau_frame_n1_closed_form(rng):
    for z in random_points(rng, 20):
        fr = geo.tau_frame(z)
        v1 = np.asarray(fr.complex_dirs[0])
        assert np.allclose(v1, z / np.linalg.norm(z))
        assert fr.gram_residual() < 1e-12


def test_tau_frame_n2_orthonormal(rng):
    for z in random_points(rng, 5, n=2):
        fr = geo.tau_frame(z, seed=3)
        assert fr.gram_residual() < 1e-12
        assert np.allclose(np.asarray(fr.complex_dirs[0]), z / np.linalg.norm(z))
        assert fr.metadata["seed"] == 3


def test_theta_examples():
    th = geo.theta([0.0], [0.3 + 0.4j])
    assert np.allclose(th, [0.3, 0.4])
    assert np.allclose(geo.theta([0.2 + 0.1j], [0.2 + 0.1j]), 0.0)


def test_theta_roundtrip(rng):
    for n in (1, 2):
        Z = random_points(rng, 30, n=n)
        W = random_points(rng, 30, n=n)
        for z, w in zip(Z, W):
            fr = geo.tau_frame(z)
            th = geo.theta(z, w, fr)
            back = geo.theta_inverse(z, th, fr)
            assert np.linalg.norm(back - w) < 1e-12


def test_d_of():
    assert float(geo.d_of((2, 0, 0, 0))) == 2.0
    assert float(geo.d_of((0, 0, 1, 1))) == 1.0
    assert float(geo.d_of((1, 1, 1, 0))) == 2.5


def test_multi_index_invariants(rng):
    for _ in range(200):
        ent = tuple(int(x) for x in rng.integers(0, 5, size=4))
        J = geo.MultiIndex(ent)
        assert float(geo.d_of(J)) <= J.order
        if all(e == 0 for e in ent[2:]):
            assert float(geo.d_of(J)) == J.order
        else:
            assert float(geo.d_of(J)) < J.order


def test_ball_point_validation():
    with pytest.raises(ValueError):
        geo.BallPoint((1.0 + 0j,))
    p = geo.BallPoint((0.3 + 0.4j,))
    assert p.modulus == pytest.approx(0.5)


def test_rho_ball_membership():
    ball = geo.RhoBall((0.0 + 0j,), 0.5)
    assert ball.contains(np.array([[0.4 + 0j]]))[0]
    assert not ball.contains(np.array([[0.6 + 0j]]))[0]


def test_halfspace_inequalities(rng):
    # pointwise bounds at z0 = (r0, 0, ..., 0)
    for n in (1, 2):
        for _ in range(300):
            r0 = 0.05 + 0.9 * rng.random()
            z0 = np.zeros(n, complex)
            z0[0] = r0
            z = random_points(rng, 1, n=n)[0]
            d = geo.rho(z, z0)
            assert abs(1 - r0 * z[0]) >= d / 3.0 * (1 - 1e-12)
            assert abs(z[0] - r0) <= d * (1 + 1e-12)
            assert np.sum(np.abs(z[1:]) ** 2) <= 2 * d * (1 + 1e-12)
            assert abs(1 - np.sum(z * np.conj(z0))) <= (1 - r0**2 + d) * (1 + 1e-12)
