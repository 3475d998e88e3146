from __future__ import annotations

import numpy as np
import pytest

from bergmanatoms import geometry as geo
from bergmanatoms import kernel as ker
from conftest import random_points


def test_kernel_at_origin(rng):
    for z in random_points(rng, 10):
        assert ker.kernel_eval(z, np.zeros(1), 0.7) == pytest.approx(1.0)


def test_kernel_value():
    assert ker.kernel_eval([0.5], [0.5], 0.0) == pytest.approx(1.0 / 0.75**2)


def test_kernel_hermitian_symmetry(rng):
    for z, w in zip(random_points(rng, 100), random_points(rng, 100)):
        a = ker.kernel_eval(z, w, 0.3)
        b = ker.kernel_eval(w, z, 0.3)
        assert abs(a - np.conj(b)) < 1e-14 * abs(a)


def test_projection_reproduces_polynomials(grid64, rng):
    f = ker.HoloFunction.from_poly(1, {(0,): 1.0, (3,): 0.5 - 0.2j, (6,): 0.1j})
    zs = random_points(rng, 40, rmax=0.7)
    got = ker.bergman_project(f, zs, grid64)
    want = f.values(zs)
    assert np.max(np.abs(got - want) / np.maximum(np.abs(want), 1e-2)) < 1e-6


def test_projection_constant(grid64):
    got = ker.bergman_project(lambda W: np.ones(W.shape[0]), np.array([[0.2 + 0.3j]]), grid64)
    assert got[0] == pytest.approx(1.0, abs=1e-10)


def test_projection_kills_antiholomorphic(grid64, rng):
    zs = random_points(rng, 20, rmax=0.7)
    got = ker.bergman_project(lambda W: np.conj(W[:, 0]), zs, grid64)
    assert np.max(np.abs(got)) < 1e-6


def test_kernel_derivative_order_zero(rng):
    z0, z, w = (random_points(rng, 1)[0] for _ in range(3))
    J = geo.MultiIndex((0, 0))
    assert ker.kernel_derivative(J, z0, z, w, 0.5) == pytest.approx(
        ker.kernel_eval(z, w, 0.5)
    )


@pytest.mark.parametrize("J,step,tol", [
    ((1, 0), 1e-5, 1e-6), ((0, 1), 1e-5, 1e-6),
    ((2, 0), 1e-4, 1e-4), ((1, 1), 1e-4, 1e-4), ((0, 2), 1e-4, 1e-4),
])
def test_kernel_derivative_vs_fd(rng, J, step, tol):
    worst = 0.0
    for _ in range(20):
        z0, z, w = (random_points(rng, 1, rmax=0.8)[0] for _ in range(3))
        cf = ker.kernel_derivative(J, z0, z, w, 0.0)
        fd = ker.kernel_derivative_fd(J, z0, z, w, 0.0, step=step)
        worst = max(worst, abs(cf - fd) / max(abs(fd), 1e-10))
    assert worst < tol


def test_bound_check_precondition(grid64):
    z0 = np.array([0.1 + 0j])
    z = np.array([0.15 + 0j])  # rho(z, z0) small
    w = np.array([0.5 + 0.5j])  # rho(w, z0) large
    with pytest.raises(ValueError, match="precondition"):
        ker.kernel_derivative_bound_check((1, 0), z0, z, w, 0.0, grid64)


def test_bound_check_finite(grid64, rng):
    count = 0
    while count < 30:
        z0 = random_points(rng, 1, rmax=0.9)[0]
        z = random_points(rng, 1, rmax=0.95)[0]
        w = random_points(rng, 1, rmax=0.95)[0]
        if geo.rho(w, z0) >= geo.rho(z, z0) / 4:
            continue
        count += 1
        r = ker.kernel_derivative_bound_check((1, 1), z0, z, w, 0.0, grid64)
        assert np.isfinite(r)


def test_holo_directional_derivative(rng):
    f = ker.HoloFunction.from_poly(1, {(2,): 1.0, (5,): -0.3j}) + \
        ker.HoloFunction.kernel_slice(1, [0.6], 2.0, coeff=0.5)
    v = np.array([0.3 - 0.4j])
    df = f.directional(v)
    h = 1e-6
    for z in random_points(rng, 10, rmax=0.8):
        fd = (f.values((z + h * v)[None, :])[0] - f.values((z - h * v)[None, :])[0]) / (2 * h)
        assert abs(df.values(z[None, :])[0] - fd) < 1e-6 * max(1.0, abs(fd))


def test_holo_theta_derivs_match_fd(rng):
    f = ker.HoloFunction.kernel_slice(1, [0.7 + 0.1j], 2.5)
    z0 = np.array([0.4 + 0.2j])
    fr = geo.tau_frame(z0)
    U = fr.real_frame()
    pts = random_points(rng, 5, rmax=0.6)
    ders = f.theta_derivs(fr, [(1, 0), (0, 1)], pts)
    h = 1e-6
    for d, J in ((0, (1, 0)), (1, (0, 1))):
        shift = (U[d, 0] + 1j * U[d, 1])
        fd = (f.values(pts + h * shift) - f.values(pts - h * shift)) / (2 * h)
        assert np.max(np.abs(ders[J] - fd)) < 1e-5 * np.max(1 + np.abs(fd))


def test_holo_describe_roundtrip():
    f = ker.HoloFunction.from_poly(1, {(3,): 1.5 + 0.5j}, label="t")
    d = f.describe()
    assert d["label"] == "t"
    assert d["poly"] == [[[3], [1.5, 0.5]]]
