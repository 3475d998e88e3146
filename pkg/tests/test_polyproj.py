from __future__ import annotations

import numpy as np
import pytest

from bergmanatoms import bump as bp
from bergmanatoms import geometry as geo
from bergmanatoms import kernel as ker
from bergmanatoms import polyproj as pp
from bergmanatoms import quadrature as quad
from conftest import random_points


@pytest.fixture(scope="module")
def weighted_basis(grid64):
    z0 = np.array([0.5 + 0.1j])
    r = 0.1
    psi = bp.make_bump(z0, r)
    patch = quad.ball_patch(geo.RhoBall(tuple(z0), r), 0.0, 1, 24, 24)
    return pp.orthonormalize(z0, psi.values(patch.nodes), patch, 2)


def test_pi0_is_one(weighted_basis):
    pi0 = weighted_basis.pi(0)
    coeffs = dict(pi0.coeffs)
    assert coeffs[(0, 0)] == pytest.approx(1.0, abs=1e-10)
    assert all(abs(v) < 1e-10 for k, v in coeffs.items() if k != (0, 0))


def test_gram_identity(weighted_basis):
    assert weighted_basis.gram_residual < 1e-8


def test_order_is_graded(weighted_basis):
    orders = [J.order for J in weighted_basis.indices]
    assert orders == sorted(orders)


def test_projection_idempotent(weighted_basis):
    poly = weighted_basis.polynomial_from_coeffs(
        np.array([1.0, 0.5 - 0.3j, 0.1j, 0.0, 0.2, -0.4])
    )
    proj = pp.project(lambda pts: poly.values(pts), weighted_basis)
    pts = weighted_basis.patch.nodes[::7]
    assert np.max(np.abs(proj.values(pts) - poly.values(pts))) < 1e-8


def test_projection_of_constant(weighted_basis):
    proj = pp.project(lambda pts: np.full(pts.shape[0], 2.0 - 1.0j), weighted_basis)
    pts = weighted_basis.patch.nodes[::5]
    assert np.max(np.abs(proj.values(pts) - (2.0 - 1.0j))) < 1e-10


def test_pythagoras(weighted_basis, rng):
    f = ker.HoloFunction.kernel_slice(1, [0.8 + 0.1j], 2.0)
    fv = f.values(weighted_basis.patch.nodes)
    c = pp.projection_coefficients(fv, weighted_basis)
    norm_f2 = float(np.sum(np.abs(fv) ** 2 * weighted_basis.prob_weights))
    assert np.sum(np.abs(c) ** 2) <= norm_f2 * (1 + 1e-10)


def test_orthonormalize_rejects_unresolvable():
    z0 = np.array([0.5 + 0j])
    ball = geo.RhoBall((0.5 + 0j,), 0.05)
    patch = quad.ball_patch(ball, 0.0, 1, 3, 3)  # 9 nodes cannot span L = 4
    psi = bp.make_bump(z0, 0.05)
    with pytest.raises(ValueError):
        pp.orthonormalize(z0, psi.values(patch.nodes), patch, 4)


def test_coefficient_growth_stable(grid64):
    growth = {}
    z0 = np.array([0.5 + 0j])
    for r in (0.02, 0.05, 0.1, 0.2):
        psi = bp.make_bump(z0, r)
        patch = quad.ball_patch(geo.RhoBall((0.5 + 0j,), r), 0.0, 1, 24, 24)
        basis = pp.orthonormalize(z0, psi.values(patch.nodes), patch, 3)
        for Jt, c in pp.coefficient_growth(basis).items():
            growth.setdefault(Jt, []).append(c)
    for Jt, vals in growth.items():
        assert max(vals) / min(vals) <= 4.0, (Jt, vals)


def test_taylor_reproduces_low_degree(rng):
    z0 = np.array([0.3 + 0.3j])
    fr = geo.tau_frame(z0)
    poly = pp.ThetaPolynomial.from_dict(z0, fr, {(0, 0): 1.0, (1, 0): 2.0,
                                                 (0, 1): -1.0j, (1, 1): 0.5})
    tay = pp.taylor_polynomial(poly, z0, 3, frame=fr)
    pts = random_points(rng, 20, rmax=0.8)
    assert np.max(np.abs(tay.values(pts) - poly.values(pts))) < 1e-10


def test_taylor_constant():
    z0 = np.array([0.2 + 0j])
    fr = geo.tau_frame(z0)
    const = pp.ThetaPolynomial.monomial(z0, fr, (0, 0), coeff=3.3)
    tay = pp.taylor_polynomial(const, z0, 2, frame=fr)
    assert tay.values(np.array([[0.25 + 0.05j]]))[0] == pytest.approx(3.3)


def test_taylor_remainder_kernel_slice(grid64):
    z0 = np.array([0.35 + 0.1j])
    ball = geo.RhoBall(tuple(z0), 0.1)
    phi = ker.HoloFunction.kernel_slice(1, [0.85 * np.exp(2.0j)], 2.0)
    N = 3
    tay = pp.taylor_polynomial(phi, z0, N)
    pts = quad.ball_patch(ball, 0.0, 1, 16, 16).nodes
    pts = pts[geo.rho_many(z0, pts) < ball.radius]
    err = np.max(np.abs(phi.values(pts) - tay.values(pts)))
    sn = bp.s_n_seminorm(phi, ball, N, grid64)
    assert err <= 2.0 ** (N / 2.0) * sn  # anisotropic Taylor envelope


def test_theta_polynomial_cross_frame_derivs(rng):
    z0 = np.array([0.4 + 0.1j])
    z1 = np.array([0.1 - 0.3j])
    fr0, fr1 = geo.tau_frame(z0), geo.tau_frame(z1)
    poly = pp.ThetaPolynomial.from_dict(z0, fr0, {(2, 0): 1.0, (1, 1): 1.0j})
    pts = random_points(rng, 6, rmax=0.7)
    ders = poly.theta_derivs(fr1, [(1, 0)], pts)
    U = fr1.real_frame()
    h = 1e-6
    shift = U[0, 0] + 1j * U[0, 1]
    fd = (poly.values(pts + h * shift) - poly.values(pts - h * shift)) / (2 * h)
    assert np.max(np.abs(ders[(1, 0)] - fd)) < 1e-7
