from __future__ import annotations

import numpy as np
import pytest

from bergmanatoms import bump as bp
from bergmanatoms import geometry as geo
from bergmanatoms import polyproj as pp
from bergmanatoms import quadrature as quad


@pytest.fixture(scope="module")
def canonical():
    return bp.make_bump([0.55 + 0.15j], 0.1, nu=0.5, lmax=4)


def _sample(b, refine=2):
    return b.sample_points(refine=refine)


def test_plateau_support_and_range(canonical):
    pts = _sample(canonical)
    d = geo.rho_many(canonical.center_array(), pts)
    vals = canonical.values(pts)
    assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
    assert np.all(vals[d < 0.5 * canonical.radius] == 1.0)
    assert np.all(np.abs(vals[d >= canonical.radius]) < 1e-14)
    assert canonical.values(canonical.center_array()[None, :])[0] == 1.0


def test_degenerate_radius_rejected():
    with pytest.raises(ValueError):
        bp.make_bump([0.5], 1e-8)


def test_bump_norm_constant_function(grid64):
    class Const:
        def values(self, pts):
            return np.full(np.atleast_2d(pts).shape[0], 2.5)

        def theta_derivs(self, frame, Js, pts):
            m = np.atleast_2d(pts).shape[0]
            return {tuple(J): (np.full(m, 2.5) if sum(tuple(J)) == 0 else np.zeros(m))
                    for J in Js}

    z0 = np.array([0.4 + 0j])
    vol = bp.ball_volume(geo.RhoBall((0.4 + 0j,), 0.15), grid64)
    norm = bp.bump_norm(Const(), 3, z0, 0.15, grid64)
    assert norm == pytest.approx(vol * 2.5, rel=1e-9)


def test_normalized_bump_has_unit_norm(canonical, grid64):
    nb = bp.bump_norm(canonical, 3, canonical.center_array(), canonical.radius, grid64)
    g = bp.ScaledSmooth(canonical, 1.0 / nb)
    assert bp.bump_norm(g, 3, canonical.center_array(), canonical.radius, grid64) == \
        pytest.approx(1.0, abs=1e-10)


def test_bump_norm_doubled_radius_factorizes(canonical, grid64):
    # same g measured on the doubled ball: the norm ratio must equal the
    # product of the independently recomputed volume and sup factors
    z0 = canonical.center_array()
    r = canonical.radius
    ball1, ball2 = geo.RhoBall(tuple(z0), r), geo.RhoBall(tuple(z0), 2 * r)
    n1 = bp.bump_norm(canonical, 2, z0, r, grid64)
    n2 = bp.bump_norm(canonical, 2, z0, 2 * r, grid64)
    v1, v2 = bp.ball_volume(ball1, grid64), bp.ball_volume(ball2, grid64)
    fr = geo.tau_frame(z0)
    Js = bp.multi_indices_upto(2, 2)
    p1 = bp._ball_sample(ball1, grid64)
    p2 = bp._ball_sample(ball2, grid64)
    s1 = max(r ** float(geo.d_of(J)) * bp.sup_abs_deriv(canonical, fr, [J], p1)[tuple(J)]
             for J in Js)
    s2 = max((2 * r) ** float(geo.d_of(J)) * bp.sup_abs_deriv(canonical, fr, [J], p2)[tuple(J)]
             for J in Js)
    assert n2 / n1 == pytest.approx((v2 / v1) * (s2 / s1), rel=1e-9)


def test_derivative_constants_stable_over_sweep(grid64):
    # c_J = r^{d(J)} sup |D^J psi| measured over centers/radii; moduli are
    # kept in a band because the tangential scale carries 1/|z| factors
    per_J = {}
    Js = [J for J in bp.multi_indices_upto(2, 2) if J.order > 0]
    for t in (0.7, 0.8, 0.95):
        for r in (0.02, 0.06, 0.12):
            b = bp.make_bump([t * np.exp(0.3j)], r)
            fr = geo.tau_frame(b.center_array())
            pts = quad.ball_patch(geo.RhoBall(b.center, r), 0.0, 1, 12, 12).nodes
            ders = b.theta_derivs(fr, Js, pts)
            for J in Js:
                c = r ** float(geo.d_of(J)) * np.max(np.abs(ders[tuple(J.entries)]))
                per_J.setdefault(tuple(J.entries), []).append(float(c))
    for Jt, vals in per_J.items():
        assert max(vals) / min(vals) <= 2.0, (Jt, vals)


def test_is_smooth_bump_at(canonical, grid64):
    z0 = canonical.center_array()
    nb = bp.bump_norm(canonical, 3, z0, canonical.radius, grid64)
    g = bp.ScaledSmooth(canonical, 1.0 / nb)
    assert bp.is_smooth_bump_at(g, z0, 1.0, 3, grid64)
    # a point two carrier-radii away fails the closeness condition
    far = np.array([z0[0] * 0.2])
    assert geo.rho(far, z0) > 2.0 * canonical.radius
    assert not bp.is_smooth_bump_at(g, far, 1.0, 3, grid64)
    assert not bp.is_smooth_bump_at(bp.ScaledSmooth(canonical, 2.0 / nb), z0, 1.0, 3, grid64)


def test_sn_seminorm_first_coordinate(grid64):
    z0 = np.array([0.3 + 0.2j])
    fr = geo.tau_frame(z0)
    phi = pp.ThetaPolynomial.monomial(z0, fr, (1, 0))
    ball = geo.RhoBall(tuple(z0), 0.12)
    assert bp.s_n_seminorm(phi, ball, 1, grid64, frame=fr) == pytest.approx(0.12, rel=1e-9)


def test_sn_seminorm_constant_and_homogeneity(grid64):
    z0 = np.array([0.3 + 0.2j])
    fr = geo.tau_frame(z0)
    ball = geo.RhoBall(tuple(z0), 0.1)
    const = pp.ThetaPolynomial.monomial(z0, fr, (0, 0), coeff=4.0)
    assert bp.s_n_seminorm(const, ball, 1, grid64, frame=fr) == pytest.approx(0.0, abs=1e-14)
    phi = pp.ThetaPolynomial.from_dict(z0, fr, {(1, 0): 1.0, (0, 2): 0.5})
    s1 = bp.s_n_seminorm(phi, ball, 2, grid64, frame=fr)
    s3 = bp.s_n_seminorm(phi.scaled(3.0), ball, 2, grid64, frame=fr)
    assert s3 == pytest.approx(3.0 * s1, rel=1e-12)
