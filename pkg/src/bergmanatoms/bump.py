"""Smooth bump functions adapted to rho-balls, and the bump-class norms.

A bump at (z0, r0) is chi(rho_tilde(z0, .)/r0) where rho_tilde is a
smooth minorant of rho with rho_tilde <= rho <= rho_tilde + 2 eps and
chi is a flat-top exp-spline cutoff.  Consequences used everywhere:

* psi == 1 on the whole rho-ball of radius nu*r0 (exact plateau);
* psi == 0 outside the rho-ball of radius r0 (exact support), because
  the cutoff dies at support_frac = 1 - 2*eps_frac;
* frame derivatives obey |D^J psi| <= c_J r0^{-d(J)} with c_J measured.

Derivatives of any order are taken by forward-mode jets (`jets` module);
sups over balls are sampled on locally refined patches and reported as
lower bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .geometry import (
    MultiIndex,
    RhoBall,
    TauFrame,
    d_of,
    rho,
    rho_many,
    tau_frame,
)
from .quadrature import QuadratureGrid, ball_patch

DEFAULT_EPS_FRAC = 0.04
DEFAULT_SUPPORT_FRAC = 1.0 - 2.0 * DEFAULT_EPS_FRAC
MIN_RADIUS = 1e-6


def multi_indices_of_order(order: int, n2: int) -> list[MultiIndex]:
    """All multi-indices with |J| = order on 2n = n2 slots, grlex order."""
    out: list[tuple[int, ...]] = []

    def rec(prefix, rest, slots):
        if slots == 1:
            out.append(prefix + (rest,))
            return
        for k in range(rest, -1, -1):
            rec(prefix + (k,), rest - k, slots - 1)

    rec((), order, n2)
    out.sort()
    return [MultiIndex(t) for t in out]


def multi_indices_upto(L: int, n2: int) -> list[MultiIndex]:
    """Multi-indices with |J| <= L in graded-lexicographic order."""
    out: list[MultiIndex] = []
    for k in range(L + 1):
        out.extend(multi_indices_of_order(k, n2))
    return out


def _bump_scalar_fn(x, params):
    """Jet kernel: canonical bump value at one real-coordinate point."""
    centers, ts, radii, shape = params
    vals = jets.bump_profile_batch(
        jets.jnp, x[None, :], centers, ts, radii, shape[0], shape[1], shape[2]
    )
    return vals[0, 0]


@dataclass(frozen=True)
class BumpFunction:
    """Canonical smooth bump carried by the rho-ball B(center, radius)."""

    center: tuple[complex, ...]
    radius: float
    nu: float = 0.5
    lmax: int = 6
    eps_frac: float = DEFAULT_EPS_FRAC
    support_frac: float = DEFAULT_SUPPORT_FRAC
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.radius < MIN_RADIUS:
            raise ValueError(f"degenerate bump radius {self.radius:.3g}")
        if not 0.0 < self.nu < 1.0:
            raise ValueError("plateau fraction nu must lie in (0, 1)")
        if not self.nu < self.support_frac <= 1.0 - 2.0 * self.eps_frac + 1e-12:
            raise ValueError("need nu < support_frac <= 1 - 2 eps_frac")

    @property
    def carrier(self) -> RhoBall:
        return RhoBall(self.center, self.radius)

    @property
    def n(self) -> int:
        return len(self.center)

    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=complex)

    def values(self, pts) -> np.ndarray:
        X = jets.to_real(pts)
        c = self.center_array()[None, :]
        t = np.array([float(np.linalg.norm(c))])
        vals = jets.bump_profile_batch(
            np, X, c, t, np.array([self.radius]),
            self.nu, self.support_frac, self.eps_frac,
        )
        return vals[:, 0]

    __call__ = values

    def _jet_params(self):
        c = jets.jnp.asarray(self.center_array()[None, :])
        t = jets.jnp.asarray([float(np.linalg.norm(self.center_array()))])
        r = jets.jnp.asarray([self.radius])
        shape = jets.jnp.asarray([self.nu, self.support_frac, self.eps_frac])
        return (c, t, r, shape)

    def theta_derivs(self, frame: TauFrame, Js, pts) -> dict:
        order = max(MultiIndex(tuple(J)).order for J in Js) if Js else 0
        tensors = jets.theta_jets(
            _bump_scalar_fn, self._jet_params(), frame.real_frame(), pts, order
        )
        return {tuple(J): jets.deriv_from_jets(tensors, J) for J in Js}

    def sample_points(self, refine: int = 1) -> np.ndarray:
        """Locally refined sample of the carrier (patch nodes)."""
        p = ball_patch(self.carrier, alpha=0.0, n=self.n,
                       n_radial=16 * refine, n_angular=16 * refine)
        return p.nodes


def make_bump(z0, r0: float, nu: float = 0.5, lmax: int = 6) -> BumpFunction:
    """Canonical bump: 1 on B(z0, nu*r0), supported in B(z0, r0)."""
    c = np.atleast_1d(np.asarray(z0, dtype=complex))
    return BumpFunction(center=tuple(complex(x) for x in c), radius=float(r0),
                        nu=float(nu), lmax=int(lmax))


@dataclass(frozen=True)
class ScaledSmooth:
    """A scalar multiple of a smooth function (keeps the carrier)."""

    base: object
    scale: complex

    @property
    def carrier(self):
        return getattr(self.base, "carrier", None)

    def values(self, pts):
        return self.scale * self.base.values(pts)

    __call__ = values

    def theta_derivs(self, frame, Js, pts):
        return {k: self.scale * v for k, v in self.base.theta_derivs(frame, Js, pts).items()}


def sup_abs_deriv(
    g, frame: TauFrame, Js, pts, extra_pts=None
) -> dict:
    """Sampled sup of |D^J g| over the given points, per J."""
    allpts = pts if extra_pts is None else np.concatenate([pts, extra_pts])
    ders = g.theta_derivs(frame, Js, allpts)
    return {k: float(np.max(np.abs(v))) for k, v in ders.items()}


def bump_norm(
    g,
    L: int,
    z0,
    r0: float,
    grid: QuadratureGrid,
    pts: np.ndarray | None = None,
    volume: float | None = None,
    frame: TauFrame | None = None,
) -> float:
    """Bump-class norm: v_alpha(B(z0,r0)) * sup_{|J|<=L} r0^{d(J)} |D^J g|.

    Sups are sampled over the ball (locally refined patch by default) and
    are therefore lower bounds converging under refinement.
    """
    z0 = np.atleast_1d(np.asarray(z0, dtype=complex))
    ball = RhoBall(tuple(z0), float(r0))
    if frame is None:
        frame = tau_frame(z0)
    if pts is None:
        pts = _ball_sample(ball, grid)
    if volume is None:
        volume = ball_volume(ball, grid)
    Js = multi_indices_upto(L, 2 * z0.size)
    sups = sup_abs_deriv(g, frame, Js, pts)
    best = max(r0 ** float(d_of(J)) * sups[tuple(J)] for J in Js)
    return float(volume * best)


def s_n_seminorm(
    phi,
    ball: RhoBall,
    N: int,
    grid: QuadratureGrid,
    pts: np.ndarray | None = None,
    frame: TauFrame | None = None,
) -> float:
    """Sum over |J| = N of r0^{d(J)} * sup over the ball of |D^J phi|."""
    z0 = ball.center_array()
    if frame is None:
        frame = tau_frame(z0)
    if pts is None:
        pts = _ball_sample(ball, grid)
    Js = multi_indices_of_order(N, 2 * z0.size)
    if N == 0:
        sups = sup_abs_deriv(phi, frame, Js, pts)
        return float(sups[tuple(Js[0])])
    sups = sup_abs_deriv(phi, frame, Js, pts)
    return float(sum(ball.radius ** float(d_of(J)) * sups[tuple(J)] for J in Js))


def is_smooth_bump_at(
    g,
    z,
    delta: float,
    L: int,
    grid: QuadratureGrid,
    norm_slack: float = 1e-9,
) -> bool:
    """Membership test for the bump class at z: support, closeness, norm.

    ``g`` must expose its carrier ball (z0, r0).  The three conditions of
    the class definition are each checked numerically.
    """
    carrier = getattr(g, "carrier", None)
    if carrier is None:
        raise ValueError("g must carry its (z0, r0) ball")
    z0 = carrier.center_array()
    r0 = carrier.radius
    # (1) support inside the carrier, sampled on and off the ball
    d = grid.rho_from_point(z0)
    outside = grid.nodes[d >= r0]
    if outside.shape[0]:
        sel = outside[:: max(1, outside.shape[0] // 2048)]
        if np.max(np.abs(np.asarray(g.values(sel)))) > 1e-14:
            return False
    # (2) the test point is delta-close to the carrier center
    if not rho(z, z0) < delta * r0:
        return False
    # (3) bump norm at most one
    return bump_norm(g, L, z0, r0, grid) <= 1.0 + norm_slack


def _ball_sample(ball: RhoBall, grid: QuadratureGrid, refine: int = 1) -> np.ndarray:
    p = ball_patch(ball, alpha=grid.alpha, n=grid.n,
                   n_radial=16 * refine, n_angular=16 * refine)
    d = grid.rho_from_point(ball.center_array())
    inside = grid.nodes[d < ball.radius]
    if inside.shape[0] > 512:
        inside = inside[:: inside.shape[0] // 512]
    return np.concatenate([p.nodes, inside]) if inside.shape[0] else p.nodes


def ball_volume(ball: RhoBall, grid: QuadratureGrid) -> float:
    """v_alpha of a rho-ball by indicator quadrature.

    Uses the global grid when it resolves the ball, otherwise a locally
    refined patch (same indicator-integration policy at higher resolution).
    """
    d = grid.rho_from_point(ball.center_array())
    mask = d < ball.radius
    if int(mask.sum()) >= 50:
        return float(grid.weights[mask].sum())
    p = ball_patch(ball, alpha=grid.alpha, n=grid.n, n_radial=48, n_angular=48)
    dp = rho_many(ball.center_array(), p.nodes)
    return float(p.weights[dp < ball.radius].sum())
