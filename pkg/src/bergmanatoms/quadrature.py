"""Numerical integration against the weighted volume dv_alpha on the ball.

Measures are normalized so that dv_alpha is a probability measure:
dv_alpha = c_alpha (1-|z|^2)^alpha dv with c_alpha = Gamma(n+alpha+1) /
(n! Gamma(alpha+1)) and v the normalized Lebesgue measure on B_n.

For n = 1 the grid is a tensor product of a Gauss-Jacobi radial rule
matched to the weight r (1-r^2)^alpha and a uniform angular rule; for
n = 2 it is quasi-random (Sobol) sampling.  Small rho-balls are handled
by per-ball Gauss product patches (`ball_patch`), not by the global grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre
from scipy.stats import qmc


@lru_cache(maxsize=256)
def _legendre_rule(n: int):
    return roots_legendre(n)


@lru_cache(maxsize=256)
def _jacobi_rule(n: int, alpha: float):
    return roots_jacobi(n, alpha, 0.0)

from .geometry import RhoBall, rho_many

MIN_BALL_NODES = 50


def c_alpha(n: int, alpha: float) -> float:
    """Normalizing constant making dv_alpha a probability measure."""
    return math.gamma(n + alpha + 1) / (math.factorial(n) * math.gamma(alpha + 1))


def holomorphic_moment(m, n: int, alpha: float) -> float:
    """Closed form of the moment integral of |z^m|^2 against dv_alpha."""
    m = tuple(int(k) for k in m)
    num = math.gamma(n + alpha + 1)
    for k in m:
        num *= math.factorial(k)
    return num / math.gamma(n + sum(m) + alpha + 1)


@dataclass
class QuadratureGrid:
    """Nodes and dv_alpha weights on B_n, with tensor metadata for n = 1."""

    n: int
    alpha: float
    nodes: np.ndarray  # (m, n) complex, strictly inside B_n
    weights: np.ndarray  # (m,) positive, v_alpha masses
    scheme: dict
    radial: np.ndarray | None = None  # (n_r,) radii, n=1 tensor grids only
    thetas: np.ndarray | None = None  # (n_t,) angles
    radial_weights: np.ndarray | None = None  # (n_r,) radial masses
    spacing: float = 0.0  # grid resolution h used by covering guards
    _ang_table: np.ndarray | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def is_tensor(self) -> bool:
        return self.radial is not None

    @property
    def n_radial(self) -> int:
        return len(self.radial)

    @property
    def n_angular(self) -> int:
        return len(self.thetas)

    def ang_table(self) -> np.ndarray:
        """|1 - e^{i dtheta}| for angular index offsets 0..n_t-1."""
        if self._ang_table is None:
            d = np.arange(self.n_angular)
            self._ang_table = 2.0 * np.abs(np.sin(np.pi * d / self.n_angular))
        return self._ang_table

    def field_shape(self) -> tuple[int, int]:
        return (self.n_radial, self.n_angular)

    def as_field(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values).reshape(self.field_shape())

    def rho_from_node_index(self, idx: int) -> np.ndarray:
        """rho from grid node ``idx`` to every node (tensor fast path)."""
        ir, it = divmod(int(idx), self.n_angular)
        r0 = self.radial[ir]
        ang = self.ang_table()
        shift = np.roll(ang, it)  # value at column j is ang[|j - it| mod n_t]
        return (np.abs(self.radial[:, None] - r0) + shift[None, :]).ravel()

    def rho_from_point(self, z: np.ndarray) -> np.ndarray:
        """rho from an arbitrary point to every node."""
        z = np.asarray(z, dtype=complex).reshape(self.n)
        if self.is_tensor:
            az = abs(z[0])
            if az < 1e-14:
                return np.repeat(self.radial, self.n_angular)
            th = math.atan2(z[0].imag, z[0].real)
            ang = 2.0 * np.abs(np.sin((self.thetas - th) / 2.0))
            return (np.abs(self.radial[:, None] - az) + ang[None, :]).ravel()
        return rho_many(z, self.nodes)

    def coarse_eval_set(self, stride_r: int = 4, stride_t: int = 8):
        """Mass-preserving coarsened node subset for O(N^2)-type sweeps.

        Returns (points, weights): representative nodes with the summed
        weight of their coarse cell, so that sums against the coarse set
        conserve total mass exactly.
        """
        if not self.is_tensor:
            k = max(1, self.size // (self.size // max(stride_r * stride_t, 1) or 1))
            idx = np.arange(0, self.size, stride_r * stride_t)
            w = np.full(idx.size, self.weights.sum() / idx.size)
            return self.nodes[idx], w
        nr, nt = self.field_shape()
        wf = self.as_field(self.weights)
        pts, wts = [], []
        for i0 in range(0, nr, stride_r):
            for j0 in range(0, nt, stride_t):
                block = wf[i0 : i0 + stride_r, j0 : j0 + stride_t]
                ic = min(i0 + stride_r // 2, nr - 1)
                jc = min(j0 + stride_t // 2, nt - 1)
                pts.append(ic * nt + jc)
                wts.append(block.sum())
        idx = np.asarray(pts)
        return self.nodes[idx], np.asarray(wts)

    def descriptor(self) -> dict:
        return dict(self.scheme)


def build_grid(
    n: int,
    alpha: float,
    radial: int = 128,
    angular: int = 256,
    samples: int = 200_000,
    seed: int = 0,
) -> QuadratureGrid:
    """Build the default grid for dimension n (tensor for 1, Sobol for 2)."""
    if alpha <= -1:
        raise ValueError(f"alpha = {alpha} must be > -1")
    if n == 1:
        return _tensor_grid_1d(alpha, radial, angular)
    if n == 2:
        return _qmc_grid(n, alpha, samples, seed)
    raise ValueError("only n = 1 and n = 2 are supported")


def _tensor_grid_1d(alpha: float, n_r: int, n_t: int) -> QuadratureGrid:
    x, w = _jacobi_rule(n_r, alpha)
    u = (x + 1.0) / 2.0
    r = np.sqrt(u)
    # int_0^1 g(r) r (1-r^2)^a dr = 2^{-a-2} sum w_i g(r_i)
    radial_w = 2.0 ** (-alpha - 2.0) * w
    thetas = 2.0 * np.pi * np.arange(n_t) / n_t
    ca = c_alpha(1, alpha)
    full_w = ca * (2.0 / n_t) * radial_w
    order = np.argsort(r)
    r, radial_w, full_w = r[order], radial_w[order], full_w[order]
    nodes = (r[:, None] * np.exp(1j * thetas)[None, :]).reshape(-1, 1)
    weights = np.repeat(full_w, n_t)
    spacing = float(max(np.max(np.diff(np.concatenate([[0.0], r, [1.0]]))),
                        2.0 * math.sin(math.pi / n_t)))
    return QuadratureGrid(
        n=1,
        alpha=alpha,
        nodes=nodes,
        weights=weights,
        scheme={"kind": "tensor", "radial": n_r, "angular": n_t, "alpha": alpha},
        radial=r,
        thetas=thetas,
        radial_weights=full_w,
        spacing=spacing,
    )


def _qmc_grid(n: int, alpha: float, samples: int, seed: int) -> QuadratureGrid:
    dim = 2 * n
    sob = qmc.Sobol(d=dim, scramble=True, seed=seed)
    kept = []
    need = samples
    while need > 0:
        block = sob.random(2 ** int(np.ceil(np.log2(max(need * 4, 1024)))))
        pts = 2.0 * block - 1.0
        rad2 = np.sum(pts * pts, axis=1)
        pts = pts[rad2 < 1.0 - 1e-12]
        kept.append(pts)
        need = samples - sum(p.shape[0] for p in kept)
    pts = np.concatenate(kept)[:samples]
    nodes = pts[:, 0::2] + 1j * pts[:, 1::2]
    # uniform-in-ball estimator: weight = c_alpha (1-|z|^2)^alpha / M
    w = c_alpha(n, alpha) * (1.0 - np.sum(np.abs(nodes) ** 2, axis=1)) ** alpha / samples
    spacing = float((1.0 / samples) ** (1.0 / dim))
    return QuadratureGrid(
        n=n,
        alpha=alpha,
        nodes=nodes,
        weights=w,
        scheme={"kind": "qmc", "samples": samples, "seed": seed, "alpha": alpha},
        spacing=spacing,
    )


def integrate(f, grid: QuadratureGrid) -> complex:
    """Quadrature of a sample function: sum f(node) * weight."""
    vals = f(grid.nodes) if callable(f) else np.asarray(f)
    vals = np.asarray(vals).reshape(-1)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise ValueError(
            f"non-finite sample {vals[k]!r} at node {k} = {grid.nodes[k]}"
        )
    return complex(np.sum(vals * grid.weights))


def lp_norm(f, p: float, grid: QuadratureGrid) -> float:
    """(integral of |f|^p dv_alpha)^(1/p) for p > 0."""
    if p <= 0:
        raise ValueError("p must be positive")
    vals = f(grid.nodes) if callable(f) else np.asarray(f)
    return float(np.sum(np.abs(vals.reshape(-1)) ** p * grid.weights) ** (1.0 / p))


def lp_norm_of_values(vals: np.ndarray, p: float, weights: np.ndarray) -> float:
    return float(np.sum(np.abs(np.asarray(vals)) ** p * weights) ** (1.0 / p))


def volume_alpha(ball: RhoBall, grid: QuadratureGrid, warn: bool = True) -> float:
    """v_alpha of a rho-ball by indicator quadrature on the grid."""
    if ball.radius <= 0:
        raise ValueError("radius must be positive")
    d = grid.rho_from_point(ball.center_array())
    mask = d < ball.radius
    count = int(mask.sum())
    if warn and count < MIN_BALL_NODES:
        warnings.warn(
            f"only {count} grid nodes fall in B(center, {ball.radius:.4g}); "
            "volume estimate is coarse",
            stacklevel=2,
        )
    return float(grid.weights[mask].sum())


def volume_alpha_model(ball: RhoBall, alpha: float, n: int) -> float:
    """Comparison model r^{n+1} max(r, 1-|z|)^alpha (not the exact volume)."""
    r = ball.radius
    if not 0.0 < r < 3.0:
        raise ValueError("model is meaningful for 0 < r < 3")
    az = float(np.linalg.norm(ball.center_array()))
    if az == 0.0:
        raise ValueError("model requires a non-origin center")
    return r ** (n + 1) * max(r, 1.0 - az) ** alpha


@dataclass
class Patch:
    """Local quadrature on (a box around) one rho-ball."""

    nodes: np.ndarray  # (m, n) complex
    weights: np.ndarray  # (m,) dv_alpha masses of the box
    ball: RhoBall

    @property
    def size(self) -> int:
        return self.nodes.shape[0]


def ball_patch(
    ball: RhoBall,
    alpha: float,
    n: int,
    n_radial: int = 20,
    n_angular: int = 20,
    seed: int = 0,
) -> Patch:
    """Gauss product patch covering a rho-ball (n=1); Sobol box patch for n=2.

    The patch integrates dv_alpha over a coordinate box that contains the
    ball; integrands supported inside the ball need no masking.  When the
    box touches the sphere the radial rule is Gauss-Jacobi in (1-r)^alpha
    so that alpha in (-1, 0) keeps full accuracy.
    """
    z0 = ball.center_array()
    r0 = ball.radius
    t = float(np.linalg.norm(z0))
    if n == 1:
        lo = max(t - r0, 0.0)
        hi = min(t + r0, 1.0)
        clamped = t + r0 > 1.0
        th0 = math.atan2(z0[0].imag, z0[0].real) if t > 0 else 0.0
        half = math.pi if (r0 >= 2.0 or t < 1e-14) else min(math.pi, 2.0 * math.asin(min(r0, 2.0) / 2.0))
        ca = c_alpha(1, alpha)
        if clamped:
            x, w = _jacobi_rule(n_radial, alpha)
            scale = (hi - lo) / 2.0
            r = lo + (x + 1.0) * scale
            # (1-r)^alpha = ((1-x) scale)^alpha absorbed into the rule
            wr = w * scale ** (alpha + 1.0) * (1.0 + r) ** alpha * r
        else:
            x, w = _legendre_rule(n_radial)
            scale = (hi - lo) / 2.0
            r = lo + (x + 1.0) * scale
            wr = w * scale * (1.0 - r * r) ** alpha * r
        xt, wt = _legendre_rule(n_angular)
        th = th0 + xt * half
        wth = wt * half
        nodes = (r[:, None] * np.exp(1j * th)[None, :]).reshape(-1, 1)
        weights = (ca / math.pi) * (wr[:, None] * wth[None, :]).reshape(-1)
        return Patch(nodes=nodes, weights=weights, ball=ball)
    # n = 2: Sobol sampling of the product box from the coordinate bounds
    # |w1 - t| <= r0 (transversal, in the rotated frame) and |w_2|^2 <= 2 r0.
    u0 = z0 / t if t > 1e-14 else np.array([1.0 + 0j, 0.0 + 0j])
    u1 = np.array([-np.conj(u0[1]), np.conj(u0[0])])
    tang = math.sqrt(min(2.0 * r0, 1.0))
    b1 = min(r0, 2.0)
    sob = qmc.Sobol(d=4, scramble=True, seed=seed)
    m = max(256, n_radial * n_angular)
    q = sob.random(m)
    c1 = (t + b1 * (2 * q[:, 0] - 1)) + 1j * (b1 * (2 * q[:, 1] - 1))
    c2 = (tang * (2 * q[:, 2] - 1)) + 1j * (tang * (2 * q[:, 3] - 1))
    W = c1[:, None] * u0[None, :] + c2[:, None] * u1[None, :]
    inside = np.sum(np.abs(W) ** 2, axis=1) < 1.0 - 1e-12
    W = W[inside]
    boxvol = (2 * b1) ** 2 * (2 * tang) ** 2
    dens = c_alpha(2, alpha) * (1.0 - np.sum(np.abs(W) ** 2, axis=1)) ** alpha
    weights = dens * boxvol / (math.pi**2 / 2.0) / m
    return Patch(nodes=W, weights=weights, ball=ball)


def patch_integrate(vals: np.ndarray, patch: Patch) -> complex:
    return complex(np.sum(np.asarray(vals).reshape(-1) * patch.weights))
