"""Quasi-metric geometry of the complex unit ball.

The ball B_n carries the boundary-adapted quasi-metric

    rho(z, w) = | |z| - |w| | + | 1 - <z,w> / (|z||w|) |     (z, w != 0)
    rho(z, w) = |z| + |w|                                    (otherwise)

with quasi-triangle constant K = 2, the invariant Bergman metric beta,
Carleson-type regions Q(zeta, r), approach regions, tau-extremal frames
and the Theta coordinate map they induce, and anisotropic multi-index
weights d(J).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

# Quasi-triangle constant of rho on the ball.
K_QUASI = 2.0

# Below this modulus a point is treated as the origin (rho falls back to
# the |z|+|w| branch; avoids cancellation in the 1/(|z||w|) factor).
ORIGIN_TOL = 1e-14

_FRAME_TOL = 1e-12


def _coords(z) -> np.ndarray:
    """Coerce a point (BallPoint, scalar, or sequence) to a complex vector."""
    if isinstance(z, BallPoint):
        return z.as_array()
    arr = np.atleast_1d(np.asarray(z, dtype=complex))
    if arr.ndim != 1:
        raise ValueError(f"expected a single point, got shape {arr.shape}")
    return arr


def _batch(w) -> np.ndarray:
    """Coerce ``w`` to a batch of points with shape (m, n)."""
    if isinstance(w, BallPoint):
        return w.as_array()[None, :]
    arr = np.asarray(w, dtype=complex)
    if arr.ndim == 1:
        return arr[None, :]
    return arr


@dataclass(frozen=True)
class BallPoint:
    """A point of B_n given by n complex coordinates with |z| < 1."""

    coords: tuple[complex, ...]

    def __post_init__(self):
        arr = np.asarray(self.coords, dtype=complex)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("coords must be a nonempty 1-d sequence")
        if np.linalg.norm(arr) >= 1.0:
            raise ValueError(f"|z| = {np.linalg.norm(arr):.6g} is not < 1")
        object.__setattr__(self, "coords", tuple(complex(c) for c in arr))

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def modulus(self) -> float:
        return float(np.linalg.norm(np.asarray(self.coords)))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=complex)


@dataclass(frozen=True)
class MultiIndex:
    """Multi-index J = (j_1, ..., j_{2n}) with order |J| and weight d(J).

    The first two slots are the transversal directions (weight 1 each);
    the remaining 2n-2 slots are tangential (weight 1/2 each).
    """

    entries: tuple[int, ...]

    def __post_init__(self):
        ent = tuple(int(j) for j in self.entries)
        if len(ent) % 2 != 0 or len(ent) == 0:
            raise ValueError("a multi-index on B_n has 2n entries")
        if any(j < 0 for j in ent):
            raise ValueError("multi-index entries must be nonnegative")
        object.__setattr__(self, "entries", ent)

    @property
    def order(self) -> int:
        return sum(self.entries)

    @property
    def weight(self) -> float:
        return float(d_of(self))

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


def d_of(J) -> Fraction:
    """Anisotropic weight d(J) = j_1 + j_2 + (j_3 + ... + j_{2n})/2."""
    ent = J.entries if isinstance(J, MultiIndex) else tuple(int(j) for j in J)
    return Fraction(ent[0] + ent[1]) + Fraction(sum(ent[2:]), 2)


@dataclass(frozen=True)
class RhoBall:
    """rho-ball: membership is rho(center, w) < radius and nothing else."""

    center: tuple[complex, ...]
    radius: float

    def __post_init__(self):
        c = _coords(self.center)
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        object.__setattr__(self, "center", tuple(complex(x) for x in c))
        object.__setattr__(self, "radius", float(self.radius))

    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=complex)

    def contains(self, w) -> np.ndarray:
        return rho_many(self.center_array(), _batch(w)) < self.radius


def rho(z, w) -> float:
    """Quasi-metric rho(z, w) on the ball."""
    return float(rho_many(_coords(z), _batch(w))[0])


def rho_many(z: np.ndarray, W: np.ndarray) -> np.ndarray:
    """rho from one point ``z`` (n,) to each row of ``W`` (m, n)."""
    z = np.asarray(z, dtype=complex)
    W = np.asarray(W, dtype=complex)
    az = float(np.linalg.norm(z))
    aw = np.linalg.norm(W, axis=-1)
    if az < ORIGIN_TOL:
        return az + aw
    inner = W.conj() @ z  # <z, w> = sum z_i conj(w_i)
    out = np.abs(az - aw) + np.abs(1.0 - inner / (az * np.maximum(aw, ORIGIN_TOL)))
    small = aw < ORIGIN_TOL
    if np.any(small):
        out = np.where(small, az + aw, out)
    return out


def rho_pairwise(Z: np.ndarray, W: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Pairwise rho between rows of Z (p, n) and rows of W (q, n)."""
    Z = np.asarray(Z, dtype=complex)
    W = np.asarray(W, dtype=complex)
    p = Z.shape[0]
    if Z.shape[1] == 1:
        az = np.abs(Z[:, 0])
        aw = np.abs(W[:, 0])
        uz = Z[:, 0] / np.maximum(az, ORIGIN_TOL)
        uw = W[:, 0] / np.maximum(aw, ORIGIN_TOL)
        vals = np.abs(az[:, None] - aw[None, :]) + np.abs(1.0 - uz[:, None] * uw.conj()[None, :])
        degenerate = (az[:, None] < ORIGIN_TOL) | (aw[None, :] < ORIGIN_TOL)
        if degenerate.any():
            vals = np.where(degenerate, az[:, None] + aw[None, :], vals)
        return vals
    out = np.empty((p, W.shape[0]))
    for lo in range(0, p, chunk):
        hi = min(lo + chunk, p)
        az = np.linalg.norm(Z[lo:hi], axis=-1)[:, None]
        aw = np.linalg.norm(W, axis=-1)[None, :]
        inner = Z[lo:hi] @ W.conj().T
        denom = np.maximum(az * aw, ORIGIN_TOL**2)
        vals = np.abs(az - aw) + np.abs(1.0 - inner / denom)
        degenerate = (az < ORIGIN_TOL) | (aw < ORIGIN_TOL)
        out[lo:hi] = np.where(degenerate, az + aw, vals)
    return out


def mobius(z, w):
    """Involutive automorphism phi_z of the ball: phi_z(0)=z, phi_z(z)=0."""
    zc = _coords(z)
    single = isinstance(w, BallPoint) or np.asarray(w).ndim <= 1
    W = _batch(w)
    az2 = float(np.vdot(zc, zc).real)
    if az2 < ORIGIN_TOL**2:
        out = -W
        return out[0] if single else out
    wz = W @ zc.conj()  # <w, z> per row
    proj = (wz / az2)[:, None] * zc[None, :]
    orth = W - proj
    s = np.sqrt(max(0.0, 1.0 - az2))
    out = (zc[None, :] - proj - s * orth) / (1.0 - wz)[:, None]
    return out[0] if single else out


def bergman_metric(z, w) -> float:
    """Invariant metric beta(z,w) = (1/2) log((1+|phi_z(w)|)/(1-|phi_z(w)|))."""
    m = np.linalg.norm(np.atleast_2d(mobius(z, w)), axis=-1)
    m = np.clip(m, 0.0, 1.0 - 1e-16)
    return float(0.5 * np.log((1.0 + m) / (1.0 - m))[0])


def bergman_metric_many(z, W) -> np.ndarray:
    m = np.linalg.norm(mobius(z, np.asarray(W, dtype=complex)), axis=-1)
    m = np.clip(m, 0.0, 1.0 - 1e-16)
    return 0.5 * np.log((1.0 + m) / (1.0 - m))


def q_region_contains(zeta, r: float, z) -> bool:
    """Carleson-type region membership: |1 - <zeta, z>| < r for |zeta| = 1."""
    zt = np.asarray(zeta, dtype=complex)
    if abs(np.linalg.norm(zt) - 1.0) > 1e-10:
        raise ValueError("zeta must lie on the unit sphere")
    if r <= 0:
        raise ValueError("r must be positive")
    zc = _coords(z)
    return bool(abs(1.0 - np.vdot(zc, zt).conj()) < r)


def q_region_contains_many(zeta, r: float, W) -> np.ndarray:
    zt = np.asarray(zeta, dtype=complex)
    W = _batch(W)
    inner = W.conj() @ zt
    return np.abs(1.0 - inner) < r


def approach_region_contains(z, w, delta: float) -> bool:
    """True iff w lies in the approach region A_delta(z): rho(z,w) < delta(1-|w|)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    wc = _coords(w)
    return bool(rho(z, wc) < delta * (1.0 - np.linalg.norm(wc)))


def tau(z, xi) -> float:
    """Distance from z to the sphere along the complex line through xi (|xi|=1)."""
    zc = _coords(z)
    xic = np.asarray(xi, dtype=complex)
    c = abs(np.vdot(xic, zc).conj())  # |<xi, z>|
    return float(np.sqrt(c * c + 1.0 - np.vdot(zc, zc).real) - c)


@dataclass(frozen=True)
class TauFrame:
    """tau-extremal orthonormal frame (v_1, tau_1, ..., v_n, tau_n) at a point.

    ``complex_dirs`` holds v_1, ..., v_n as rows; tau_j = i v_j.  The full
    real frame in R^{2n} is the interleaving (v_1, iv_1, v_2, iv_2, ...).
    """

    origin: tuple[complex, ...]
    complex_dirs: tuple[tuple[complex, ...], ...]
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return len(self.complex_dirs)

    def dirs_array(self) -> np.ndarray:
        return np.asarray(self.complex_dirs, dtype=complex)

    def real_frame(self) -> np.ndarray:
        """(2n, 2n) real matrix whose rows are the frame directions."""
        V = self.dirs_array()
        n = V.shape[0]
        rows = np.empty((2 * n, 2 * n))
        for j in range(n):
            rows[2 * j] = _as_real_vector(V[j])
            rows[2 * j + 1] = _as_real_vector(1j * V[j])
        return rows

    def gram_residual(self) -> float:
        R = self.real_frame()
        return float(np.max(np.abs(R @ R.T - np.eye(R.shape[0]))))


def _as_real_vector(v: np.ndarray) -> np.ndarray:
    out = np.empty(2 * v.size)
    out[0::2] = v.real
    out[1::2] = v.imag
    return out


def _as_complex_vector(x: np.ndarray) -> np.ndarray:
    return x[..., 0::2] + 1j * x[..., 1::2]


def tau_frame(z, restarts: int = 16, seed: int = 0, tol: float = 1e-10) -> TauFrame:
    """Construct the tau-extremal frame at z.

    v_1 is the transversal direction z/|z| (or e_1 at the origin); each
    following v_j maximizes tau(z, .) over the unit sphere of the complex
    orthogonal complement, found by projected gradient ascent with random
    restarts.  Ties (the generic case on the ball, where tau is constant
    on the complement) are broken by the restart seed, recorded in the
    frame metadata.
    """
    zc = _coords(z)
    n = zc.size
    az = np.linalg.norm(zc)
    if az < ORIGIN_TOL:
        # at the origin the frame is pinned to the standard basis
        eye = np.eye(n, dtype=complex)
        return TauFrame(
            origin=tuple(complex(c) for c in zc),
            complex_dirs=tuple(tuple(row) for row in eye),
            metadata={"seed": int(seed), "restarts": 0, "ascent_iters": []},
        )
    dirs = [zc / az]
    meta = {"seed": int(seed), "restarts": int(restarts), "ascent_iters": []}
    rng = np.random.default_rng(seed)
    for _ in range(1, n):
        basis = np.asarray(dirs)
        best, best_val, iters = None, -np.inf, 0
        for _r in range(restarts):
            xi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            xi = _project_complement(xi, basis)
            xi /= np.linalg.norm(xi)
            val = tau(zc, xi)
            for _it in range(200):
                g = _tau_gradient(zc, xi)
                g = _project_complement(g, basis)
                g = g - np.vdot(xi, g) * xi  # tangent to the unit sphere
                if np.linalg.norm(g) < tol:
                    break
                step = 0.5
                while step > 1e-6:
                    cand = xi + step * g
                    cand = _project_complement(cand, basis)
                    cand /= np.linalg.norm(cand)
                    cval = tau(zc, cand)
                    if cval > val + 1e-16:
                        xi, val = cand, cval
                        break
                    step *= 0.5
                else:
                    break
                iters += 1
            if val > best_val:
                best, best_val = xi, val
        meta["ascent_iters"].append(iters)
        dirs.append(best)
    frame = TauFrame(
        origin=tuple(complex(c) for c in zc),
        complex_dirs=tuple(tuple(complex(c) for c in v) for v in dirs),
        metadata=meta,
    )
    if frame.gram_residual() > _FRAME_TOL:
        raise RuntimeError(f"frame not orthonormal: residual {frame.gram_residual():.3e}")
    return frame


def _project_complement(xi: np.ndarray, basis: np.ndarray) -> np.ndarray:
    out = xi.copy()
    for b in basis:
        out = out - np.vdot(b, out) * b
    return out


def _tau_gradient(zc: np.ndarray, xi: np.ndarray, h: float = 1e-7) -> np.ndarray:
    """Euclidean gradient of tau(z, .) at xi via central differences in R^{2n}."""
    g = np.zeros_like(xi)
    for k in range(xi.size):
        for unit in (1.0, 1j):
            e = np.zeros_like(xi)
            e[k] = unit
            g += unit * (tau(zc, xi + h * e) - tau(zc, xi - h * e)) / (2 * h)
    return g


def theta(z, w, frame: TauFrame | None = None) -> np.ndarray:
    """Real coordinates of w - z in the tau-extremal frame at z."""
    return theta_many(z, _batch(w), frame)[0]


def theta_many(z, W: np.ndarray, frame: TauFrame | None = None) -> np.ndarray:
    """Theta coordinates for each row of W, shape (m, 2n)."""
    zc = _coords(z)
    if frame is None:
        frame = tau_frame(zc)
    V = frame.dirs_array()
    diff = np.asarray(W, dtype=complex) - zc[None, :]
    comp = diff @ V.conj().T  # <w - z, v_j>
    out = np.empty((diff.shape[0], 2 * zc.size))
    out[:, 0::2] = comp.real
    out[:, 1::2] = comp.imag
    return out


def theta_inverse(z, coords: np.ndarray, frame: TauFrame | None = None) -> np.ndarray:
    """Inverse of the Theta map: recover w from its frame coordinates."""
    zc = _coords(z)
    if frame is None:
        frame = tau_frame(zc)
    V = frame.dirs_array()
    c = np.asarray(coords, dtype=float)
    comp = c[..., 0::2] + 1j * c[..., 1::2]
    return zc + comp @ V
