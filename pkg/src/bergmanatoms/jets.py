"""Frame-direction derivative jets via forward-mode automatic differentiation.

A smooth function f on B_n (viewed on R^{2n}) is differentiated in the
directions of a tau-extremal frame at an anchor:

    D^J f(w) = d^{|J|}/da^J  f(w + a_1 u_1 + ... + a_{2n} u_{2n}) |_{a=0}

where (u_1, ..., u_{2n}) = (v_1, iv_1, ..., v_n, iv_n).  Jets of all
orders up to L are computed with nested `jax.jacfwd` and evaluated in one
vmapped pass per order; the formulas below are written once against a
generic array namespace so the same code runs under numpy (fast plain
evaluation) and jax (differentiation).
"""

from __future__ import annotations

import numpy as np

import jax

jax.config.update("jax_enable_x64", True)

import jax.numpy as jnp  # noqa: E402

# C^inf cutoff: exp(-1/t) is numerically zero below this argument, and the
# clamp keeps forward-mode tangents finite on the inactive branch.
_SPLINE_CLAMP = 5e-3


def to_real(pts: np.ndarray) -> np.ndarray:
    """(m, n) complex -> (m, 2n) real, interleaved (x1, y1, x2, y2, ...)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=complex))
    out = np.empty((pts.shape[0], 2 * pts.shape[1]))
    out[:, 0::2] = pts.real
    out[:, 1::2] = pts.imag
    return out


def to_complex(x):
    return x[..., 0::2] + 1j * x[..., 1::2]


# ---------------------------------------------------------------------------
# generic formulas (xp is numpy or jax.numpy)


def exp_spline(xp, t):
    """exp(-1/t) for t > 0, 0 otherwise; safe under differentiation."""
    tsafe = xp.where(t > _SPLINE_CLAMP, t, _SPLINE_CLAMP)
    return xp.where(t > _SPLINE_CLAMP, xp.exp(-1.0 / tsafe), 0.0)


def flat_top_cutoff(xp, s, plateau: float, support: float):
    """C^inf profile: 1 on s <= plateau, 0 on s >= support."""
    u = (s - plateau) / (support - plateau)
    e_hi = exp_spline(xp, 1.0 - u)
    e_lo = exp_spline(xp, u)
    den = e_hi + e_lo
    den_safe = xp.where(den > 0.0, den, 1.0)
    mid = e_hi / den_safe
    return xp.where(u <= 0.0, 1.0, xp.where(u >= 1.0, 0.0, mid))


def smoothed_rho(xp, x, center, t: float, eps: float):
    """Smooth minorant of rho(center, .) built from softened absolute values.

    Satisfies rho_tilde <= rho <= rho_tilde + 2 eps away from the origin.
    ``center`` is the complex center vector, ``t`` its modulus (a plain
    float, so the origin-centered branch is resolved at build time).
    """
    absw2 = xp.sum(x * x, axis=-1)
    absw = xp.sqrt(absw2 + 1e-300)
    if t < 1e-14:
        return xp.sqrt(absw2 + eps * eps) - eps
    w = to_complex(x)
    inner = xp.sum(w * xp.conj(xp.asarray(center)), axis=-1)
    hz = inner / (xp.maximum(absw, 1e-150) * t)
    ang2 = (1.0 - hz.real) ** 2 + hz.imag**2
    soft_rad = xp.sqrt((absw - t) ** 2 + eps * eps) - eps
    soft_ang = xp.sqrt(ang2 + eps * eps) - eps
    return soft_rad + soft_ang


def smoothed_rho_batch(xp, x, centers, ts, eps):
    """smoothed_rho against a batch of centers; x (..., 2n) vs (M, n) centers.

    Returns shape (..., M).  Centers with ts ~ 0 get the origin form.
    """
    absw2 = xp.sum(x * x, axis=-1)[..., None]
    absw = xp.sqrt(absw2 + 1e-300)
    w = to_complex(x)
    inner = xp.sum(w[..., None, :] * xp.conj(centers)[None, :, :], axis=-1)
    tsafe = xp.maximum(ts, 1e-150)
    hz = inner / (xp.maximum(absw, 1e-150) * tsafe)
    ang2 = (1.0 - hz.real) ** 2 + hz.imag**2
    soft_rad = xp.sqrt((absw - ts) ** 2 + eps * eps) - eps
    soft_ang = xp.sqrt(ang2 + eps * eps) - eps
    origin_form = xp.sqrt(absw2 + eps * eps) - eps
    return xp.where(ts > 1e-14, soft_rad + soft_ang, origin_form)


def bump_profile_batch(xp, x, centers, ts, radii, plateau, support, eps_frac):
    """Values of the canonical bump for each (center, radius); (..., M)."""
    if xp is np and centers.shape[-1] == 1:
        return _bump_values_np_1d(
            to_complex(x)[..., 0], centers[:, 0], ts, radii, plateau, support, eps_frac
        )
    eps = eps_frac * radii
    s = smoothed_rho_batch(xp, x, centers, ts, eps) / radii
    return flat_top_cutoff(xp, s, plateau, support)


def _bump_values_np_1d(wc, centers, ts, radii, plateau, support, eps_frac):
    """numpy fast path on the disk: masked exponentials, one complex multiply."""
    wc = np.atleast_1d(wc)
    absw = np.abs(wc)
    eps = (eps_frac * radii)[None, :]
    rad = absw[:, None] - ts[None, :]
    soft_rad = np.sqrt(rad * rad + eps * eps) - eps
    uw = wc / np.maximum(absw, 1e-150)
    uc = centers / np.maximum(ts, 1e-150)
    hz = uw[:, None] * np.conj(uc)[None, :]
    ang2 = (1.0 - hz.real) ** 2 + hz.imag**2
    soft_ang = np.sqrt(ang2 + eps * eps) - eps
    rho_t = soft_rad + np.where(ts[None, :] > 1e-14, soft_ang, 0.0)
    u = (rho_t / radii[None, :] - plateau) / (support - plateau)
    out = np.zeros(u.shape)
    out[u <= 0.0] = 1.0
    mid = (u > 0.0) & (u < 1.0)
    if mid.any():
        um = u[mid]
        e_hi = np.where(1.0 - um > _SPLINE_CLAMP, np.exp(-1.0 / np.maximum(1.0 - um, _SPLINE_CLAMP)), 0.0)
        e_lo = np.where(um > _SPLINE_CLAMP, np.exp(-1.0 / np.maximum(um, _SPLINE_CLAMP)), 0.0)
        out[mid] = e_hi / (e_hi + e_lo)
    return out


# ---------------------------------------------------------------------------
# jet evaluation

_JET_CACHE: dict = {}


def _pad_rows(x: np.ndarray, mult: int = 64):
    m = x.shape[0]
    target = ((m + mult - 1) // mult) * mult
    if target == m:
        return x, m
    pad = np.repeat(x[-1:], target - m, axis=0)
    return np.concatenate([x, pad], axis=0), m


def _jet_callables(fn, order: int):
    key = (fn, order)
    if key in _JET_CACHE:
        return _JET_CACHE[key]

    def base(a, x, U, params):
        return fn(x + a @ U, params)

    funs = [base]
    cur = base
    for _ in range(order):
        cur = jax.jacfwd(cur, argnums=0)
        funs.append(cur)
    vmapped = tuple(
        jax.jit(jax.vmap(fk, in_axes=(None, 0, None, None))) for fk in funs
    )
    _JET_CACHE[key] = vmapped
    return vmapped


def theta_jets(fn, params, frame_matrix: np.ndarray, pts: np.ndarray, order: int):
    """Derivative tensors of orders 0..order of fn at each point.

    fn(x, params) maps a real coordinate vector (2n,) to a scalar; params
    is a pytree of arrays.  Returns a list `jets` with jets[k] of shape
    (m,) + (2n,)*k, complex.
    """
    U = jnp.asarray(frame_matrix)
    X = to_real(pts) if np.iscomplexobj(pts) else np.atleast_2d(np.asarray(pts, float))
    Xp, m = _pad_rows(X)
    a0 = jnp.zeros(U.shape[0])
    calls = _jet_callables(fn, order)
    out = []
    for k in range(order + 1):
        t = np.asarray(calls[k](a0, jnp.asarray(Xp), U, params))
        out.append(t[:m])
    return out


def index_tuple(J) -> tuple[int, ...]:
    """A representative index tuple of a symmetric derivative tensor."""
    ent = J.entries if hasattr(J, "entries") else tuple(J)
    out = []
    for pos, count in enumerate(ent):
        out.extend([pos] * count)
    return tuple(out)


def deriv_from_jets(jets, J) -> np.ndarray:
    """Extract D^J values from the jet list returned by `theta_jets`."""
    idx = index_tuple(J)
    t = jets[len(idx)]
    return t[(slice(None),) + idx]
