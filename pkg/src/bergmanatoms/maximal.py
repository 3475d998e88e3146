"""Maximal functions: non-tangential, tangential, central, and grand.

The non-tangential field over a tensor grid is computed exactly (as a
grid sup) with circular sliding-window maxima per radial row pair.  The
grand maximal function is a surrogate sup over an explicit dictionary of
normalized bumps on a global octave lattice (denser near the boundary),
optionally extended with partition functions of active Whitney covers;
membership of a dictionary element at z is the closeness filter
rho(z, z0) < delta * r0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter1d

from . import jets
from .bump import BumpFunction, ScaledSmooth, bump_norm, make_bump, multi_indices_upto
from .geometry import RhoBall, rho, rho_many, tau_frame
from .quadrature import (
    Patch,
    QuadratureGrid,
    ball_patch,
    lp_norm_of_values,
    patch_integrate,
)


def _fvals(f, pts):
    return f(pts) if callable(f) else np.asarray(f)


def nontangential_field(fvals: np.ndarray, grid: QuadratureGrid, delta: float) -> np.ndarray:
    """f*_delta at every grid node (exact sup over grid nodes)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not grid.is_tensor:
        out = np.empty(grid.size)
        av = np.abs(np.asarray(fvals).reshape(-1))
        one_minus = 1.0 - np.linalg.norm(grid.nodes, axis=1)
        for k in range(grid.size):
            d = grid.rho_from_point(grid.nodes[k])
            mask = d < delta * one_minus
            mask[k] = True
            out[k] = av[mask].max()
        return out
    nr, nt = grid.field_shape()
    F = np.abs(np.asarray(fvals)).reshape(nr, nt)
    r = grid.radial
    ang_half = grid.ang_table()[: nt // 2 + 1]
    out = np.full((nr, nt), -np.inf)
    row_max = F.max(axis=1)
    for b in range(nr):
        T = delta * (1.0 - r[b]) - np.abs(r - r[b])  # per target row a
        active = np.flatnonzero(T > 0)
        if active.size == 0:
            continue
        # angular window half-widths per target row
        ms = np.searchsorted(ang_half, T[active], side="left") - 1
        for a, m in zip(active, ms):
            if m < 0:
                continue
            if 2 * m + 1 >= nt:
                np.maximum(out[a], row_max[b], out=out[a])
            elif m == 0:
                np.maximum(out[a], F[b], out=out[a])
            else:
                np.maximum(
                    out[a], maximum_filter1d(F[b], size=2 * m + 1, mode="wrap"), out=out[a]
                )
    return out.reshape(-1)


def non_tangential_max(f, z, delta: float, grid: QuadratureGrid) -> float:
    """Sampled sup of |f| over the approach region A_delta(z)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    z = np.atleast_1d(np.asarray(z, complex))
    d = grid.rho_from_point(z)
    mask = d < delta * (1.0 - np.linalg.norm(grid.nodes, axis=1))
    vals = [abs(complex(_fvals(f, z[None, :])[0]))]  # w = z is always admissible
    if mask.any():
        vals.append(float(np.max(np.abs(_fvals(f, grid.nodes[mask])))))
    return max(vals)


def tangential_weight(z, grid: QuadratureGrid, M: float) -> np.ndarray:
    d = grid.rho_from_point(np.atleast_1d(np.asarray(z, complex)))
    one_minus = 1.0 - np.linalg.norm(grid.nodes, axis=1)
    return (one_minus / (one_minus + d)) ** M


def tangential_max(f, z, M: float, grid: QuadratureGrid) -> float:
    """Weighted sup ((1-|w|)/(1-|w|+rho(z,w)))^M |f(w)| over the grid."""
    if M <= 0:
        raise ValueError("M must be positive")
    z = np.atleast_1d(np.asarray(z, complex))
    w = tangential_weight(z, grid, M)
    vals = np.abs(_fvals(f, grid.nodes)).reshape(-1)
    return max(float(np.max(w * vals)), abs(complex(_fvals(f, z[None, :])[0])))


def tangential_field(fvals, grid: QuadratureGrid, M: float, idx: np.ndarray) -> np.ndarray:
    """f**_M at the selected node indices (each O(grid) exact over nodes)."""
    av = np.abs(np.asarray(fvals)).reshape(-1)
    one_minus = 1.0 - np.linalg.norm(grid.nodes, axis=1)
    out = np.empty(idx.size)
    for k, i in enumerate(idx):
        d = grid.rho_from_node_index(int(i))
        out[k] = np.max((one_minus / (one_minus + d)) ** M * av)
    return out


def central_max(uvals, z, grid: QuadratureGrid, ladder: tuple[float, ...] | None = None) -> float:
    """Central maximal average over the geometric radius ladder 3 * 2^-m."""
    av = np.abs(np.asarray(uvals)).reshape(-1)
    if ladder is None:
        ladder = tuple(3.0 * 2.0**-m for m in range(10))
    d = grid.rho_from_point(np.atleast_1d(np.asarray(z, complex)))
    best = 0.0
    for rr in ladder:
        mask = d < rr
        wsum = grid.weights[mask].sum()
        if wsum <= 0:
            continue
        best = max(best, float(np.sum(av[mask] * grid.weights[mask]) / wsum))
    return best


# ---------------------------------------------------------------------------
# grand maximal dictionary


@dataclass
class DictEntry:
    center: np.ndarray
    r0: float
    kind: str  # "bump" | "modulated" | "partition"
    scale: float  # 1 / measured bump norm
    patch: Patch
    gvals: np.ndarray  # normalized element values at the patch nodes
    meta: dict = field(default_factory=dict)


@dataclass
class BumpDictionary:
    grid: QuadratureGrid
    delta: float
    L: int
    entries: list[DictEntry]
    meta: dict = field(default_factory=dict)
    _pair_cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return len(self.entries)

    def pairings(self, f) -> np.ndarray:
        key = id(f)
        if key in self._pair_cache:
            return self._pair_cache[key]
        out = np.empty(self.size, dtype=complex)
        for k, e in enumerate(self.entries):
            fv = _fvals(f, e.patch.nodes).reshape(-1)
            out[k] = np.sum(fv * e.gvals * e.patch.weights)
        if len(self._pair_cache) > 16:
            self._pair_cache.clear()
        self._pair_cache[key] = out
        return out

    def field_values(self, pairings: np.ndarray) -> np.ndarray:
        """max |pairing| over entries admissible at each grid node."""
        K = np.zeros(self.grid.size)
        ap = np.abs(pairings)
        for k, e in enumerate(self.entries):
            d = self.grid.rho_from_point(e.center)
            mask = d < self.delta * e.r0
            if mask.any():
                K[mask] = np.maximum(K[mask], ap[k])
        return K

    def value_at(self, z, pairings: np.ndarray) -> float:
        z = np.atleast_1d(np.asarray(z, complex))
        best = 0.0
        for k, e in enumerate(self.entries):
            if rho(z, e.center) < self.delta * e.r0:
                best = max(best, abs(pairings[k]))
        return best

    def extended(self, extra: list[DictEntry], tag: str = "cover") -> "BumpDictionary":
        return BumpDictionary(
            grid=self.grid,
            delta=self.delta,
            L=self.L,
            entries=self.entries + extra,
            meta={**self.meta, "extended_with": tag, "extra": len(extra)},
        )


_DICT_CACHE: dict = {}


def default_dictionary(
    grid: QuadratureGrid,
    delta: float,
    L: int,
    octaves: int = 3,
    r_max: float = 0.6,
    spacing: float = 0.9,
    modulate: bool = True,
    modulate_stride: int = 4,
    norm_sample: tuple[int, int] = (16, 16),
) -> BumpDictionary:
    """Global octave lattice of normalized bumps (denser near the boundary).

    Each entry is psi/||psi||_{L,z0,r0} (canonical) or a first-order
    Theta-monomial modulation of it, so every entry lies in the bump
    class of any z with rho(z, z0) < delta r0.
    """
    key = (
        id(grid), grid.size, delta, L, octaves, r_max, spacing, modulate, modulate_stride,
    )
    if key in _DICT_CACHE:
        return _DICT_CACHE[key]
    entries: list[DictEntry] = []
    n = grid.n
    for m in range(octaves):
        r0 = r_max * 2.0**-m
        step = spacing * r0
        t_vals = np.arange(step / 2, 1.0, step / 2 * 2)
        dtheta = 2.0 * math.asin(min(step, 2.0) / 2.0)
        n_th = max(1, int(math.ceil(2.0 * math.pi / dtheta)))
        count = 0
        for t in t_vals:
            for j in range(n_th):
                th = 2.0 * math.pi * (j + 0.5 * (m % 2)) / n_th
                c = np.zeros(n, dtype=complex)
                c[0] = t * np.exp(1j * th)
                if np.linalg.norm(c) >= 1.0:
                    continue
                b = make_bump(c, r0, nu=0.5, lmax=L)
                patch = ball_patch(RhoBall(tuple(c), r0), grid.alpha, n, 16, 16)
                pts = ball_patch(RhoBall(tuple(c), r0), 0.0, n,
                                 norm_sample[0], norm_sample[1]).nodes
                nb = bump_norm(b, L, c, r0, grid, pts=pts)
                gv = b.values(patch.nodes) / nb
                entries.append(
                    DictEntry(center=c, r0=r0, kind="bump", scale=1.0 / nb,
                              patch=patch, gvals=gv, meta={"octave": m})
                )
                if modulate and (count % modulate_stride == 0):
                    entries.extend(
                        _modulated_entries(b, c, r0, L, grid, patch, pts)
                    )
                count += 1
    out = BumpDictionary(
        grid=grid, delta=delta, L=L, entries=entries,
        meta={
            "octaves": octaves, "r_max": r_max, "spacing": spacing,
            "modulate": modulate, "modulate_stride": modulate_stride,
            "size": len(entries),
        },
    )
    _DICT_CACHE[key] = out
    return out


class _ModulatedBump:
    """Theta-monomial times canonical bump (smooth protocol for norms)."""

    def __init__(self, b: BumpFunction, J: tuple[int, ...]):
        self.b = b
        self.J = J
        self.frame = tau_frame(b.center_array())
        self.carrier = b.carrier

    def _mono(self, pts):
        from .geometry import theta_many

        th = theta_many(self.b.center_array(), np.atleast_2d(np.asarray(pts, complex)), self.frame)
        out = np.ones(th.shape[0])
        for pos, e in enumerate(self.J):
            if e:
                out = out * th[:, pos] ** e
        return out / self.b.radius ** (0.5 * sum(self.J[2:]) + self.J[0] + self.J[1])

    def values(self, pts):
        return self._mono(pts) * self.b.values(pts)

    def theta_derivs(self, frame, Js, pts):
        params = self.b._jet_params() + (
            jets.jnp.asarray(jets.to_real(self.b.center_array()[None, :])[0]),
            jets.jnp.asarray(self.frame.real_frame()),
            jets.jnp.asarray(np.array(self.J, dtype=float)),
            jets.jnp.asarray(self.b.radius ** (0.5 * sum(self.J[2:]) + self.J[0] + self.J[1])),
        )
        from .geometry import MultiIndex

        order = max(MultiIndex(tuple(J)).order for J in Js) if Js else 0
        tensors = jets.theta_jets(
            _modulated_scalar_fn, params, frame.real_frame(), pts, order
        )
        return {tuple(J): jets.deriv_from_jets(tensors, J) for J in Js}


def _modulated_scalar_fn(x, params):
    # first-order modulation only: the monomial is linear in the coordinates
    centers, ts, radii, shape, anchor, U, Jexp, mscale = params
    bump_val = jets.bump_profile_batch(
        jets.jnp, x[None, :], centers, ts, radii, shape[0], shape[1], shape[2]
    )[0, 0]
    th = U @ (x - anchor)
    mono = jets.jnp.sum(Jexp * th)
    return bump_val * mono / mscale


def _modulated_entries(b, c, r0, L, grid, patch, pts) -> list[DictEntry]:
    out = []
    n2 = 2 * grid.n
    for pos in range(min(n2, 2)):
        J = tuple(1 if k == pos else 0 for k in range(n2))
        mb = _ModulatedBump(b, J)
        nb = bump_norm(mb, L, c, r0, grid, pts=pts)
        gv = mb.values(patch.nodes) / nb
        out.append(
            DictEntry(center=c, r0=r0, kind="modulated", scale=1.0 / nb,
                      patch=patch, gvals=gv, meta={"J": list(J)})
        )
    return out


def partition_entries(
    pou,
    grid: QuadratureGrid,
    L: int,
    max_entries: int = 48,
    max_live_neighbors: int = 24,
) -> list[DictEntry]:
    """Dictionary entries from a cover's partition functions (subsampled).

    Balls whose partition function couples too many bumps are skipped to
    keep the derivative-jet batches small; the covers contribute a
    representative sample, not every ball.
    """
    stride = max(1, pou.size // max_entries)
    out = []
    for i in range(0, pou.size, stride):
        fn = pou.function(i)
        ball = pou.cover.ball(i)
        pts = ball_patch(ball, 0.0, grid.n, 12, 12).nodes
        if fn.live_neighbors(pts).size > max_live_neighbors:
            continue
        nb = bump_norm(fn, L, ball.center_array(), ball.radius, grid, pts=pts,
                       volume=pou.ball_volumes[i])
        patch = pou.patches[i]
        gv = pou.phi_patch_vals[i] / nb
        out.append(
            DictEntry(center=ball.center_array(), r0=ball.radius, kind="partition",
                      scale=1.0 / nb, patch=patch, gvals=gv,
                      meta={"ball": int(i)})
        )
    return out


def grand_max(f, z, delta: float, L: int, dictionary: BumpDictionary, grid: QuadratureGrid) -> float:
    """Surrogate grand maximal function: sup |int f g| over the dictionary."""
    if dictionary.size == 0:
        raise ValueError("dictionary is empty")
    return dictionary.value_at(z, dictionary.pairings(f))


# ---------------------------------------------------------------------------
# level sets


@dataclass
class LevelSetFamily:
    k0: int
    p: float
    alpha: float
    delta: float
    mu: float
    L: int
    thresholds: np.ndarray
    masks: np.ndarray  # (kmax+1, grid.size) bool
    measures: np.ndarray
    combined: np.ndarray  # K + f*_delta over the grid
    fstar: np.ndarray
    grand: np.ndarray
    norm: float

    @property
    def kmax(self) -> int:
        return self.masks.shape[0] - 1

    def mask(self, k: int) -> np.ndarray:
        return self.masks[k]


def level_sets(
    f,
    p: float,
    alpha: float,
    mu: float,
    L: int,
    delta: float,
    kmax: int,
    grid: QuadratureGrid,
    dictionary: BumpDictionary | None = None,
) -> LevelSetFamily:
    """Level sets O_k of K(f) + f*_delta at thresholds 2^{k0+k}."""
    if dictionary is None:
        dictionary = default_dictionary(grid, delta=mu, L=L)
    fvals = _fvals(f, grid.nodes)
    K = dictionary.field_values(dictionary.pairings(f))
    fstar = nontangential_field(fvals, grid, delta)
    T = K + fstar
    if not np.all(np.isfinite(T)):
        raise ValueError("maximal field is not finite on the grid")
    norm = lp_norm_of_values(T, p, grid.weights)
    if norm == 0.0:
        k0 = 0
        masks = np.zeros((kmax + 1, grid.size), dtype=bool)
    else:
        k0 = int(math.ceil(math.log2(norm) - 1e-12))
        thr = 2.0 ** (k0 + np.arange(kmax + 1))
        masks = T[None, :] > thr[:, None]
    thr = 2.0 ** (k0 + np.arange(kmax + 1))
    measures = np.array([grid.weights[m].sum() for m in masks])
    return LevelSetFamily(
        k0=k0, p=p, alpha=alpha, delta=delta, mu=mu, L=L,
        thresholds=thr, masks=masks, measures=measures,
        combined=T, fstar=fstar, grand=K, norm=norm,
    )
