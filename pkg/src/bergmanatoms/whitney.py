"""Whitney-type covering of an open grid set under rho, and its partition
of unity.

Radii follow r_i = rho(z_i, O^c) / (2K) with K = 2; centers are chosen
greedily in decreasing distance-to-complement order, accepting a
candidate iff its lambda-ball shares no grid node with previously
accepted lambda-balls, until the nu-balls cover O on the grid.  The
partition functions are quotients phi_i = psi_i / sum_j psi_j of
canonical bumps; their supports sit inside O, so the quotient vanishes
off O and sums to one on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets
from .bump import BumpFunction, ball_volume, make_bump
from .geometry import RhoBall, TauFrame, rho_many, rho_pairwise, tau_frame
from .quadrature import Patch, QuadratureGrid, ball_patch


@dataclass(frozen=True)
class WhitneyConstants:
    K: float = 2.0
    nu: float = 0.5
    lam: float = 0.2
    mu: float = 4.5  # witness dilation; must exceed 2K/(1-h) for grid witnesses

    def validate(self):
        if not (self.mu > 1.0 > self.nu > self.lam > 0.0):
            raise ValueError("need mu > 1 > nu > lambda > 0")


def circular_distance_transform(mask_row: np.ndarray) -> np.ndarray:
    """Circular index distance from each slot to the nearest True slot."""
    nt = mask_row.size
    pos = np.flatnonzero(mask_row)
    if pos.size == 0:
        return np.full(nt, nt, dtype=int)
    j = np.arange(nt)
    k = np.searchsorted(pos, j)
    left = pos[(k - 1) % pos.size]
    right = pos[k % pos.size]
    dl = np.minimum((j - left) % nt, (left - j) % nt)
    dr = np.minimum((j - right) % nt, (right - j) % nt)
    return np.minimum(dl, dr)


def rho_distance_field(mask: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    """Guarded rho-distance from every grid node to the complement of O.

    Returns the full-grid array of (1 - h) * min over complement grid
    nodes of rho(node, .); h is the grid spacing, so the distance is not
    overestimated relative to the continuum complement.
    """
    mask = np.asarray(mask, bool).reshape(-1)
    comp = ~mask
    if not comp.any():
        raise ValueError("complement is empty on the grid")
    guard = 1.0 - grid.spacing
    if grid.is_tensor:
        nr, nt = grid.field_shape()
        compf = comp.reshape(nr, nt)
        ang = grid.ang_table()
        rows = np.flatnonzero(compf.any(axis=1))
        angcost = np.empty((rows.size, nt))
        for b, row in enumerate(rows):
            angcost[b] = ang[np.minimum(circular_distance_transform(compf[row]), nt - 1)]
        raddiff = np.abs(grid.radial[:, None] - grid.radial[None, rows])  # (nr, nb)
        dist = np.min(raddiff[:, :, None] + angcost[None, :, :], axis=1)  # (nr, nt)
        return guard * dist.reshape(-1)
    dists = rho_pairwise(grid.nodes, grid.nodes[comp]).min(axis=1)
    return guard * dists


@dataclass
class WhitneyCover:
    grid: QuadratureGrid
    mask: np.ndarray
    constants: WhitneyConstants
    center_idx: np.ndarray  # grid node indices of accepted centers
    radii: np.ndarray
    dist: np.ndarray  # guarded distance to complement, per center
    witness_idx: np.ndarray  # complement grid node inside the mu-ball
    overlap_bound: int  # measured N0
    diagnostics: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.center_idx.size

    def centers(self) -> np.ndarray:
        return self.grid.nodes[self.center_idx]

    def ball(self, i: int) -> RhoBall:
        return RhoBall(tuple(self.centers()[i]), float(self.radii[i]))

    def serialize(self) -> dict:
        c = self.centers()
        return {
            "constants": {
                "K": self.constants.K,
                "nu": self.constants.nu,
                "lambda": self.constants.lam,
                "mu": self.constants.mu,
            },
            "count": int(self.size),
            "overlap_bound": int(self.overlap_bound),
            "centers": [[float(x.real), float(x.imag)] for row in c for x in row],
            "radii": [float(r) for r in self.radii],
            "witnesses": [int(w) for w in self.witness_idx],
            "diagnostics": self.diagnostics,
        }


def whitney_cover(
    mask: np.ndarray,
    grid: QuadratureGrid,
    constants: WhitneyConstants | None = None,
    max_balls: int = 200_000,
) -> WhitneyCover:
    """Greedy Whitney covering of the grid set O given by ``mask``."""
    constants = constants or WhitneyConstants()
    constants.validate()
    mask = np.asarray(mask, bool).reshape(-1)
    if not mask.any():
        raise ValueError("O is empty on the grid")
    if mask.all():
        raise ValueError("O must be a proper subset of the ball")
    dist = rho_distance_field(mask, grid)
    K, nu, lam, mu = constants.K, constants.nu, constants.lam, constants.mu

    onodes = np.flatnonzero(mask)
    order = onodes[np.argsort(-dist[onodes], kind="stable")]  # grid-index tie-break
    covered = np.zeros(grid.size, dtype=bool)
    in_lambda = np.zeros(grid.size, dtype=bool)
    need = int(mask.sum())
    have = 0
    accepted: list[int] = []
    radii: list[float] = []
    rejected_full = 0
    for idx in order:
        if have >= need:
            break
        if in_lambda[idx]:
            continue
        r_i = dist[idx] / (2.0 * K)
        d = grid.rho_from_node_index(idx)
        lam_ball = d < lam * r_i
        if np.any(in_lambda & lam_ball):
            rejected_full += 1
            continue
        in_lambda |= lam_ball
        newly = (d < nu * r_i) & mask & ~covered
        covered |= newly
        have += int(newly.sum())
        accepted.append(int(idx))
        radii.append(float(r_i))
        if len(accepted) > max_balls:
            raise RuntimeError("covering did not terminate within the ball budget")
    if have < need:
        missing = int(need - have)
        raise RuntimeError(
            f"nu-balls failed to cover O: {missing} of {need} grid nodes uncovered "
            "(grid too coarse relative to O, or lambda too large)"
        )

    center_idx = np.asarray(accepted, dtype=int)
    radii_arr = np.asarray(radii)
    # witnesses for the mu-dilated balls, and the measured overlap bound
    comp_idx = np.flatnonzero(~mask)
    witnesses = np.empty(center_idx.size, dtype=int)
    counts = np.zeros(grid.size, dtype=np.int32)
    for k, idx in enumerate(center_idx):
        d = grid.rho_from_node_index(idx)
        counts[d < radii_arr[k]] += 1
        dc = d[comp_idx]
        j = int(np.argmin(dc))
        if not dc[j] < mu * radii_arr[k]:
            raise RuntimeError(
                f"no complement witness inside the mu-ball of center {idx} "
                f"(nearest at {dc[j]:.4g} vs mu*r = {mu * radii_arr[k]:.4g})"
            )
        witnesses[k] = int(comp_idx[j])
    n0 = int(counts[mask].max()) if mask.any() else 0
    return WhitneyCover(
        grid=grid,
        mask=mask,
        constants=constants,
        center_idx=center_idx,
        radii=radii_arr,
        dist=dist[center_idx],
        witness_idx=witnesses,
        overlap_bound=n0,
        diagnostics={
            "rejected_after_full_check": rejected_full,
            "covered_nodes": int(need),
        },
    )


def _partition_scalar_fn(x, params):
    """Jet kernel: phi_i(x) as a quotient over (padded) neighbor bumps."""
    centers, ts, radii, active, which, shape = params
    vals = jets.bump_profile_batch(
        jets.jnp, x[None, :], centers, ts, radii, shape[0], shape[1], shape[2]
    )[0]
    num = jets.jnp.sum(which * active * vals)
    den = jets.jnp.sum(active * vals)
    den_safe = jets.jnp.where(den > 0.0, den, 1.0)
    return jets.jnp.where(den > 0.0, num / den_safe, 0.0)


class PartitionFunction:
    """One partition function phi_i = psi_i / sum_j psi_j (smooth protocol)."""

    def __init__(self, pou: "PartitionOfUnity", i: int):
        self.pou = pou
        self.i = int(i)

    @property
    def carrier(self) -> RhoBall:
        return self.pou.cover.ball(self.i)

    def values(self, pts, candidates=None) -> np.ndarray:
        return self.pou.phi_values(self.i, pts, candidates)

    __call__ = values

    def theta_derivs(self, frame: TauFrame, Js, pts) -> dict:
        from .geometry import MultiIndex

        order = max(MultiIndex(tuple(J)).order for J in Js) if Js else 0
        # bumps vanish with all derivatives off their supports, so neighbors
        # that are zero at every jet point contribute nothing to the jets
        # and can be dropped exactly (this keeps the padded batch small)
        nbr = self.pou.neighbors[self.i]
        block = self.pou.psi_batch(pts, nbr)
        live = nbr[block.max(axis=0) > 0.0]
        if self.i not in live:
            live = np.concatenate([live, [self.i]])
        params = self.pou._jet_params(self.i, live)
        tensors = jets.theta_jets(
            _partition_scalar_fn, params, frame.real_frame(), pts, order
        )
        return {tuple(J): jets.deriv_from_jets(tensors, J) for J in Js}

    def live_neighbors(self, pts) -> np.ndarray:
        nbr = self.pou.neighbors[self.i]
        block = self.pou.psi_batch(pts, nbr)
        return nbr[block.max(axis=0) > 0.0]


_PARTITION_POLY_FNS: dict = {}


def _partition_poly_fn(exps_key: tuple[tuple[int, ...], ...]):
    """Jet kernel factory: (polynomial in anchor coordinates) * phi_i.

    Exponents are baked in statically so powers differentiate cleanly.
    """
    if exps_key in _PARTITION_POLY_FNS:
        return _PARTITION_POLY_FNS[exps_key]
    exps = tuple(exps_key)

    def fn(x, params):
        centers, ts, radii, active, which, shape, anchor, U, coeffs, scale = params
        base = _partition_scalar_fn(
            x, (centers, ts, radii, active, which, shape)
        )
        th = U @ (x - anchor)
        acc = 0.0 + 0.0j
        for k, e in enumerate(exps):
            mono = 1.0
            for pos, ee in enumerate(e):
                for _ in range(ee):
                    mono = mono * th[pos]
            acc = acc + coeffs[k] * mono
        return base * acc * scale

    _PARTITION_POLY_FNS[exps_key] = fn
    return fn


class PartitionPolyProduct:
    """pi * phi_i as a smooth function (for bump-class membership checks).

    The polynomial is densified over a fixed monomial list so the jet
    kernel is compiled once per (L, n), not once per coefficient pattern.
    """

    def __init__(self, pou: "PartitionOfUnity", i: int, poly, index_list,
                 scale: complex = 1.0):
        self.pou = pou
        self.i = int(i)
        self.poly = poly
        self.index_list = list(index_list)
        self.scale = complex(scale)

    @property
    def carrier(self) -> RhoBall:
        return self.pou.cover.ball(self.i)

    def values(self, pts) -> np.ndarray:
        return self.scale * self.poly.values(pts) * self.pou.phi_values(self.i, pts)

    def theta_derivs(self, frame: TauFrame, Js, pts) -> dict:
        from .geometry import MultiIndex

        order = max(MultiIndex(tuple(J)).order for J in Js) if Js else 0
        nbr = self.pou.neighbors[self.i]
        block = self.pou.psi_batch(pts, nbr)
        live = nbr[block.max(axis=0) > 0.0]
        if self.i not in live:
            live = np.concatenate([live, [self.i]])
        base = self.pou._jet_params(self.i, live)
        exps_key = tuple(
            tuple(J.entries) if hasattr(J, "entries") else tuple(J)
            for J in self.index_list
        )
        coeffs = jets.jnp.asarray(self.poly.coeff_vector(self.index_list))
        anchor = jets.jnp.asarray(jets.to_real(self.poly.anchor_array()[None, :])[0])
        U = jets.jnp.asarray(self.poly.frame.real_frame())
        params = base + (anchor, U, coeffs, jets.jnp.asarray(self.scale))
        fn = _partition_poly_fn(exps_key)
        tensors = jets.theta_jets(fn, params, frame.real_frame(), pts, order)
        return {tuple(J): jets.deriv_from_jets(tensors, J) for J in Js}


@dataclass
class PartitionOfUnity:
    cover: WhitneyCover
    lmax: int
    bumps: list[BumpFunction]
    neighbors: list[np.ndarray]  # ball indices whose supports can meet ours
    patches: list[Patch]
    phi_patch_vals: list[np.ndarray]
    norms_1alpha: np.ndarray  # ||phi_i||_{1,alpha}
    ball_volumes: np.ndarray
    sum_psi_grid: np.ndarray  # over grid nodes (0 off O)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self._centers = self.cover.centers()
        self._ts = np.linalg.norm(self._centers, axis=1)
        self._radii = self.cover.radii

    @property
    def size(self) -> int:
        return self.cover.size

    def function(self, i: int) -> PartitionFunction:
        return PartitionFunction(self, i)

    def psi_batch(self, pts, idxs) -> np.ndarray:
        """psi_j(pts) for j in idxs, shape (m, len(idxs)); one vector call."""
        idxs = np.asarray(idxs, dtype=int)
        X = jets.to_real(np.atleast_2d(np.asarray(pts, complex)))
        b = self.bumps[0]
        return jets.bump_profile_batch(
            np, X, self._centers[idxs], self._ts[idxs], self._radii[idxs],
            b.nu, b.support_frac, b.eps_frac,
        )

    def psi_values(self, i: int, pts) -> np.ndarray:
        return self.bumps[i].values(pts)

    def sum_psi(self, pts, candidates=None) -> np.ndarray:
        idxs = np.arange(self.size) if candidates is None else np.asarray(candidates)
        if idxs.size == 0:
            return np.zeros(np.atleast_2d(np.asarray(pts)).shape[0])
        return self.psi_batch(pts, idxs).sum(axis=1)

    def phi_values(self, i: int, pts, candidates=None) -> np.ndarray:
        """phi_i at arbitrary points; candidates must include every ball
        whose support can meet the points (defaults to neighbors of i)."""
        cand = self.neighbors[i] if candidates is None else np.asarray(candidates)
        vals = self.psi_batch(pts, cand)
        den = vals.sum(axis=1)
        where_i = np.flatnonzero(cand == i)
        if where_i.size == 0:
            num = self.bumps[i].values(pts)
        else:
            num = vals[:, where_i[0]]
        out = np.zeros_like(num)
        pos = den > 0
        out[pos] = num[pos] / den[pos]
        return out

    def phi_grid_values(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """(node indices, phi values) over the support on the global grid."""
        d = self.cover.grid.rho_from_node_index(int(self.cover.center_idx[i]))
        idx = np.flatnonzero(d < self.cover.radii[i])
        vals = self.bumps[i].values(self.cover.grid.nodes[idx])
        den = self.sum_psi_grid[idx]
        pos = den > 0
        out = np.zeros(idx.size)
        out[pos] = vals[pos] / den[pos]
        return idx, out

    def _jet_params(self, i: int, subset: np.ndarray | None = None):
        nbr = self.neighbors[i] if subset is None else np.asarray(subset, dtype=int)
        m = 1
        while m < nbr.size:
            m *= 2
        centers = np.zeros((m, self.cover.grid.n), dtype=complex)
        ts = np.zeros(m)
        radii = np.ones(m)
        active = np.zeros(m)
        which = np.zeros(m)
        C = self.cover.centers()
        for k, j in enumerate(nbr):
            centers[k] = C[j]
            ts[k] = np.linalg.norm(C[j])
            radii[k] = self.cover.radii[j]
            active[k] = 1.0
            if j == i:
                which[k] = 1.0
        b = self.bumps[i]
        shape = jets.jnp.asarray([b.nu, b.support_frac, b.eps_frac])
        return (
            jets.jnp.asarray(centers),
            jets.jnp.asarray(ts),
            jets.jnp.asarray(radii),
            jets.jnp.asarray(active),
            jets.jnp.asarray(which),
            shape,
        )


def partition_of_unity(
    cover: WhitneyCover,
    lmax: int = 4,
    patch_res: tuple[int, int] = (16, 16),
    coverage_tol: float = 1e-9,
) -> PartitionOfUnity:
    """Quotient partition subordinate to a Whitney cover."""
    grid = cover.grid
    nu = cover.constants.nu
    K = cover.constants.K
    bumps = [
        make_bump(grid.nodes[cover.center_idx[i]], cover.radii[i], nu=nu, lmax=lmax)
        for i in range(cover.size)
    ]
    centers = cover.centers()
    ts = np.linalg.norm(centers, axis=1)
    radii = cover.radii
    b0 = bumps[0]

    def psi_block(pts, idxs):
        X = jets.to_real(np.atleast_2d(np.asarray(pts, complex)))
        return jets.bump_profile_batch(
            np, X, centers[idxs], ts[idxs], radii[idxs],
            b0.nu, b0.support_frac, b0.eps_frac,
        )

    # sum of bumps over the grid (supports stay inside O)
    sum_psi = np.zeros(grid.size)
    for i in range(cover.size):
        d = grid.rho_from_node_index(int(cover.center_idx[i]))
        idx = np.flatnonzero(d < cover.radii[i])
        if idx.size:
            sum_psi[idx] += psi_block(grid.nodes[idx], np.array([i]))[:, 0]
    onodes = np.flatnonzero(cover.mask)
    smin = float(sum_psi[onodes].min()) if onodes.size else 1.0
    if smin < 1.0 - coverage_tol:
        raise RuntimeError(f"partition coverage hole: min sum psi = {smin:.6g} on O")
    off = float(sum_psi[~cover.mask].max()) if (~cover.mask).any() else 0.0
    # neighbor lists from the overlap criterion rho < K (r_i + r_j)
    D = rho_pairwise(centers, centers)
    neighbors = [
        np.flatnonzero(D[i] < K * (radii[i] + radii) * (1.0 + 1e-12))
        for i in range(cover.size)
    ]
    patches, phi_vals, norms, vols = [], [], [], []
    for i in range(cover.size):
        ball = cover.ball(i)
        patch = ball_patch(ball, alpha=grid.alpha, n=grid.n,
                           n_radial=patch_res[0], n_angular=patch_res[1])
        block = psi_block(patch.nodes, neighbors[i])
        den = block.sum(axis=1)
        num = block[:, int(np.flatnonzero(neighbors[i] == i)[0])]
        vals = np.zeros(patch.size)
        pos = den > 0
        vals[pos] = num[pos] / den[pos]
        patches.append(patch)
        phi_vals.append(vals)
        norms.append(float(np.sum(vals * patch.weights)))
        vols.append(ball_volume(ball, grid))
    return PartitionOfUnity(
        cover=cover,
        lmax=lmax,
        bumps=bumps,
        neighbors=neighbors,
        patches=patches,
        phi_patch_vals=phi_vals,
        norms_1alpha=np.asarray(norms),
        ball_volumes=np.asarray(vols),
        sum_psi_grid=sum_psi,
        diagnostics={
            "min_sum_psi_on_O": smin,
            "max_sum_psi_off_O": off,
            "max_neighbors": max((len(nb) for nb in neighbors), default=0),
        },
    )
