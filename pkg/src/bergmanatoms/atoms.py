"""Atom construction pipeline: level sets, covers, projections, atoms.

The decomposition of f proceeds by levels k = 0..kmax: on each nonempty
level set O_k a Whitney cover and partition {phi_i^k} are built, f is
projected onto the weighted polynomial spaces V^L(z_i^k), and the pieces

    b_i^k = [f - P_i(f)] phi_i^k
            - sum_j ( [f - P_j(f)] phi_i^k - P_j([f - P_j(f)] phi_i^k) ) phi_j^{k+1}

are assembled into atoms a_i^k = b_i^k / lambda_i^k carried by the
dilated balls B(z_i^k, C r_i^k).  All weighted inner products run on
per-ball quadrature patches, which keeps the vanishing-moment and
annihilation identities exact to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bump import ball_volume, multi_indices_upto
from .geometry import RhoBall, rho_many, rho_pairwise, tau_frame
from .kernel import HoloFunction
from .maximal import (
    BumpDictionary,
    LevelSetFamily,
    default_dictionary,
    level_sets,
    partition_entries,
)
from .polyproj import (
    ThetaPolynomial,
    WeightedBasis,
    orthonormalize,
    project_values,
    projection_coefficients,
)
from .quadrature import QuadratureGrid, lp_norm_of_values
from .whitney import PartitionOfUnity, WhitneyConstants, partition_of_unity, whitney_cover

DEFAULT_CARRIER_CONST = 64.0  # K(K(1 + K(1+2K)) + K(1+2K)) for K = 2


def _bracket_strict(x: float) -> int:
    """Greatest integer strictly less than x."""
    r = round(x)
    if abs(x - r) < 1e-9:
        return int(r) - 1
    return math.floor(x)


def _bracket_floor(x: float) -> int:
    r = round(x)
    if abs(x - r) < 1e-9:
        return int(r)
    return math.floor(x)


def n_p_alpha(p: float, alpha: float, n: int, bracket: str = "strict") -> int:
    """Smallest admissible moment order N for (p, alpha) atoms.

    ``bracket`` selects the greatest-integer convention: "strict" reads
    [x] as the greatest integer strictly less than x (so [m] = m-1 at
    integers), "floor" as the usual floor.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    if alpha <= -1.0:
        raise ValueError("alpha must be > -1")
    br = {"strict": _bracket_strict, "floor": _bracket_floor}[bracket]
    a = br(2.0 * (n + 1) * (1.0 / p - 1.0))
    b = br(2.0 * (n + 1 + alpha) * (1.0 / p - 1.0))
    return max(a, b) + 1


def required_l(p: float, alpha: float, n: int, N: int) -> int:
    """Least admissible polynomial order: max(N, floor((n+1+alpha)/p) + 1)."""
    return max(N, _bracket_floor((n + 1 + alpha) / p) + 1)


@dataclass
class DecomposeConfig:
    N: int | None = None
    L: int | None = None
    delta: float = 1.0
    mu: float = 4.5
    kmax: int = 6
    tail_tol: float = 1e-3
    bracket: str = "strict"
    whitney: WhitneyConstants | None = None
    patch_res: tuple[int, int] = (16, 16)
    carrier_const: float = DEFAULT_CARRIER_CONST
    drop_tol: float = 1e-12
    extend_dictionary: bool = True
    dictionary: BumpDictionary | None = None
    seed: int = 0

    def resolve(self, p: float, alpha: float, n: int) -> tuple[int, int]:
        N = self.N if self.N is not None else n_p_alpha(p, alpha, n, self.bracket)
        L = self.L if self.L is not None else required_l(p, alpha, n, N)
        if N < n_p_alpha(p, alpha, n, self.bracket):
            raise ValueError(
                f"N = {N} violates N >= N_(p,alpha) = {n_p_alpha(p, alpha, n, self.bracket)}"
            )
        if L < required_l(p, alpha, n, N):
            raise ValueError(
                f"L = {L} violates L >= max(N, floor((n+1+alpha)/p)+1) = "
                f"{required_l(p, alpha, n, N)}"
            )
        return N, L


@dataclass
class LevelData:
    k: int
    cover: object
    pou: PartitionOfUnity
    bases: list[WeightedBasis]
    proj: list[ThetaPolynomial]  # P_{phi_i}(f)
    f_patch: list[np.ndarray]
    phi_grid: list[tuple[np.ndarray, np.ndarray]]  # (node idx, phi values)


class BFunction:
    """One piece b_i^k with exact patch-quadrature integrals."""

    def __init__(self, pipeline: "Pipeline", k: int, i: int):
        self.pl = pipeline
        self.k = k
        self.i = i
        self._sup = None
        lev = pipeline.data[k]
        # piece on the level-k ball
        patch_i = lev.pou.patches[i]
        fzi = lev.f_patch[i]
        pi_vals = lev.proj[i].values(patch_i.nodes)
        self.piece_i_vals = (fzi - pi_vals) * lev.pou.phi_patch_vals[i]
        # cross pieces were precomputed j-major in the pipeline cache
        store = pipeline.cross_store.get((k, i), {})
        self.cross_polys = {j: poly for j, (poly, _) in store.items()}
        self.piece_j_vals = {j: vals for j, (_, vals) in store.items()}
        self.js = np.array(sorted(self.piece_j_vals), dtype=int)

    def pieces(self):
        lev = self.pl.data[self.k]
        out = [(lev.pou.patches[self.i], self.piece_i_vals)]
        if self.k + 1 in self.pl.data:
            nxt = self.pl.data[self.k + 1]
            for j in self.js:
                out.append((nxt.pou.patches[int(j)], self.piece_j_vals[int(j)]))
        return out

    def values(self, pts) -> np.ndarray:
        """b_i^k at arbitrary points; each piece is evaluated only on the
        points inside its own ball (it vanishes elsewhere)."""
        pts = np.atleast_2d(np.asarray(pts, complex))
        pl, k, i = self.pl, self.k, self.i
        lev = pl.data[k]
        out = np.zeros(pts.shape[0], dtype=complex)
        ball_i = lev.pou.cover.ball(i)
        mi = rho_many(ball_i.center_array(), pts) < ball_i.radius
        if mi.any():
            sub = pts[mi]
            phi_i = lev.pou.phi_values(i, sub)
            out[mi] = (pl.fvals_at(sub) - lev.proj[i].values(sub)) * phi_i
        if k + 1 in pl.data and self.js.size:
            nxt = pl.data[k + 1]
            for j in self.js:
                ball_j = nxt.pou.cover.ball(int(j))
                mj = rho_many(ball_j.center_array(), pts) < ball_j.radius
                if not mj.any():
                    continue
                sub = pts[mj]
                phi_j = nxt.pou.phi_values(int(j), sub)
                cands_j = pl.cross_down[k][int(j)]
                phi_ik = lev.pou.phi_values(i, sub, candidates=cands_j)
                g = (pl.fvals_at(sub) - nxt.proj[int(j)].values(sub)) * phi_ik
                out[mj] -= (g - self.cross_polys[int(j)].values(sub)) * phi_j
        return out

    def integrate_against(self, fn=None) -> complex:
        """Exact patch integral of b * fn (fn = None means fn == 1)."""
        tot = 0.0 + 0.0j
        for patch, vals in self.pieces():
            gv = 1.0 if fn is None else np.asarray(fn(patch.nodes)).reshape(-1)
            tot += complex(np.sum(vals * gv * patch.weights))
        return tot

    def bergman_projection(self, zpts, alpha: float) -> np.ndarray:
        """P_alpha(b) at the given points, integrating piece by piece."""
        zpts = np.atleast_2d(np.asarray(zpts, complex))
        out = np.zeros(zpts.shape[0], dtype=complex)
        s = zpts.shape[1] + 1 + alpha
        for patch, vals in self.pieces():
            inner = zpts @ patch.nodes.conj().T
            out += ((1.0 - inner) ** (-s)) @ (vals * patch.weights)
        return out

    def sample_points(self, cap: int = 2000) -> np.ndarray:
        pts = [p.nodes for p, _ in self.pieces()]
        lev = self.pl.data[self.k]
        idx = lev.phi_grid[self.i][0]
        if idx.size:
            pts.append(self.pl.grid.nodes[idx])
        allpts = np.concatenate(pts)
        if allpts.shape[0] > cap:
            allpts = allpts[:: allpts.shape[0] // cap + 1]
        return allpts

    def sampled_sup(self) -> float:
        if self._sup is None:
            self._sup = float(np.max(np.abs(self.values(self.sample_points()))))
        return self._sup


@dataclass
class AtomRecord:
    kind: str  # "ball" | "bounded"
    level: int
    index: int
    carrier: RhoBall
    carrier_volume: float
    lambda_paper: float
    lambda_adj: float
    sup_sampled: float
    bfun: BFunction | None = None
    grid_vals: np.ndarray | None = None  # bounded atom: a0 on the grid
    verification: dict | None = None

    def a_values(self, pts) -> np.ndarray:
        if self.kind == "bounded":
            raise ValueError("bounded atom is a grid field; use grid_vals")
        return self.bfun.values(pts) / self.lambda_adj

    def integrate_against(self, fn=None) -> complex:
        if self.kind == "bounded":
            raise ValueError("use grid quadrature for the bounded atom")
        return self.bfun.integrate_against(fn) / self.lambda_adj

    def bergman_projection(self, zpts, alpha: float, grid: QuadratureGrid) -> np.ndarray:
        zpts = np.atleast_2d(np.asarray(zpts, complex))
        if self.kind == "bounded":
            s = zpts.shape[1] + 1 + alpha
            inner = zpts @ grid.nodes.conj().T
            return ((1.0 - inner) ** (-s)) @ (self.grid_vals * grid.weights)
        return self.bfun.bergman_projection(zpts, alpha) / self.lambda_adj


@dataclass
class Pipeline:
    f: object
    p: float
    alpha: float
    N: int
    L: int
    grid: QuadratureGrid
    config: DecomposeConfig
    dictionary: BumpDictionary
    levels: LevelSetFamily
    data: dict[int, LevelData] = field(default_factory=dict)
    cross_neighbors: dict[int, list[np.ndarray]] = field(default_factory=dict)
    _fvals_grid: np.ndarray | None = None
    extended_dictionary: BumpDictionary | None = None

    def fvals_at(self, pts) -> np.ndarray:
        return np.asarray(self.f(pts)).reshape(-1)

    def fvals_grid(self) -> np.ndarray:
        if self._fvals_grid is None:
            self._fvals_grid = self.fvals_at(self.grid.nodes)
        return self._fvals_grid

    cross_down: dict[int, dict[int, np.ndarray]] = field(default_factory=dict)
    cross_store: dict[tuple[int, int], dict] = field(default_factory=dict)

    def levelk_candidates(self, k: int, js: np.ndarray) -> np.ndarray:
        """Level-k balls that can meet the supports of level-(k+1) balls js."""
        lev = self.data[k]
        if k not in self.cross_down or len(js) == 0:
            return np.arange(lev.pou.size)
        pairs = self.cross_down[k]
        cand = set()
        for j in js:
            cand.update(int(x) for x in pairs[int(j)])
        return np.array(sorted(cand), dtype=int)


@dataclass
class DecompositionResult:
    n: int
    p: float
    alpha: float
    params: dict
    f_descr: dict
    lambda0: float
    atom0: AtomRecord | None
    atoms: list[AtomRecord]
    diagnostics: dict
    pipeline: Pipeline | None = None

    def all_lambdas(self) -> np.ndarray:
        lam = [self.lambda0] if self.lambda0 > 0 else []
        lam.extend(a.lambda_adj for a in self.atoms)
        return np.asarray(lam)


def coefficient_lp_sum(result: DecompositionResult, p: float | None = None) -> float:
    """|lambda_0|^p + sum |lambda_i^k|^p over retained atoms."""
    p = result.p if p is None else p
    return float(np.sum(result.all_lambdas() ** p))


def decompose(f, p: float, alpha: float, grid: QuadratureGrid,
              config: DecomposeConfig | None = None) -> DecompositionResult:
    """Run the full decomposition pipeline for f on the given grid."""
    config = config or DecomposeConfig()
    N, L = config.resolve(p, alpha, grid.n)
    if config.whitney is None:
        config.whitney = WhitneyConstants(mu=config.mu)
    dictionary = config.dictionary or default_dictionary(grid, delta=config.mu, L=L)
    levels = level_sets(f, p, alpha, mu=config.mu, L=L, delta=config.delta,
                        kmax=config.kmax, grid=grid, dictionary=dictionary)
    params = {
        "N": N, "L": L, "p": p, "alpha": alpha, "delta": config.delta,
        "mu": config.mu, "kmax": config.kmax, "bracket": config.bracket,
        "carrier_const": config.carrier_const, "seed": config.seed,
        "grid": grid.descriptor(), "k0": levels.k0,
    }
    f_descr = f.describe() if hasattr(f, "describe") else {"label": str(f)}
    pl = Pipeline(f=f, p=p, alpha=alpha, N=N, L=L, grid=grid, config=config,
                  dictionary=dictionary, levels=levels)

    if levels.norm == 0.0:
        return DecompositionResult(
            n=grid.n, p=p, alpha=alpha, params=params, f_descr=f_descr,
            lambda0=0.0, atom0=None, atoms=[],
            diagnostics={"trivial": True, "k0": levels.k0}, pipeline=pl,
        )
    if levels.measures[config.kmax] > config.tail_tol:
        raise RuntimeError(
            f"level-set tail v(O_kmax) = {levels.measures[config.kmax]:.3g} exceeds "
            f"the tolerance {config.tail_tol:.1e}; decomposition not converged at "
            f"kmax = {config.kmax}"
        )

    lmax_bump = max(L, N, 1)
    extra_entries = []
    for k in range(config.kmax + 1):
        mask = levels.mask(k)
        if not mask.any():
            break
        cover = whitney_cover(mask, grid, config.whitney)
        pou = partition_of_unity(cover, lmax=lmax_bump, patch_res=config.patch_res)
        bases, proj, f_patch, phi_grid = [], [], [], []
        for i in range(pou.size):
            basis = orthonormalize(
                cover.centers()[i], pou.phi_patch_vals[i], pou.patches[i], L
            )
            fv = pl.fvals_at(pou.patches[i].nodes)
            bases.append(basis)
            proj.append(project_values(fv, basis))
            f_patch.append(fv)
            phi_grid.append(pou.phi_grid_values(i))
        pl.data[k] = LevelData(k=k, cover=cover, pou=pou, bases=bases, proj=proj,
                               f_patch=f_patch, phi_grid=phi_grid)
        if config.extend_dictionary:
            extra_entries.extend(partition_entries(pou, grid, L))
    if extra_entries:
        pl.extended_dictionary = dictionary.extended(extra_entries)

    # cross-level overlap lists in both directions
    for k in list(pl.data):
        lev = pl.data[k]
        if k + 1 in pl.data:
            nxt = pl.data[k + 1]
            D = rho_pairwise(lev.pou.cover.centers(), nxt.pou.cover.centers())
            lim = config.whitney.K * (
                lev.pou.cover.radii[:, None] + nxt.pou.cover.radii[None, :]
            )
            hit = D < lim * (1 + 1e-12)
            pl.cross_neighbors[k] = [np.flatnonzero(hit[i]) for i in range(lev.pou.size)]
            pl.cross_down[k] = {
                j: np.flatnonzero(hit[:, j]) for j in range(nxt.pou.size)
            }
        else:
            pl.cross_neighbors[k] = [np.array([], dtype=int) for _ in range(lev.pou.size)]

    # cross pieces, computed j-major so each block of bump values is shared
    # by every level-k ball meeting the level-(k+1) ball j
    for k in sorted(pl.data):
        if k + 1 not in pl.data or k >= config.kmax:
            continue
        lev, nxt = pl.data[k], pl.data[k + 1]
        for j in range(nxt.pou.size):
            cands = pl.cross_down[k][j]
            if cands.size == 0:
                continue
            patch_j = nxt.pou.patches[j]
            block = lev.pou.psi_batch(patch_j.nodes, cands)
            den = block.sum(axis=1)
            pos = den > 0
            resid_j = nxt.f_patch[j] - nxt.proj[j].values(patch_j.nodes)
            phj = nxt.pou.phi_patch_vals[j]
            for col, i in enumerate(cands):
                phi_ik = np.zeros(patch_j.size)
                phi_ik[pos] = block[pos, col] / den[pos]
                if float(np.max(phi_ik)) < 1e-15:
                    continue
                g_ij = resid_j * phi_ik
                cj = projection_coefficients(g_ij, nxt.bases[j])
                poly = nxt.bases[j].polynomial_from_coeffs(cj)
                vals = -(g_ij - poly.values(patch_j.nodes)) * phj
                pl.cross_store.setdefault((k, int(i)), {})[int(j)] = (poly, vals)

    # atoms per level
    atoms: list[AtomRecord] = []
    dropped = 0
    thr0 = 2.0**levels.k0
    for k in sorted(pl.data):
        if k >= config.kmax:
            break
        lev = pl.data[k]
        scale_k = 2.0 ** (levels.k0 + k + 1)
        for i in range(lev.pou.size):
            bf = BFunction(pl, k, i)
            sup = bf.sampled_sup()
            if sup <= config.drop_tol * scale_k:
                dropped += 1
                continue
            r_car = config.carrier_const * lev.pou.cover.radii[i]
            carrier = RhoBall(tuple(lev.pou.cover.centers()[i]), float(r_car))
            vol = ball_volume(carrier, grid)
            lam_paper = scale_k * vol ** (1.0 / p)
            lam_adj = max(lam_paper, sup * vol ** (1.0 / p))
            atoms.append(AtomRecord(
                kind="ball", level=k, index=i, carrier=carrier, carrier_volume=vol,
                lambda_paper=float(lam_paper), lambda_adj=float(lam_adj),
                sup_sampled=float(sup), bfun=bf,
            ))

    # bounded atom from h_0
    fvals = pl.fvals_grid()
    h0 = _h_field(pl, 0)
    lam0 = float(np.max(np.abs(h0)))
    atom0 = None
    if lam0 > 0:
        atom0 = AtomRecord(
            kind="bounded", level=-1, index=0,
            carrier=RhoBall(tuple(np.zeros(grid.n, complex)), 3.0),
            carrier_volume=1.0, lambda_paper=lam0, lambda_adj=lam0,
            sup_sampled=lam0, grid_vals=h0 / lam0,
        )

    diagnostics = {
        "k0": levels.k0,
        "norm_T": levels.norm,
        "level_measures": [float(x) for x in levels.measures],
        "levels_built": sorted(pl.data),
        "balls_per_level": {str(k): int(pl.data[k].pou.size) for k in pl.data},
        "atoms": len(atoms),
        "dropped_zero_atoms": dropped,
        "lambda0": lam0,
        "h0_sup_over_scale": lam0 / thr0,
        "coeff_lp_sum": float(
            lam0**p + sum(a.lambda_adj**p for a in atoms)
        ),
    }
    return DecompositionResult(
        n=grid.n, p=p, alpha=alpha, params=params, f_descr=f_descr,
        lambda0=lam0, atom0=atom0, atoms=atoms, diagnostics=diagnostics,
        pipeline=pl,
    )


def _h_field(pl: Pipeline, k: int) -> np.ndarray:
    """h_k on the grid: f off O_k plus the projected parts on O_k."""
    fvals = pl.fvals_grid()
    mask = pl.levels.mask(k)
    out = np.where(mask, 0.0, fvals)
    if k in pl.data:
        lev = pl.data[k]
        for i in range(lev.pou.size):
            idx, phiv = lev.phi_grid[i]
            if idx.size:
                out[idx] += lev.proj[i].values(pl.grid.nodes[idx]) * phiv
    return out


def _sum_b_field(pl: Pipeline, k: int, atoms: list[AtomRecord]) -> np.ndarray:
    """sum_i b_i^k at the grid nodes, accumulated piece by piece."""
    out = np.zeros(pl.grid.size, dtype=complex)
    fvals = pl.fvals_grid()
    lev = pl.data[k]
    nxt = pl.data.get(k + 1)
    live = {a.bfun.i: a.bfun for a in atoms if a.kind == "ball" and a.level == k}
    for i, bf in live.items():
        idx, phiv = lev.phi_grid[i]
        if idx.size:
            pts = pl.grid.nodes[idx]
            out[idx] += (fvals[idx] - lev.proj[i].values(pts)) * phiv
    if nxt is None:
        return out
    for j in range(nxt.pou.size):
        cands = pl.cross_down[k][j]
        jdx, phjv = nxt.phi_grid[j]
        if cands.size == 0 or not jdx.size:
            continue
        pts = pl.grid.nodes[jdx]
        block = lev.pou.psi_batch(pts, cands)
        den = block.sum(axis=1)
        pos = den > 0
        resid = fvals[jdx] - nxt.proj[j].values(pts)
        for col, i in enumerate(cands):
            bf = live.get(int(i))
            if bf is None or int(j) not in bf.cross_polys:
                continue
            phi_ik = np.zeros(jdx.size)
            phi_ik[pos] = block[pos, col] / den[pos]
            g = resid * phi_ik
            out[jdx] -= (g - bf.cross_polys[int(j)].values(pts)) * phjv
    return out


def pipeline_identity_checks(result: DecompositionResult) -> dict:
    """Telescoping, cross-projection annihilation, moments, size bounds."""
    pl = result.pipeline
    out = {"telescoping": [], "annihilation": [], "moments": [], "sizes": [],
           "excluded_points": 0}
    ball_atoms = [a for a in result.atoms if a.kind == "ball"]
    for k in sorted(pl.data):
        if k >= pl.config.kmax:
            break
        scale = 2.0 ** (pl.levels.k0 + k + 1)
        hk = _h_field(pl, k)
        hk1 = _h_field(pl, k + 1)
        sb = _sum_b_field(pl, k, ball_atoms)
        resid = np.max(np.abs(hk1 - hk - sb))
        out["telescoping"].append(float(resid / scale))
        for a in ball_atoms:
            if a.level != k:
                continue
            mom = abs(a.bfun.integrate_against(None))
            out["moments"].append(float(mom / max(a.carrier_volume, 1e-300)))
            out["sizes"].append(float(a.bfun.sampled_sup() / scale))
        if k + 1 in pl.data:
            nxt = pl.data[k + 1]
            lev = pl.data[k]
            down = pl.cross_down[k]
            for j in range(nxt.pou.size):
                isel = down[j]
                if isel.size == 0:
                    continue
                patch = nxt.pou.patches[j]
                block = lev.pou.psi_batch(patch.nodes, isel)
                den = block.sum(axis=1)
                pos = den > 0
                resid = (nxt.f_patch[j] - nxt.proj[j].values(patch.nodes))
                total = np.zeros(nxt.bases[j].dim, dtype=complex)
                s_phi = np.zeros(patch.size)
                for col in range(isel.size):
                    phi_ik = np.zeros(patch.size)
                    phi_ik[pos] = block[pos, col] / den[pos]
                    s_phi += phi_ik
                    total += projection_coefficients(resid * phi_ik, nxt.bases[j])
                # the identity needs the level-k partition to sum to one at
                # the weighted patch points; truncated points are excluded
                wpos = nxt.pou.phi_patch_vals[j] > 1e-12
                gaps = int(np.sum(np.abs(s_phi[wpos] - 1.0) > 1e-8))
                out["excluded_points"] += gaps
                if gaps == 0:
                    out["annihilation"].append(float(np.max(np.abs(total)) /
                                                     (2.0 ** (pl.levels.k0 + k + 1))))
    return out


def reconstruct(result: DecompositionResult, z, grid: QuadratureGrid) -> complex:
    """lambda_0 P_alpha(a_0)(z) + sum lambda P_alpha(a)(z) over retained atoms."""
    z = np.atleast_2d(np.asarray(z, complex))
    total = np.zeros(z.shape[0], dtype=complex)
    if result.atom0 is not None:
        total += result.lambda0 * result.atom0.bergman_projection(z, result.alpha, grid)
    for a in result.atoms:
        total += a.lambda_adj * a.bergman_projection(z, result.alpha, grid)
    return complex(total[0]) if total.size == 1 else total


def reconstruction_error(result: DecompositionResult, m: int | None = None,
                         eval_set=None) -> float:
    """Relative L^p error of the truncation at level m via the telescoped
    remainder f - P_alpha(h_m) = sum_i P_alpha([f - P_i(f)] phi_i^m)."""
    pl = result.pipeline
    grid = pl.grid
    m = pl.config.kmax if m is None else m
    if eval_set is None:
        eval_set = grid.coarse_eval_set()
    pts, wts = eval_set
    fv = pl.fvals_at(pts)
    resid = np.zeros(pts.shape[0], dtype=complex)
    if m in pl.data:
        lev = pl.data[m]
        s = grid.n + 1 + result.alpha
        for i in range(lev.pou.size):
            patch = lev.pou.patches[i]
            vals = (lev.f_patch[i] - lev.proj[i].values(patch.nodes)) * lev.pou.phi_patch_vals[i]
            inner = pts @ patch.nodes.conj().T
            resid += ((1.0 - inner) ** (-s)) @ (vals * patch.weights)
    num = lp_norm_of_values(resid, result.p, wts)
    den = lp_norm_of_values(fv, result.p, wts)
    return float(num / den) if den > 0 else 0.0


# ---------------------------------------------------------------------------
# atom verification


class _ThetaMonomialTest:
    """Theta-monomial test function with exact frame derivatives."""

    def __init__(self, poly: ThetaPolynomial, label: str):
        self.poly = poly
        self.label = label

    def values(self, pts):
        return self.poly.values(pts)

    def theta_derivs(self, frame, Js, pts):
        return self.poly.theta_derivs(frame, Js, pts)


def default_test_set(carrier: RhoBall, N: int, alpha: float, n: int,
                     grid: QuadratureGrid, seed: int = 0, max_monomials: int = 12):
    """Smooth test functions: Theta-monomials (degree <= N+2) and kernel slices."""
    rng = np.random.default_rng(seed)
    z0 = carrier.center_array()
    frame = tau_frame(z0)
    out = []
    monos = [J for J in multi_indices_upto(N + 2, 2 * n) if J.order > 0]
    if len(monos) > max_monomials:
        sel = rng.choice(len(monos), size=max_monomials, replace=False)
        monos = [monos[int(s)] for s in sorted(sel)]
    for J in monos:
        out.append(_ThetaMonomialTest(
            ThetaPolynomial.monomial(z0, frame, J), f"theta^{tuple(J.entries)}"
        ))
    # kernel slices anchored at points well separated from the carrier
    d = grid.rho_from_point(z0)
    want = 2.0 * carrier.radius
    ext = np.flatnonzero(d >= want)
    if ext.size == 0:
        ext = np.array([int(np.argmax(d))])
    for _ in range(3):
        i = int(ext[rng.integers(ext.size)])
        out.append(HoloFunction.kernel_slice(
            n, grid.nodes[i], n + 1 + alpha, label=f"kernel@{i}"
        ))
    return out


def verify_atom(atom: AtomRecord, p: float, q: float, N: int, alpha: float,
                test_set, grid: QuadratureGrid, moment_tol: float = 1e-6) -> dict:
    """Check the atom conditions; failures are report entries, not errors.

    For test functions whose S_N seminorm vanishes (polynomial degree
    below N) the moment bound degenerates to exact annihilation, which
    quadrature can only certify to a floor; the pass threshold is then
    the moment tolerance times the function's sampled sup.
    """
    from .bump import s_n_seminorm

    report: dict = {"kind": atom.kind, "level": atom.level, "index": atom.index}
    if atom.kind == "bounded":
        sup = float(np.max(np.abs(atom.grid_vals)))
        report["conditions"] = {
            "bounded_sup": {"passed": sup <= 1.0 + 1e-12, "margin": sup}
        }
        report["passed"] = sup <= 1.0 + 1e-12
        return report

    v = atom.carrier_volume
    z0 = atom.carrier.center_array()
    frame = tau_frame(z0)
    conds: dict = {}

    # (1) support inside the carrier
    leak = 0.0
    for patch, vals in atom.bfun.pieces():
        d = rho_many(z0, patch.nodes)
        outside = d >= atom.carrier.radius
        if outside.any():
            leak = max(leak, float(np.max(np.abs(vals[outside]))) / atom.lambda_adj)
    conds["support"] = {"passed": leak < 1e-12, "margin": leak}

    # (2) size
    sup_a = atom.sup_sampled / atom.lambda_adj
    if np.isinf(q):
        bound = v ** (-1.0 / p)
        conds["size"] = {"passed": sup_a <= bound * (1 + 1e-9),
                         "margin": sup_a / bound}
    else:
        qq = float(q)
        acc = 0.0
        pieces = atom.bfun.pieces()
        for patch, _ in pieces:
            avals = atom.a_values(patch.nodes)
            acc += float(np.sum(np.abs(avals) ** qq * patch.weights))
        # overlapping pieces integrate |a|^q on overlaps more than once,
        # so this over-counts and stays a safe upper bound
        norm_q = acc ** (1.0 / qq)
        bound = v ** (1.0 / qq - 1.0 / p)
        conds["size"] = {"passed": norm_q <= bound * (1 + 1e-6),
                         "margin": norm_q / bound}

    # (3) vanishing moment
    mom = abs(atom.integrate_against(None))
    mbound = moment_tol * v ** (1.0 - 1.0 / p)
    conds["moment"] = {"passed": mom <= mbound, "margin": mom / mbound}

    # (4) higher moments against the smooth test set
    worst = 0.0
    details = []
    for phi in test_set:
        sn = s_n_seminorm(phi, atom.carrier, N, grid, frame=frame)
        pairing = abs(atom.integrate_against(phi.values))
        sup_phi = float(np.max(np.abs(phi.values(atom.bfun.sample_points()))))
        bound = sn * v ** (1.0 - 1.0 / p) + moment_tol * sup_phi * v ** (1.0 - 1.0 / p)
        margin = pairing / bound if bound > 0 else math.inf
        worst = max(worst, margin)
        details.append({"phi": getattr(phi, "label", "phi"), "margin": margin,
                        "seminorm": sn, "pairing": pairing})
    conds["higher_moments"] = {"passed": worst <= 1.0, "margin": worst,
                               "details": details}

    report["conditions"] = conds
    report["passed"] = all(c["passed"] for c in conds.values())
    return report


def atom_norm_bound(atom: AtomRecord, p: float, alpha: float, grid: QuadratureGrid,
                    eval_set=None, max_rings: int = 10) -> dict:
    """||P_alpha(a)||_{p,alpha} with the ring breakdown around the carrier."""
    if eval_set is None:
        eval_set = grid.coarse_eval_set()
    pts, wts = eval_set
    vals = atom.bergman_projection(pts, alpha, grid)
    total = lp_norm_of_values(vals, p, wts)
    z0 = atom.carrier.center_array()
    d = rho_many(z0, pts)
    r0 = atom.carrier.radius
    rings = []
    for k in range(1, max_rings + 1):
        lo, hi = 2.0 ** (k + 1) * r0, 2.0 ** (k + 2) * r0
        mask = (d >= lo) & (d < hi)
        if not mask.any():
            break
        rings.append(float(np.sum(np.abs(vals[mask]) ** p * wts[mask])))
    ratios = [rings[k + 1] / rings[k] for k in range(len(rings) - 1) if rings[k] > 0]
    fit = float(np.exp(np.mean(np.log(ratios)))) if ratios else None
    return {"norm": float(total), "rings": rings, "fitted_ratio": fit}


def projection_bound_check(result: DecompositionResult, sample: int = 0) -> dict:
    """Measured sup |P_i(f) phi_i| / 2^{k0+k} per (i, k), plus the
    cross-level variant, against the level thresholds."""
    pl = result.pipeline
    out = {"same_level": [], "cross_level": []}
    for k in sorted(pl.data):
        lev = pl.data[k]
        scale = 2.0 ** (pl.levels.k0 + k)
        for i in range(lev.pou.size):
            vals = lev.proj[i].values(lev.pou.patches[i].nodes) * lev.pou.phi_patch_vals[i]
            out["same_level"].append(float(np.max(np.abs(vals)) / scale))
        if k >= pl.config.kmax or k + 1 not in pl.data:
            continue
        scale1 = 2.0 ** (pl.levels.k0 + k + 1)
        for a in result.atoms:
            if a.level != k or a.kind != "ball":
                continue
            bf = a.bfun
            nxt = pl.data[k + 1]
            for j in bf.js:
                poly = bf.cross_polys[int(j)]
                patch = nxt.pou.patches[int(j)]
                vals = poly.values(patch.nodes) * nxt.pou.phi_patch_vals[int(j)]
                out["cross_level"].append(float(np.max(np.abs(vals)) / scale1))
    return out


# ---------------------------------------------------------------------------
# desk corpus and synthetic atoms


def desk_corpus(n: int, alpha: float, seed: int = 0) -> list[HoloFunction]:
    """Monomials, boundary-concentrated kernel slices, random combinations."""
    rng = np.random.default_rng(seed)
    out = []
    mono = tuple(3 if k == 0 else 0 for k in range(n))
    out.append(HoloFunction.from_poly(n, {mono: 1.0}, label="z^3"))
    pole = np.zeros(n, complex)
    pole[0] = 0.8 * np.exp(1j * 0.37)
    out.append(HoloFunction.kernel_slice(n, pole, n + 1 + alpha, label="kernel(0.8)"))
    coeffs = {}
    for _ in range(4):
        deg = tuple(int(rng.integers(0, 4)) if k == 0 else 0 for k in range(n))
        coeffs[deg] = complex(rng.standard_normal(), rng.standard_normal()) * 0.3
    out.append(HoloFunction.from_poly(n, coeffs, label="random_poly"))
    return out


def projected_bump_atom(f, z0, r0: float, N: int, p: float, alpha: float,
                        grid: QuadratureGrid, L: int | None = None) -> AtomRecord:
    """Synthetic atom with full moment control: b = [f - P(f)] psi.

    P is the projection onto V^L under the psi-weighted measure with
    L >= N-1, so b annihilates all Theta-polynomials of degree < N on
    its carrier; the ring decay of P_alpha(b) then reflects the order N.
    """
    from .bump import make_bump
    from .quadrature import ball_patch

    L = max(N, 1) if L is None else L
    z0 = np.atleast_1d(np.asarray(z0, complex))
    carrier = RhoBall(tuple(z0), float(r0))
    psi = make_bump(z0, r0)
    patch = ball_patch(carrier, grid.alpha, grid.n, 28, 28)
    wvals = psi.values(patch.nodes)
    basis = orthonormalize(z0, wvals, patch, L)
    fv = np.asarray(f(patch.nodes)).reshape(-1)
    poly = project_values(fv, basis)
    vals = (fv - poly.values(patch.nodes)) * wvals
    vol = ball_volume(carrier, grid)
    sup = float(np.max(np.abs(vals)))
    if sup == 0:
        raise ValueError("projection reproduces f exactly; pick a less smooth f")
    lam = sup * vol ** (1.0 / p)

    class _Synth:
        def __init__(self):
            self.k = 0
            self.i = -1

        def pieces(self):
            return [(patch, vals)]

        def values(self, pts):
            pts = np.atleast_2d(np.asarray(pts, complex))
            fw = np.asarray(f(pts)).reshape(-1)
            return (fw - poly.values(pts)) * psi.values(pts)

        def integrate_against(self, fn=None):
            gv = 1.0 if fn is None else np.asarray(fn(patch.nodes)).reshape(-1)
            return complex(np.sum(vals * gv * patch.weights))

        def bergman_projection(self, zpts, a):
            zpts = np.atleast_2d(np.asarray(zpts, complex))
            s = zpts.shape[1] + 1 + a
            inr = zpts @ patch.nodes.conj().T
            return ((1.0 - inr) ** (-s)) @ (vals * patch.weights)

        def sample_points(self):
            return patch.nodes

        def sampled_sup(self):
            return sup

    return AtomRecord(
        kind="ball", level=0, index=-1, carrier=carrier, carrier_volume=vol,
        lambda_paper=lam, lambda_adj=lam, sup_sampled=sup, bfun=_Synth(),
    )


def synthetic_ball_atom(z0, r0: float, p: float, alpha: float,
                        grid: QuadratureGrid) -> AtomRecord:
    """Mollified two-bump atom: inner bump minus matched outer shell bump."""
    from .bump import make_bump

    z0 = np.atleast_1d(np.asarray(z0, complex))
    inner = make_bump(z0, 0.45 * r0)
    outer = make_bump(z0, 0.95 * r0)
    carrier = RhoBall(tuple(z0), float(r0))
    from .quadrature import ball_patch

    patch = ball_patch(carrier, grid.alpha, grid.n, 32, 32)
    vi = inner.values(patch.nodes)
    vo = outer.values(patch.nodes) - vi
    mi = float(np.sum(vi * patch.weights))
    mo = float(np.sum(vo * patch.weights))
    if mo <= 0:
        raise ValueError("outer shell has no mass; enlarge r0 or the grid")
    vals = vi - (mi / mo) * vo
    vol = ball_volume(carrier, grid)
    sup = float(np.max(np.abs(vals)))
    lam = sup * vol ** (1.0 / p)

    class _Synth:
        def __init__(self):
            self.k = -1
            self.i = -1

        def pieces(self):
            return [(patch, vals)]

        def values(self, pts):
            return (inner.values(pts)
                    - (mi / mo) * (outer.values(pts) - inner.values(pts)))

        def integrate_against(self, fn=None):
            gv = 1.0 if fn is None else np.asarray(fn(patch.nodes)).reshape(-1)
            return complex(np.sum(vals * gv * patch.weights))

        def bergman_projection(self, zpts, a):
            zpts = np.atleast_2d(np.asarray(zpts, complex))
            s = zpts.shape[1] + 1 + a
            inr = zpts @ patch.nodes.conj().T
            return ((1.0 - inr) ** (-s)) @ (vals * patch.weights)

        def sample_points(self):
            return patch.nodes

        def sampled_sup(self):
            return sup

    return AtomRecord(
        kind="ball", level=0, index=-1, carrier=carrier, carrier_volume=vol,
        lambda_paper=lam, lambda_adj=lam, sup_sampled=sup, bfun=_Synth(),
    )
