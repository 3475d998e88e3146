"""Finite polynomial spaces in Theta coordinates and weighted projections.

V^L(z0) is spanned by monomials Theta(z0, .)^J, |J| <= L, ordered by the
graded-lexicographic order (so |I| < |J| implies I comes first).  An
orthonormal basis under a weighted probability measure is built by
modified Gram-Schmidt on monomials pre-scaled by r^{-d(J)} (the natural
scaling of the ball), with one re-orthogonalization pass when the Gram
residual is large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bump import multi_indices_upto
from .geometry import MultiIndex, TauFrame, d_of, tau_frame, theta_many
from .quadrature import Patch


def _factorial_J(J) -> float:
    out = 1.0
    for j in (J.entries if isinstance(J, MultiIndex) else J):
        out *= math.factorial(j)
    return out


@dataclass(frozen=True)
class ThetaPolynomial:
    """Polynomial in the Theta coordinates of a fixed anchor and frame."""

    anchor: tuple[complex, ...]
    frame: TauFrame
    coeffs: tuple[tuple[tuple[int, ...], complex], ...]

    @staticmethod
    def from_dict(anchor, frame: TauFrame, coeffs: dict) -> "ThetaPolynomial":
        anchor = tuple(complex(c) for c in np.atleast_1d(np.asarray(anchor, complex)))
        items = tuple(
            (tuple(int(e) for e in k), complex(v))
            for k, v in sorted(coeffs.items(), key=lambda kv: (sum(kv[0]), kv[0]))
            if v != 0
        )
        return ThetaPolynomial(anchor=anchor, frame=frame, coeffs=items)

    @staticmethod
    def monomial(anchor, frame: TauFrame, J, coeff: complex = 1.0) -> "ThetaPolynomial":
        ent = J.entries if isinstance(J, MultiIndex) else tuple(int(j) for j in J)
        return ThetaPolynomial.from_dict(anchor, frame, {ent: coeff})

    @property
    def n(self) -> int:
        return len(self.anchor)

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.coeffs), default=0)

    def anchor_array(self) -> np.ndarray:
        return np.asarray(self.anchor, dtype=complex)

    def theta_coords(self, pts) -> np.ndarray:
        return theta_many(self.anchor_array(), np.atleast_2d(np.asarray(pts, complex)), self.frame)

    def values(self, pts) -> np.ndarray:
        single = np.asarray(pts).ndim <= 1
        th = self.theta_coords(pts)
        out = np.zeros(th.shape[0], dtype=complex)
        for exps, c in self.coeffs:
            term = np.full(th.shape[0], c, dtype=complex)
            for k, e in enumerate(exps):
                if e:
                    term = term * th[:, k] ** e
            out += term
        return out[0] if single else out

    __call__ = values

    def values_from_theta(self, th: np.ndarray) -> np.ndarray:
        out = np.zeros(th.shape[0], dtype=complex)
        for exps, c in self.coeffs:
            term = np.full(th.shape[0], c, dtype=complex)
            for k, e in enumerate(exps):
                if e:
                    term = term * th[:, k] ** e
            out += term
        return out

    def partial(self, m: int) -> "ThetaPolynomial":
        """Formal partial derivative in the m-th Theta coordinate."""
        new: dict[tuple[int, ...], complex] = {}
        for exps, c in self.coeffs:
            if exps[m]:
                lowered = list(exps)
                lowered[m] -= 1
                key = tuple(lowered)
                new[key] = new.get(key, 0.0) + c * exps[m]
        return ThetaPolynomial.from_dict(self.anchor, self.frame, new)

    def directional(self, frame_coords: np.ndarray) -> "ThetaPolynomial":
        """Derivative along a direction given by its own-frame coordinates."""
        total: dict[tuple[int, ...], complex] = {}
        for m, c in enumerate(frame_coords):
            if abs(c) < 1e-300:
                continue
            part = self.partial(m)
            for exps, v in part.coeffs:
                total[exps] = total.get(exps, 0.0) + c * v
        return ThetaPolynomial.from_dict(self.anchor, self.frame, total)

    def theta_derivs(self, frame: TauFrame, Js, pts) -> dict:
        """D^J in the directions of (possibly another) frame, exactly."""
        U_other = frame.real_frame()
        U_own = self.frame.real_frame()
        # own-frame coordinates of each direction of the other frame
        C = U_own @ U_other.T  # C[m, d] = <own_m, other_d>
        pts = np.atleast_2d(np.asarray(pts, complex))
        out = {}
        for J in Js:
            ent = J.entries if isinstance(J, MultiIndex) else tuple(J)
            poly = self
            for d, count in enumerate(ent):
                for _ in range(count):
                    poly = poly.directional(C[:, d])
            out[tuple(ent)] = poly.values(pts)
        return out

    def scaled(self, c: complex) -> "ThetaPolynomial":
        return ThetaPolynomial(
            anchor=self.anchor,
            frame=self.frame,
            coeffs=tuple((e, v * c) for e, v in self.coeffs),
        )

    def plus(self, other: "ThetaPolynomial") -> "ThetaPolynomial":
        merged: dict[tuple[int, ...], complex] = dict(self.coeffs)
        for e, v in other.coeffs:
            merged[e] = merged.get(e, 0.0) + v
        return ThetaPolynomial.from_dict(self.anchor, self.frame, merged)

    def coeff_vector(self, index_list) -> np.ndarray:
        lookup = {tuple(J.entries if isinstance(J, MultiIndex) else J): k
                  for k, J in enumerate(index_list)}
        out = np.zeros(len(index_list), dtype=complex)
        for e, v in self.coeffs:
            out[lookup[e]] += v
        return out


@dataclass
class WeightedBasis:
    """Orthonormal basis of V^L(z0) under a weighted probability measure."""

    anchor: tuple[complex, ...]
    frame: TauFrame
    order: int
    indices: list[MultiIndex]
    coeff_matrix: np.ndarray  # rows: pi_J in the monomial basis (grlex columns)
    gram_residual: float
    patch: Patch
    prob_weights: np.ndarray  # probability masses on the patch
    monomial_vals: np.ndarray = field(repr=False, default=None)  # (nJ, m)
    basis_vals: np.ndarray = field(repr=False, default=None)  # (nJ, m)

    @property
    def dim(self) -> int:
        return len(self.indices)

    def pi(self, k: int) -> ThetaPolynomial:
        coeffs = {
            tuple(J.entries): c
            for J, c in zip(self.indices, self.coeff_matrix[k])
            if c != 0
        }
        return ThetaPolynomial.from_dict(np.asarray(self.anchor), self.frame, coeffs)

    def polynomial_from_coeffs(self, c: np.ndarray) -> ThetaPolynomial:
        vec = np.asarray(c, dtype=complex) @ self.coeff_matrix
        coeffs = {tuple(J.entries): v for J, v in zip(self.indices, vec) if v != 0}
        return ThetaPolynomial.from_dict(np.asarray(self.anchor), self.frame, coeffs)


def orthonormalize(
    z0,
    weight_vals: np.ndarray,
    patch: Patch,
    L: int,
    frame: TauFrame | None = None,
    resid_tol: float = 1e-10,
    min_denom: float = 1e-12,
) -> WeightedBasis:
    """Gram-Schmidt basis of V^L(z0) under the weight on the given patch.

    ``weight_vals`` are nonnegative weight-function samples at the patch
    nodes; the measure weight_vals * patch.weights is normalized to total
    mass one, so pi_0 = 1 exactly.  Monomials are pre-scaled by
    r^{-d(J)} before elimination; a second orthogonalization pass runs
    when the first-pass Gram residual exceeds `resid_tol`.  Raises if a
    pivot norm falls below `min_denom` (weight mass cannot resolve
    degree L).
    """
    z0 = np.atleast_1d(np.asarray(z0, complex))
    if frame is None:
        frame = tau_frame(z0)
    w = np.asarray(weight_vals, float) * patch.weights
    mass = w.sum()
    if not mass > 0:
        raise ValueError("weight has no mass on the patch")
    w = w / mass
    n2 = 2 * z0.size
    indices = multi_indices_upto(L, n2)
    th = theta_many(z0, patch.nodes, frame)
    r0 = patch.ball.radius
    scale = np.array([r0 ** (-float(d_of(J))) for J in indices])
    nJ = len(indices)
    M = np.empty((nJ, patch.size), dtype=complex)
    for k, J in enumerate(indices):
        col = np.ones(patch.size, dtype=complex)
        for pos, e in enumerate(J.entries):
            if e:
                col = col * th[:, pos] ** e
        M[k] = col * scale[k]

    def inner(a, b):
        return np.sum(a * np.conj(b) * w)

    Q = np.empty_like(M)
    A = np.eye(nJ, dtype=complex)  # rows of Q in terms of scaled monomials
    for k in range(nJ):
        v = M[k].copy()
        row = np.zeros(nJ, dtype=complex)
        row[k] = 1.0
        for i in range(k):
            c = inner(v, Q[i])
            v -= c * Q[i]
            row -= c * A[i]
        nrm = math.sqrt(max(inner(v, v).real, 0.0))
        if nrm < min_denom:
            raise ValueError(
                f"pivot norm {nrm:.3e} below {min_denom:.0e} at |J|={indices[k].order}; "
                "reduce L or refine the patch"
            )
        Q[k] = v / nrm
        A[k] = row / nrm

    G = (Q * w) @ Q.conj().T
    resid = float(np.max(np.abs(G - np.eye(nJ))))
    if resid > resid_tol:
        for k in range(nJ):
            v = Q[k].copy()
            row = A[k].copy()
            for i in range(k):
                c = inner(v, Q[i])
                v -= c * Q[i]
                row -= c * A[i]
            nrm = math.sqrt(max(inner(v, v).real, 0.0))
            if nrm < min_denom:
                raise ValueError("re-orthogonalization collapsed a pivot")
            Q[k] = v / nrm
            A[k] = row / nrm
        G = (Q * w) @ Q.conj().T
        resid = float(np.max(np.abs(G - np.eye(nJ))))

    coeff = A * scale[None, :]  # back to unscaled monomial coordinates
    return WeightedBasis(
        anchor=tuple(complex(c) for c in z0),
        frame=frame,
        order=L,
        indices=indices,
        coeff_matrix=coeff,
        gram_residual=resid,
        patch=patch,
        prob_weights=w,
        monomial_vals=M / scale[:, None],
        basis_vals=Q,
    )


def project_values(fvals: np.ndarray, basis: WeightedBasis) -> ThetaPolynomial:
    """Projection onto V^L from samples of f at the basis patch nodes."""
    fvals = np.asarray(fvals, dtype=complex).reshape(-1)
    c = (basis.basis_vals.conj() * basis.prob_weights) @ fvals
    return basis.polynomial_from_coeffs(c)


def project(f, basis: WeightedBasis) -> ThetaPolynomial:
    """Projection of a function onto V^L under the basis' weighted measure."""
    fvals = f(basis.patch.nodes) if callable(f) else np.asarray(f)
    return project_values(fvals, basis)


def projection_coefficients(fvals: np.ndarray, basis: WeightedBasis) -> np.ndarray:
    fvals = np.asarray(fvals, dtype=complex).reshape(-1)
    return (basis.basis_vals.conj() * basis.prob_weights) @ fvals


def taylor_polynomial(phi, z0, N: int, frame: TauFrame | None = None) -> ThetaPolynomial:
    """Taylor expansion of order N-1 of phi around z0, in Theta coordinates."""
    z0 = np.atleast_1d(np.asarray(z0, complex))
    if frame is None:
        frame = tau_frame(z0)
    Js = multi_indices_upto(N - 1, 2 * z0.size)
    ders = phi.theta_derivs(frame, Js, z0[None, :])
    coeffs = {}
    for J in Js:
        v = complex(np.asarray(ders[tuple(J.entries)]).reshape(-1)[0])
        if v != 0:
            coeffs[tuple(J.entries)] = v / _factorial_J(J)
    return ThetaPolynomial.from_dict(z0, frame, coeffs)


def coefficient_growth(basis: WeightedBasis) -> dict:
    """Measured constants max_I |a_{J,I}| r^{d(I)} per J (growth check)."""
    r0 = basis.patch.ball.radius
    out = {}
    for k, J in enumerate(basis.indices):
        vals = [
            abs(basis.coeff_matrix[k, i]) * r0 ** float(d_of(I))
            for i, I in enumerate(basis.indices[: k + 1])
        ]
        out[tuple(J.entries)] = max(vals)
    return out
