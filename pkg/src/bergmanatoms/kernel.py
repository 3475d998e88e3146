"""Bergman kernel, Bergman projection, and frame derivatives of the kernel.

K^alpha(z, w) = (1 - <z,w>)^{-(n+1+alpha)} with the principal branch
(Re(1 - <z,w>) > 0 on B_n x B_n, so the branch is unambiguous).  The
frame derivative of the kernel in its second argument has an exact
closed form (a Pochhammer factor times powers of <z, v_m(z0)>), which
is validated against central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import MultiIndex, RhoBall, TauFrame, d_of, rho, tau_frame
from .quadrature import QuadratureGrid, volume_alpha


def _as_points(w) -> tuple[np.ndarray, bool]:
    arr = np.asarray(w, dtype=complex)
    if arr.ndim <= 1:
        return np.atleast_1d(arr)[None, :], True
    return arr, False


def kernel_eval(z, w, alpha: float) -> complex:
    """K^alpha(z, w) for single points."""
    zc = np.atleast_1d(np.asarray(z, dtype=complex))
    wc = np.atleast_1d(np.asarray(w, dtype=complex))
    n = zc.size
    s = n + 1 + alpha
    return complex((1.0 - np.sum(zc * np.conj(wc))) ** (-s))


def kernel_eval_many(z, W, alpha: float) -> np.ndarray:
    """K^alpha(z, w) for one z against rows of W."""
    zc = np.atleast_1d(np.asarray(z, dtype=complex))
    W, single = _as_points(W)
    s = zc.size + 1 + alpha
    vals = (1.0 - W.conj() @ zc) ** (-s)
    return vals[0] if single else vals


def bergman_project(f, z, grid: QuadratureGrid, chunk: int = 256):
    """Quadrature approximation of the Bergman projection P_alpha f at z.

    ``z`` may be a single point or a batch (B, n); ``f`` a callable on
    node batches or an array of node samples.
    """
    fvals = f(grid.nodes) if callable(f) else np.asarray(f)
    fvals = fvals.reshape(-1)
    fw = fvals * grid.weights
    Z, single = _as_points(z)
    s = grid.n + 1 + grid.alpha
    out = np.empty(Z.shape[0], dtype=complex)
    for lo in range(0, Z.shape[0], chunk):
        hi = min(lo + chunk, Z.shape[0])
        inner = Z[lo:hi] @ grid.nodes.conj().T  # <z, w> per pair
        out[lo:hi] = ((1.0 - inner) ** (-s)) @ fw
    return complex(out[0]) if single else out


def _pochhammer(s: float, k: int) -> float:
    out = 1.0
    for j in range(k):
        out *= s + j
    return out


def kernel_derivative(J, z0, z, w, alpha: float, frame: TauFrame | None = None):
    """Closed-form frame derivative D^J_{z0} of w' -> K^alpha(z, w') at w.

    Equals (s)_{|J|} * prod_m <z,v_m>^{j_{2m-1}} <z,tau_m>^{j_{2m}}
    / (1 - <z,w>)^{s + |J|} with s = n + 1 + alpha and the frame taken
    at z0.
    """
    J = J if isinstance(J, MultiIndex) else MultiIndex(tuple(J))
    zc = np.atleast_1d(np.asarray(z, dtype=complex))
    wc = np.atleast_1d(np.asarray(w, dtype=complex))
    z0c = np.atleast_1d(np.asarray(z0, dtype=complex))
    n = zc.size
    if frame is None:
        frame = tau_frame(z0c)
    V = frame.dirs_array()
    s = n + 1 + alpha
    k = J.order
    coef = _pochhammer(s, k)
    num = 1.0 + 0.0j
    for m in range(n):
        zv = np.sum(zc * np.conj(V[m]))  # <z, v_m>
        zt = -1j * zv  # <z, tau_m> = <z, i v_m>
        num *= zv ** J.entries[2 * m] * zt ** J.entries[2 * m + 1]
    den = (1.0 - np.sum(zc * np.conj(wc))) ** (s + k)
    return complex(coef * num / den)


def kernel_derivative_fd(
    J, z0, z, w, alpha: float, frame: TauFrame | None = None, step: float = 1e-5
):
    """Central finite-difference oracle for `kernel_derivative`."""
    J = J if isinstance(J, MultiIndex) else MultiIndex(tuple(J))
    z0c = np.atleast_1d(np.asarray(z0, dtype=complex))
    if frame is None:
        frame = tau_frame(z0c)
    V = frame.dirs_array()
    n = z0c.size
    dirs = []
    for m in range(n):
        dirs.append(V[m])
        dirs.append(1j * V[m])

    def eval_at(offsets: dict[int, float]) -> complex:
        wp = np.atleast_1d(np.asarray(w, dtype=complex)).copy()
        for d, h in offsets.items():
            wp = wp + h * dirs[d]
        return kernel_eval(z, wp, alpha)

    # apply a central stencil per direction, one order at a time
    stencils = [({}, 1.0)]
    for d, count in enumerate(J.entries):
        for _ in range(count):
            new = []
            for off, c in stencils:
                plus = dict(off)
                plus[d] = plus.get(d, 0.0) + step
                minus = dict(off)
                minus[d] = minus.get(d, 0.0) - step
                new.append((plus, c / (2 * step)))
                new.append((minus, -c / (2 * step)))
            stencils = new
    return complex(sum(c * eval_at(off) for off, c in stencils))


def kernel_derivative_bound_check(
    J, z0, z, w, alpha: float, grid: QuadratureGrid
) -> float:
    """Measured ratio |D^J K| * rho(z,w)^{d(J)} * v_alpha(B(w, rho(z,w))).

    The ratio is asserted (by the kernel estimate underlying the atom
    theory) to stay bounded when rho(w, z0) < rho(z, z0)/4; callers sweep
    it and report the supremum.
    """
    J = J if isinstance(J, MultiIndex) else MultiIndex(tuple(J))
    rw = rho(w, z0)
    rz = rho(z, z0)
    if not rw < rz / 4.0:
        raise ValueError(f"precondition rho(w,z0) < rho(z,z0)/4 violated: {rw:.4g} vs {rz:.4g}")
    d = rho(z, w)
    dv = volume_alpha(RhoBall(tuple(np.atleast_1d(np.asarray(w, complex))), d), grid, warn=False)
    return float(abs(kernel_derivative(J, z0, z, w, alpha)) * d ** float(d_of(J)) * dv)


@dataclass(frozen=True)
class HoloFunction:
    """Holomorphic test function: polynomial plus kernel-type terms.

    poly maps multi-degrees (len-n tuples) to coefficients; kernel_terms
    is a sequence of (c, pole, s) meaning c / (1 - <z, pole>)^s.  The
    class is closed under complex directional derivatives, so all frame
    derivatives are available in closed form.
    """

    n: int
    poly: tuple[tuple[tuple[int, ...], complex], ...] = ()
    kernel_terms: tuple[tuple[complex, tuple[complex, ...], float], ...] = ()
    label: str = ""

    @staticmethod
    def from_poly(n: int, coeffs: dict, label: str = "") -> "HoloFunction":
        items = tuple(
            (tuple(int(e) for e in k), complex(v)) for k, v in sorted(coeffs.items())
        )
        return HoloFunction(n=n, poly=items, label=label)

    @staticmethod
    def kernel_slice(n: int, pole, s: float, coeff: complex = 1.0, label: str = "") -> "HoloFunction":
        pole = tuple(complex(c) for c in np.atleast_1d(np.asarray(pole, complex)))
        return HoloFunction(n=n, kernel_terms=((complex(coeff), pole, float(s)),), label=label)

    def values(self, pts) -> np.ndarray:
        W, single = _as_points(pts)
        out = np.zeros(W.shape[0], dtype=complex)
        for exps, c in self.poly:
            term = np.full(W.shape[0], c, dtype=complex)
            for k, e in enumerate(exps):
                if e:
                    term = term * W[:, k] ** e
            out += term
        for c, pole, s in self.kernel_terms:
            inner = W @ np.conj(np.asarray(pole))
            out += c * (1.0 - inner) ** (-s)
        return out[0] if single else out

    __call__ = values

    def directional(self, v) -> "HoloFunction":
        """Complex directional derivative (v . grad) f, again holomorphic."""
        v = np.atleast_1d(np.asarray(v, dtype=complex))
        new_poly: dict[tuple[int, ...], complex] = {}
        for exps, c in self.poly:
            for k, e in enumerate(exps):
                if e and v[k] != 0:
                    lowered = list(exps)
                    lowered[k] -= 1
                    key = tuple(lowered)
                    new_poly[key] = new_poly.get(key, 0.0) + c * e * v[k]
        new_terms = []
        for c, pole, s in self.kernel_terms:
            vp = complex(np.sum(v * np.conj(np.asarray(pole))))  # <v, pole>
            if vp != 0:
                new_terms.append((c * s * vp, pole, s + 1.0))
        return HoloFunction(
            n=self.n,
            poly=tuple(sorted(new_poly.items())),
            kernel_terms=tuple(new_terms),
            label=self.label and f"D[{self.label}]",
        )

    def theta_deriv_fn(self, J, frame: TauFrame) -> "HoloFunction":
        """D^J in the frame at `frame.origin`, as a new HoloFunction."""
        J = J if isinstance(J, MultiIndex) else MultiIndex(tuple(J))
        V = frame.dirs_array()
        out = self
        phase = 1j ** sum(J.entries[1::2])
        for m in range(self.n):
            for _ in range(J.entries[2 * m] + J.entries[2 * m + 1]):
                out = out.directional(V[m])
        return out * phase

    def theta_deriv_values(self, J, frame: TauFrame, pts) -> np.ndarray:
        return self.theta_deriv_fn(J, frame).values(pts)

    def theta_derivs(self, frame: TauFrame, Js, pts) -> dict:
        """Smooth-function protocol: exact D^J values for each J."""
        pts = np.atleast_2d(np.asarray(pts, complex))
        return {
            tuple(J.entries if isinstance(J, MultiIndex) else J):
                self.theta_deriv_fn(J, frame).values(pts)
            for J in Js
        }

    def __mul__(self, c) -> "HoloFunction":
        c = complex(c)
        return HoloFunction(
            n=self.n,
            poly=tuple((e, cc * c) for e, cc in self.poly),
            kernel_terms=tuple((cc * c, p, s) for cc, p, s in self.kernel_terms),
            label=self.label,
        )

    __rmul__ = __mul__

    def __add__(self, other: "HoloFunction") -> "HoloFunction":
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        merged: dict[tuple[int, ...], complex] = dict(self.poly)
        for e, c in other.poly:
            merged[e] = merged.get(e, 0.0) + c
        return HoloFunction(
            n=self.n,
            poly=tuple(sorted(merged.items())),
            kernel_terms=self.kernel_terms + other.kernel_terms,
            label=f"{self.label}+{other.label}" if self.label or other.label else "",
        )

    def describe(self) -> dict:
        return {
            "n": self.n,
            "poly": [[list(e), [c.real, c.imag]] for e, c in self.poly],
            "kernel_terms": [
                [[c.real, c.imag], [[p.real, p.imag] for p in pole], s]
                for c, pole, s in self.kernel_terms
            ],
            "label": self.label,
        }


def sup_norm_on_ball(
    fn: HoloFunction, ball: RhoBall, grid: QuadratureGrid, extra_pts: np.ndarray | None = None
) -> float:
    """Sampled sup of |fn| over a rho-ball (grid nodes plus optional points)."""
    d = grid.rho_from_point(ball.center_array())
    vals = []
    mask = d < ball.radius
    if mask.any():
        vals.append(np.max(np.abs(fn.values(grid.nodes[mask]))))
    if extra_pts is not None and len(extra_pts):
        vals.append(np.max(np.abs(fn.values(extra_pts))))
    return float(max(vals)) if vals else 0.0
