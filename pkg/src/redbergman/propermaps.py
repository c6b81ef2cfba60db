"""Proper holomorphic maps and algebraic correspondences.

Maps are restricted to algebraic families (powers, Blaschke products,
polynomials) so that properness is certifiable and branch solving
reduces to polynomial root finding.  Roots come from the companion
matrix (exactly what numpy's polyroots does) followed by one Newton
polish step; branches are filtered by domain membership with a small
boundary margin.

Correspondences are bivariate polynomials Q(z, w); forward branches are
the roots of Q(z, .), backward branches of Q(., w), with derivatives by
implicit differentiation.  Singular sets are the discriminant loci
(plus leading-coefficient zeros), computed by evaluating the Sylvester
determinant on scaled roots of unity and interpolating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (
    BranchCountError,
    NearCriticalError,
    NumericalFailureError,
    SingularLocusError,
)
from .geometry import Disc, PlanarDomain, require_finite

__all__ = [
    "BranchSet",
    "ProperMap",
    "PowerMap",
    "BlaschkeProduct",
    "PolynomialMap",
    "CorrespondenceModel",
]

MEMBERSHIP_MARGIN = 1e-12
NEAR_CRITICAL_RADIUS = 1e-8
CRITICAL_DEDUP_TOL = 1e-9


@dataclass(frozen=True)
class BranchSet:
    """Branch points and branch derivatives at one query point."""

    points: np.ndarray
    derivatives: np.ndarray

    def __len__(self):
        return len(self.points)


def _poly_roots(coeffs_ascending) -> np.ndarray:
    """Companion-matrix roots with one Newton polish step."""
    c = np.asarray(coeffs_ascending, dtype=complex)
    c = np.trim_zeros(c, "b")
    if c.size <= 1:
        return np.array([], dtype=complex)
    try:
        roots = P.polyroots(c)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"root solve failed for coefficients {c}") from exc
    dc = P.polyder(c)
    val = P.polyval(roots, c)
    dval = P.polyval(roots, dc)
    ok = np.abs(dval) > 1e-30
    roots[ok] = roots[ok] - val[ok] / dval[ok]
    return roots


class ProperMap:
    """Common behavior of the algebraic proper-map families.

    Subclasses provide ``_numer``/``_denom`` ascending coefficient
    arrays with f = numer/denom (denom = [1] for polynomial families),
    plus ``multiplicity``.
    """

    source: PlanarDomain
    target: PlanarDomain
    multiplicity: int

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return P.polyval(z, self._numer) / P.polyval(z, self._denom)

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        n, d = self._numer, self._denom
        num = P.polysub(P.polymul(P.polyder(n), d), P.polymul(n, P.polyder(d)))
        return P.polyval(z, num) / P.polyval(z, d) ** 2

    def critical_points(self) -> np.ndarray:
        """Zeros of f' inside the source (|f'| < 1e-10 after polish)."""
        n, d = self._numer, self._denom
        dnum = P.polysub(P.polymul(P.polyder(n), d), P.polymul(n, P.polyder(d)))
        pts = _poly_roots(dnum)
        pts = pts[self.source.contains(pts, MEMBERSHIP_MARGIN)] if pts.size else pts
        return pts[np.abs(self.deriv(pts)) < 1e-10] if pts.size else pts

    def critical_values(self) -> np.ndarray:
        """Images of the critical points, deduplicated.  Computed once
        and cached; models are immutable."""
        cached = getattr(self, "_critical_values", None)
        if cached is not None:
            return cached
        vals = []
        for z0 in self.critical_points():
            w0 = complex(self(z0))
            if all(abs(w0 - v) > CRITICAL_DEDUP_TOL for v in vals):
                vals.append(w0)
        out = np.array(vals, dtype=complex)
        self._critical_values = out
        return out

    def local_inverses(self, w) -> BranchSet:
        """All multiplicity-many solutions of f(z) = w in the source,
        with derivatives 1/f'."""
        require_finite(w)
        w = complex(w)
        crit = self.critical_values()
        if crit.size and np.min(np.abs(crit - w)) <= NEAR_CRITICAL_RADIUS:
            raise NearCriticalError(f"w={w} is within {NEAR_CRITICAL_RADIUS} of a critical value")
        # f(z) = w  <=>  numer(z) - w*denom(z) = 0
        coeffs = P.polysub(self._numer, np.asarray([w]) * np.asarray(self._denom))
        roots = _poly_roots(coeffs)
        inside = roots[self.source.contains(roots, MEMBERSHIP_MARGIN)] if roots.size else roots
        if len(inside) != self.multiplicity:
            raise BranchCountError(
                f"expected {self.multiplicity} preimages of w={w}, found "
                f"{len(inside)} among roots {roots}"
            )
        derivs = 1.0 / self.deriv(inside)
        return BranchSet(points=inside, derivatives=derivs)


class PowerMap(ProperMap):
    """f(z) = z^m.  The identity map is PowerMap(1)."""

    def __init__(self, m: int, source: PlanarDomain | None = None,
                 target: PlanarDomain | None = None):
        if m < 1:
            raise ValueError(f"power must be >= 1, got {m}")
        self.m = m
        self.multiplicity = m
        self.source = source if source is not None else Disc(0.0, 1.0)
        self.target = target if target is not None else Disc(0.0, 1.0)
        self._numer = np.zeros(m + 1, dtype=complex)
        self._numer[m] = 1.0
        self._denom = np.ones(1, dtype=complex)

    def __repr__(self):
        return f"PowerMap(m={self.m})"


class BlaschkeProduct(ProperMap):
    """Finite Blaschke product prod_k (z - a_k)/(1 - conj(a_k) z) on the
    unit disc; a proper self-map of multiplicity len(zeros)."""

    def __init__(self, zeros):
        zeros = [complex(a) for a in zeros]
        if not zeros:
            raise ValueError("need at least one zero")
        for a in zeros:
            require_finite(a)
            if abs(a) >= 1:
                raise ValueError(f"Blaschke zero must satisfy |a| < 1, got {a}")
        self.zeros = tuple(zeros)
        self.multiplicity = len(zeros)
        self.source = Disc(0.0, 1.0)
        self.target = Disc(0.0, 1.0)
        numer = np.ones(1, dtype=complex)
        denom = np.ones(1, dtype=complex)
        for a in zeros:
            numer = P.polymul(numer, np.asarray([-a, 1.0]))
            denom = P.polymul(denom, np.asarray([1.0, -np.conj(a)]))
        self._numer = numer
        self._denom = denom

    def __repr__(self):
        return f"BlaschkeProduct(zeros={list(self.zeros)})"


class PolynomialMap(ProperMap):
    """Polynomial map given by ascending coefficients; the caller is
    responsible for choosing domains on which it is proper."""

    def __init__(self, coeffs, source: PlanarDomain, target: PlanarDomain):
        coeffs = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
        if coeffs.size < 2:
            raise ValueError("polynomial map must be non-constant")
        self._numer = coeffs
        self._denom = np.ones(1, dtype=complex)
        self.multiplicity = coeffs.size - 1
        self.source = source
        self.target = target

    def __repr__(self):
        return f"PolynomialMap(coeffs={list(self._numer)})"


# ---------------------------------------------------------------------------
# correspondences

def _interp_determinant_poly(sylvester_at, degree_bound: int) -> np.ndarray:
    """Coefficients of z -> det(S(z)) by evaluation at scaled roots of
    unity and an FFT-style Vandermonde solve."""
    npts = degree_bound + 1
    radius = 1.3
    zs = radius * np.exp(2j * np.pi * np.arange(npts) / npts)
    vals = np.array([np.linalg.det(sylvester_at(z)) for z in zs])
    # inverse DFT recovers c_k r^k from samples on the scaled circle
    ck = np.fft.ifft(vals)
    coeffs = ck / radius ** np.arange(npts)
    return coeffs


def _sylvester(pc, qc):
    """Sylvester matrix of two ascending-coefficient polynomials."""
    pdeg = len(pc) - 1
    qdeg = len(qc) - 1
    n = pdeg + qdeg
    s = np.zeros((n, n), dtype=complex)
    for i in range(qdeg):
        s[i, i:i + pdeg + 1] = pc[::-1]
    for i in range(pdeg):
        s[qdeg + i, i:i + qdeg + 1] = qc[::-1]
    return s


@dataclass(frozen=True)
class CorrespondenceModel:
    """Algebraic proper correspondence with graph Q(z, w) = 0.

    ``coeffs[i, j]`` multiplies z^i w^j.  p (forward branch count) is
    the degree in w, q (backward) the degree in z.  The singular sets
    v1, v2 are the discriminant loci together with the zeros of the
    relevant leading coefficient, intersected with the domains; they can
    be strict supersets of the true singular sets, which only makes the
    exclusion zones larger.
    """

    coeffs: np.ndarray
    d1: PlanarDomain
    d2: PlanarDomain

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        if c.shape[0] < 2 and c.shape[1] < 2:
            raise ValueError("correspondence polynomial must depend on z or w")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "_v1", self._singular_set(axis=0))
        object.__setattr__(self, "_v2", self._singular_set(axis=1))

    @property
    def p(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def q(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def v1(self) -> np.ndarray:
        return self._v1

    @property
    def v2(self) -> np.ndarray:
        return self._v2

    @staticmethod
    def _val2d(z, w, c):
        z, w = np.broadcast_arrays(np.asarray(z, dtype=complex),
                                   np.asarray(w, dtype=complex))
        return P.polyval2d(z, w, c)

    def qval(self, z, w):
        return self._val2d(z, w, self.coeffs)

    def qz(self, z, w):
        cz = P.polyder(self.coeffs, axis=0) if self.q > 0 else np.zeros((1, 1))
        return self._val2d(z, w, cz)

    def qw(self, z, w):
        cw = P.polyder(self.coeffs, axis=1) if self.p > 0 else np.zeros((1, 1))
        return self._val2d(z, w, cw)

    def _singular_set(self, axis: int) -> np.ndarray:
        """Discriminant locus of Q solved along ``axis`` (0: roots in w
        for given z, 1: roots in z for given w), in the matching domain."""
        c = self.coeffs if axis == 0 else self.coeffs.T
        domain = self.d1 if axis == 0 else self.d2
        deg = c.shape[1] - 1
        if deg < 2:
            # linear fibers never collide; only a vanishing leading
            # coefficient can reduce the branch count
            lead = c[:, -1]
            pts = _poly_roots(lead)
        else:
            def sylvester_at(x):
                fiber = P.polyval(x, c)        # ascending coefficients along the fiber
                dfiber = P.polyder(fiber)
                return _sylvester(fiber, dfiber)

            other_deg = c.shape[0] - 1
            bound = other_deg * (2 * deg - 1)
            disc = _interp_determinant_poly(sylvester_at, bound)
            disc[np.abs(disc) < 1e-9 * max(np.max(np.abs(disc)), 1e-30)] = 0.0
            pts = _poly_roots(disc)
            lead_roots = _poly_roots(c[:, -1])
            pts = np.concatenate([pts, lead_roots]) if lead_roots.size else pts
        if pts.size == 0:
            return np.array([], dtype=complex)
        pts = pts[domain.contains(pts)]
        out = []
        for z0 in pts:
            if all(abs(z0 - v) > CRITICAL_DEDUP_TOL for v in out):
                out.append(complex(z0))
        return np.array(out, dtype=complex)

    def _branches(self, x, c, domain_out, count, v_set, dq_self, dq_other) -> BranchSet:
        require_finite(x)
        x = complex(x)
        if v_set.size and np.min(np.abs(v_set - x)) <= NEAR_CRITICAL_RADIUS:
            raise SingularLocusError(f"query {x} is within {NEAR_CRITICAL_RADIUS} "
                                     "of the singular set")
        fiber = P.polyval(x, c)
        roots = _poly_roots(fiber)
        if roots.size > 1:
            dists = np.abs(roots[:, None] - roots[None, :])
            np.fill_diagonal(dists, np.inf)
            if np.min(dists) < 1e-7:
                raise SingularLocusError(f"multiple root of the fiber over {x}")
        inside = roots[domain_out.contains(roots, MEMBERSHIP_MARGIN)] if roots.size else roots
        if len(inside) != count:
            raise BranchCountError(
                f"expected {count} branches over {x}, found {len(inside)} "
                f"among roots {roots}"
            )
        derivs = -dq_other(x, inside) / dq_self(x, inside)
        return BranchSet(points=inside, derivatives=derivs)

    def forward_branches(self, z) -> BranchSet:
        """Roots w of Q(z, .) in d2 with derivatives -Q_z/Q_w."""
        return self._branches(
            z, self.coeffs, self.d2, self.p, self.v1,
            dq_self=lambda z0, w: self.qw(z0, w),
            dq_other=lambda z0, w: self.qz(z0, w),
        )

    def backward_branches(self, w) -> BranchSet:
        """Roots z of Q(., w) in d1 with derivatives -Q_w/Q_z."""
        return self._branches(
            w, self.coeffs.T, self.d1, self.q, self.v2,
            dq_self=lambda w0, z: self.qz(z, w0),
            dq_other=lambda w0, z: self.qw(z, w0),
        )
