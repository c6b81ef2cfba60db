"""Gram assembly, orthonormalization, and kernel evaluation.

The (weighted, reduced or full) Bergman kernel of a truncated basis is
computed as an orthonormal series K(z, w) = sum_k phi_k(z) *
conj(phi_k(w)).  Orthonormal coefficients come from a pivoted Cholesky
factorization of the discrete Gram matrix; derivatives in the
conjugated slot are analytic (no finite differences), and primitives of
the orthonormal elements give the kernel primitive whose Dirichlet
pairing evaluates derivatives.

The Gram matrix is prescaled to unit diagonal before pivoting.  Raw
power bases can span many decades in norm (Laurent families on thin
annuli) while being perfectly orthogonal; pivoting the scaled matrix
makes the drop test detect near-dependence instead of scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBasisError, EvaluationError, PrimitiveUnavailableError
from .geometry import QuadratureRule
from .holobasis import RawBasis, WeightFn

__all__ = ["GramMatrix", "OrthonormalBasis", "KernelEvaluator",
           "gram_matrix", "orthonormalize"]


@dataclass(frozen=True)
class GramMatrix:
    """Hermitian matrix of discrete weighted inner products
    G[i, j] = sum_q w_q * e_i(node_q) * conj(e_j(node_q)) * nu(node_q)."""

    entries: np.ndarray

    def __post_init__(self):
        h = np.max(np.abs(self.entries - self.entries.conj().T))
        scale = max(np.max(np.abs(self.entries)), 1.0)
        if h > 1e-13 * scale:
            raise ValueError("Gram matrix failed Hermitian symmetrization")
        if not np.all(np.real(np.diag(self.entries)) > 0):
            raise ValueError("Gram diagonal must be strictly positive")


def gram_matrix(basis: RawBasis, rule: QuadratureRule, weight: WeightFn) -> GramMatrix:
    """Assemble the weighted Gram matrix of a raw basis on a rule."""
    if len(basis) == 0:
        raise DegenerateBasisError("cannot assemble a Gram matrix for an empty basis")
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = basis.values(rule.nodes)
    if not np.all(np.isfinite(vals)):
        bad = np.argwhere(~np.isfinite(vals))[0]
        raise EvaluationError(
            f"element {basis.elements[bad[1]]!r} is non-finite at node "
            f"{rule.nodes[bad[0]]}"
        )
    nu = np.asarray(weight(rule.nodes), dtype=float)
    if not np.all(nu > 0):
        raise EvaluationError("weight is non-positive at a quadrature node")
    wq = rule.weights * nu
    g = (vals * wq[:, None]).T @ vals.conj()
    g = 0.5 * (g + g.conj().T)
    return GramMatrix(entries=g)


def _pivoted_cholesky(a: np.ndarray, drop_tol: float):
    """Pivoted Cholesky of a Hermitian PSD matrix with unit-ish diagonal.

    Returns (order, L, pivots): retained column indices in pivot order,
    the corresponding lower-triangular factor rows, and the pivot values
    at selection time.  Stops when the largest remaining pivot falls
    below drop_tol times the first pivot.

    Pivoting is stabilized: the earliest index within a factor 2 of the
    max pivot wins, so well-conditioned families keep their given order
    while near-dependent elements are still deferred and dropped.
    """
    a = a.copy()
    n = a.shape[0]
    order = []
    pivots = []
    L = np.zeros((n, n), dtype=complex)
    active = list(range(n))
    first_pivot = None
    for k in range(n):
        d = np.real(np.diag(a))
        dmax = max(d[i] for i in active)
        if first_pivot is None:
            if dmax <= 0:
                break
            first_pivot = dmax
        if dmax <= drop_tol * first_pivot:
            break
        floor = max(0.5 * dmax, drop_tol * first_pivot)
        j = next(i for i in active if d[i] >= floor)
        piv = d[j]
        order.append(j)
        pivots.append(piv)
        active.remove(j)
        root = np.sqrt(piv)
        col = a[:, j] / root
        L[:, k] = col
        a -= np.outer(col, col.conj())
        # keep the eliminated row/column out of later pivots
        a[j, :] = 0.0
        a[:, j] = 0.0
    if not order:
        raise DegenerateBasisError("all Gram pivots fell below the drop tolerance")
    r = len(order)
    return order, L[np.ix_(order, range(r))], np.array(pivots)


@dataclass(frozen=True)
class OrthonormalBasis:
    """Truncated orthonormal system phi_k = sum_j coeffs[k, j] * raw_j.

    ``coeffs`` has one row per retained element and one column per raw
    element (zero columns for dropped ones); ``gram_condition`` is the
    max/min retained pivot ratio of the prescaled Gram factorization.
    """

    raw: RawBasis
    coeffs: np.ndarray
    retained_count: int
    gram_condition: float

    def phi_values(self, pts) -> np.ndarray:
        """(npts, retained_count) matrix of orthonormal element values."""
        return self.raw.values(pts) @ self.coeffs.T

    def phi_deriv_values(self, pts, order: int) -> np.ndarray:
        return self.raw.deriv_values(pts, order) @ self.coeffs.T

    def phi_primitive_values(self, pts) -> np.ndarray:
        used = np.any(self.coeffs != 0, axis=0)
        for flag, e in zip(used, self.raw.elements):
            if flag and not e.has_power_primitive:
                raise PrimitiveUnavailableError(
                    f"{e!r} contributes to the basis but has no primitive; "
                    "apply reduced_filter first"
                )
        prim = np.zeros(np.shape(np.asarray(pts)) + (len(self.raw),), dtype=complex)
        idx = np.nonzero(used)[0]
        cols = np.stack(
            [self.raw.elements[i].primitive(np.asarray(pts, dtype=complex)) for i in idx],
            axis=-1,
        )
        prim[..., idx] = cols
        return prim @ self.coeffs.T

    def phi_function(self, k: int):
        """The k-th orthonormal element as a plain callable."""
        row = self.coeffs[k]

        def phi(z):
            return self.raw.values(z) @ row

        return phi


def orthonormalize(basis: RawBasis, rule: QuadratureRule, weight: WeightFn,
                   drop_tol: float = 1e-10) -> OrthonormalBasis:
    """Orthonormalize a raw basis in the discrete weighted inner product.

    Pivoted Cholesky on the diagonally-prescaled Gram matrix; elements
    whose scaled pivot falls below drop_tol times the largest are
    dropped as near-dependent.
    """
    if drop_tol <= 0:
        raise ValueError("drop_tol must be positive")
    g = gram_matrix(basis, rule, weight).entries
    d = np.real(np.diag(g)).copy()
    if np.any(d <= 0):
        raise DegenerateBasisError("Gram diagonal is not strictly positive")
    scale = np.sqrt(d)
    corr = g / np.outer(scale, scale)
    order, L, pivots = _pivoted_cholesky(corr, drop_tol)
    r = len(order)
    # phi = L^{-1} applied to the scaled, pivot-ordered raw elements
    rhs = np.zeros((r, len(basis)), dtype=complex)
    for k, j in enumerate(order):
        rhs[k, j] = 1.0 / scale[j]
    coeffs = np.linalg.solve(L, rhs)
    return OrthonormalBasis(
        raw=basis,
        coeffs=coeffs,
        retained_count=r,
        gram_condition=float(pivots[0] / pivots[-1]),
    )


class KernelEvaluator:
    """Evaluates the kernel of an orthonormal system and its
    anti-holomorphic derivatives.

    Immutable after construction; evaluation methods are pure and safe
    to call concurrently.
    """

    def __init__(self, onb: OrthonormalBasis, rule: QuadratureRule, weight: WeightFn):
        self.onb = onb
        self.rule = rule
        self.weight = weight
        self._node_phi = onb.phi_values(rule.nodes)
        self._node_nu = np.asarray(weight(rule.nodes), dtype=float)

    @property
    def domain(self):
        return self.rule.domain

    def eval_kernel(self, z, w) -> complex:
        """K(z, w) = sum_k phi_k(z) conj(phi_k(w)).  Exactly
        conjugate-symmetric: the arguments are put in a canonical order
        before summing, so swapping them conjugates the result bitwise."""
        z = complex(z)
        w = complex(w)
        if (w.real, w.imag) < (z.real, z.imag):
            return np.conj(self.eval_kernel(w, z))
        pz = self.onb.phi_values(np.asarray(z, dtype=complex))
        pw = self.onb.phi_values(np.asarray(w, dtype=complex))
        return complex(np.sum(pz * pw.conj(), axis=-1))

    def eval_kernel_grid(self, zs, ws) -> np.ndarray:
        """(len(zs), len(ws)) matrix of kernel values."""
        pz = self.onb.phi_values(np.atleast_1d(np.asarray(zs, dtype=complex)))
        pw = self.onb.phi_values(np.atleast_1d(np.asarray(ws, dtype=complex)))
        return pz @ pw.conj().T

    def eval_kernel_dbar(self, z, w, beta: int) -> complex:
        """beta-th derivative in conj(w): sum_k phi_k(z) conj(phi_k^(beta)(w)).
        Analytic differentiation of the conjugated factor."""
        if beta < 0:
            raise ValueError("derivative order must be >= 0")
        pz = self.onb.phi_values(np.asarray(z, dtype=complex))
        pw = self.onb.phi_deriv_values(np.asarray(w, dtype=complex), beta)
        return complex(np.sum(pz * pw.conj(), axis=-1))

    def diagonal(self, z) -> float:
        """K(z, z), always > 0 for points the basis sees."""
        p = self.onb.phi_values(np.asarray(z, dtype=complex))
        return float(np.sum(np.abs(p) ** 2, axis=-1))

    def reproduce(self, f_samples, zeta) -> complex:
        """Discrete reproducing integral
        sum_q w_q f(node_q) conj(K(node_q, zeta)) nu(node_q).

        Returns f(zeta) when f lies in the spanned space, the projection
        value otherwise.
        """
        pz = self.onb.phi_values(np.asarray(zeta, dtype=complex))
        k_nodes = self._node_phi @ pz.conj()
        return complex(np.sum(self.rule.weights * self._node_nu
                              * np.asarray(f_samples) * k_nodes.conj()))

    def self_reproduction_residual(self, z, zeta) -> float:
        """|K(z, zeta) - sum_q w_q K(node_q, zeta) conj(K(node_q, z)) nu_q|;
        an exact identity for the discrete orthonormal system."""
        k_direct = self.eval_kernel(z, zeta)
        kz = self._node_phi @ self.onb.phi_values(np.asarray(z, dtype=complex)).conj()
        kzeta = self._node_phi @ self.onb.phi_values(np.asarray(zeta, dtype=complex)).conj()
        k_int = np.sum(self.rule.weights * self._node_nu * kzeta * kz.conj())
        return abs(k_direct - complex(k_int))

    def kernel_primitive(self, xi, z) -> complex:
        """Kernel primitive M(z, xi) with M(xi, xi) = 0, so that
        dM/dz = K(z, xi).  Requires every contributing basis element to
        have a power-form primitive (use a reduced basis)."""
        pts = np.asarray([z, xi], dtype=complex)
        prim = self.onb.phi_primitive_values(pts)
        phi_xi = self.onb.phi_values(np.asarray(xi, dtype=complex))
        return complex((prim[0] - prim[1]) @ phi_xi.conj())

    def orthonormality_residual(self) -> float:
        """max |<phi_i, phi_j> - delta_ij| in the discrete inner product."""
        wq = self.rule.weights * self._node_nu
        g = (self._node_phi * wq[:, None]).conj().T @ self._node_phi
        return float(np.max(np.abs(g - np.eye(g.shape[0]))))
