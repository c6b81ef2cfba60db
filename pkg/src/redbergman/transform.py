"""Push-pull operators and transformation-formula verification.

The two operator families are the derivative-weighted branch sums
    gamma1(u)(z) = sum_i f_i'(z) u(f_i(z)),   gamma2(v)(w) = sum_j F_j'(w) v(F_j(w))
for correspondences, and
    lambda1(u)(z) = f'(z) u(f(z)),            lambda2(v)(w) = sum_k F_k'(w) v(F_k(w))
for proper maps.  They are adjoint between the two domains' weighted
inner products, and the kernels transform through them; the verify_*
sweeps measure the residual of those exact identities over sample
grids, where all remaining error is discretization.

Branch sums are evaluated away from the singular sets (critical values,
discriminant loci); excluded samples are counted, never silently
dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BranchCountError, NearCriticalError, SingularLocusError
from .holobasis import WeightFn
from .kernel import KernelEvaluator
from .propermaps import CorrespondenceModel, ProperMap

__all__ = [
    "TransformReport",
    "MapRecovery",
    "gamma1",
    "gamma2",
    "lambda1",
    "lambda2",
    "branch_table",
    "adjoint_residual",
    "adjoint_residual_matrix",
    "operator_bound_check",
    "verify_proper",
    "verify_correspondence",
    "verify_weighted",
    "recover_map",
    "antiholomorphic_residual",
]

GRID_EXCLUSION = 1e-6
REL_FLOOR = 1e-300
ABS_FALLBACK_SCALE = 1e-10


@dataclass(frozen=True)
class TransformReport:
    """Residual statistics of one verification sweep.

    ``max_rel_residual`` normalizes each sample by |LHS| but falls back
    to the absolute residual where |LHS| < 1e-10 (identity checks near
    kernel zeros would otherwise divide noise by noise).
    """

    n_samples: int
    excluded: int
    max_abs_residual: float
    max_rel_residual: float
    lhs_scale: float
    config: dict = field(default_factory=dict)

    def summary_lines(self):
        yield f"n_samples = {self.n_samples}"
        yield f"excluded = {self.excluded}"
        yield f"max_abs_residual = {self.max_abs_residual:.17g}"
        yield f"max_rel_residual = {self.max_rel_residual:.17g}"
        yield f"lhs_scale = {self.lhs_scale:.17g}"


def _make_report(lhs: np.ndarray, rhs: np.ndarray, excluded: int, n_samples: int,
                 config: dict | None) -> TransformReport:
    absres = np.abs(lhs - rhs)
    lhs_mag = np.abs(lhs)
    rel = np.where(lhs_mag >= ABS_FALLBACK_SCALE,
                   absres / np.maximum(lhs_mag, REL_FLOOR), absres)
    return TransformReport(
        n_samples=n_samples,
        excluded=excluded,
        max_abs_residual=float(np.max(absres)) if absres.size else 0.0,
        max_rel_residual=float(np.max(rel)) if rel.size else 0.0,
        lhs_scale=float(np.max(lhs_mag)) if lhs_mag.size else 0.0,
        config=dict(config or {}),
    )


# ---------------------------------------------------------------------------
# operators

def gamma1(corr: CorrespondenceModel, u, z) -> complex:
    """Forward pull sum_i f_i'(z) u(f_i(z))."""
    b = corr.forward_branches(z)
    return complex(np.sum(b.derivatives * u(b.points)))


def gamma2(corr: CorrespondenceModel, v, w) -> complex:
    """Backward pull sum_j F_j'(w) v(F_j(w))."""
    b = corr.backward_branches(w)
    return complex(np.sum(b.derivatives * v(b.points)))


def lambda1(f: ProperMap, u, z) -> complex:
    """f'(z) * u(f(z))."""
    return complex(f.deriv(z) * u(f(z)))


def lambda2(f: ProperMap, v, w) -> complex:
    """sum_k F_k'(w) v(F_k(w)) over the local inverses of f."""
    b = f.local_inverses(w)
    return complex(np.sum(b.derivatives * v(b.points)))


def branch_table(model, points, forward: bool):
    """Branch points and derivatives over many query points at once.

    Returns (pts, der) of shape (len(points), k) where k is the branch
    count; the solve is done once so several functions can be summed
    over the same branches.  For proper maps the forward direction is
    the single branch (f, f').
    """
    points = np.asarray(points, dtype=complex)
    if not isinstance(model, CorrespondenceModel) and forward:
        return model(points)[:, None], model.deriv(points)[:, None]
    pts_rows = []
    der_rows = []
    for x in points:
        if isinstance(model, CorrespondenceModel):
            b = model.forward_branches(x) if forward else model.backward_branches(x)
        else:
            b = model.local_inverses(x)
        pts_rows.append(b.points)
        der_rows.append(b.derivatives)
    return np.asarray(pts_rows), np.asarray(der_rows)


def _branch_sum(func, pts, der) -> np.ndarray:
    return np.einsum("nk,nk->n", der, func(pts))


def adjoint_residual_matrix(model, us, vs, rule1, rule2,
                            weight: WeightFn | None = None) -> np.ndarray:
    """Residuals |<op1 u, v>_1 - <u, op2 v>_2| for all (u, v) pairs.

    For correspondences the operators are gamma1/gamma2 and the inner
    products are unweighted.  For proper maps they are lambda1/lambda2
    with <.,.>_{nu o f} on the source and <.,.>_nu on the target; pass
    ``weight`` as nu (None means nu = 1).  Branch solving is shared
    across all functions.
    """
    fpts, fder = branch_table(model, rule1.nodes, forward=True)
    bpts, bder = branch_table(model, rule2.nodes, forward=False)
    if isinstance(model, CorrespondenceModel) or weight is None:
        nu1 = np.ones(len(rule1))
        nu2 = np.ones(len(rule2))
    else:
        nu1 = np.asarray(weight(model(rule1.nodes)), dtype=float)
        nu2 = np.asarray(weight(rule2.nodes), dtype=float)
    op1u = np.stack([_branch_sum(u, fpts, fder) for u in us])       # (nu, n1)
    op2v = np.stack([_branch_sum(v, bpts, bder) for v in vs])       # (nv, n2)
    v1 = np.stack([np.asarray(v(rule1.nodes)) for v in vs])         # (nv, n1)
    u2 = np.stack([np.asarray(u(rule2.nodes)) for u in us])         # (nu, n2)
    lhs = (op1u * (rule1.weights * nu1)) @ v1.conj().T              # (nu, nv)
    rhs = (u2 * (rule2.weights * nu2)) @ op2v.conj().T
    return np.abs(lhs - rhs)


def adjoint_residual(model, u, v, rule1, rule2, weight: WeightFn | None = None) -> float:
    """|<op1 u, v>_1 - <u, op2 v>_2| for one function pair."""
    return float(adjoint_residual_matrix(model, [u], [v], rule1, rule2, weight)[0, 0])


def operator_bound_check(corr: CorrespondenceModel, v, rule1, rule2):
    """Both sides of <gamma2 v, gamma2 v>_2 <= p*q*<v, v>_1 by
    quadrature; the caller asserts lhs <= rhs*(1 + 1e-6)."""
    bpts, bder = branch_table(corr, rule2.nodes, forward=False)
    g2v = _branch_sum(v, bpts, bder)
    lhs = float(np.sum(rule2.weights * np.abs(g2v) ** 2))
    rhs = corr.p * corr.q * float(np.sum(rule1.weights * np.abs(v(rule1.nodes)) ** 2))
    return lhs, rhs


# ---------------------------------------------------------------------------
# transformation-formula sweeps

def _keep_away(points: np.ndarray, bad: np.ndarray, radius: float) -> np.ndarray:
    if bad.size == 0:
        return np.ones(len(points), dtype=bool)
    return np.min(np.abs(points[:, None] - bad[None, :]), axis=1) > radius


def _map_sweep(f: ProperMap, ev1: KernelEvaluator, ev2: KernelEvaluator,
               z_grid, w_grid, exclusion: float, config: dict | None) -> TransformReport:
    zs = np.asarray(z_grid, dtype=complex)
    ws = np.asarray(w_grid, dtype=complex)
    total = len(zs) * len(ws)
    crit = f.critical_values()
    ws = ws[_keep_away(ws, crit, exclusion)]

    fz = f(zs)
    fpz = f.deriv(zs)

    branch_pts = []
    branch_der = []
    kept_w = []
    for w in ws:
        try:
            b = f.local_inverses(w)
        except (NearCriticalError, BranchCountError):
            continue
        branch_pts.append(b.points)
        branch_der.append(b.derivatives)
        kept_w.append(w)
    if not kept_w:
        return _make_report(np.empty(0), np.empty(0), total, total, config)
    ws = np.asarray(kept_w)
    pts = np.asarray(branch_pts)      # (nw, m)
    der = np.asarray(branch_der)      # (nw, m)

    lhs = fpz[:, None] * ev2.eval_kernel_grid(fz, ws)
    k1 = ev1.eval_kernel_grid(zs, pts.ravel()).reshape(len(zs), len(ws), -1)
    rhs = np.einsum("zwm,wm->zw", k1, der.conj())
    excluded = total - len(zs) * len(ws)
    return _make_report(lhs, rhs, excluded, total, config)


def verify_proper(f: ProperMap, ev1: KernelEvaluator, ev2: KernelEvaluator,
                  z_grid, w_grid, exclusion: float = GRID_EXCLUSION,
                  config: dict | None = None) -> TransformReport:
    """Residuals of f'(z) K2(f(z), w) = sum_k K1(z, F_k(w)) conj(F_k'(w))
    over the grid product; ev1 lives on the source, ev2 on the target."""
    return _map_sweep(f, ev1, ev2, z_grid, w_grid, exclusion, config)


def verify_weighted(f: ProperMap, weight: WeightFn, ev1: KernelEvaluator,
                    ev2: KernelEvaluator, z_grid, w_grid,
                    exclusion: float = GRID_EXCLUSION,
                    config: dict | None = None) -> TransformReport:
    """Weighted version of verify_proper: ev1 must carry the pulled-back
    weight nu o f and ev2 the weight nu.  Shares the sweep with
    verify_proper, so nu = 1 reproduces it bit for bit."""
    nu2 = np.asarray(weight(ev2.rule.nodes), dtype=float)
    if not np.all(nu2 > 0):
        raise ValueError("weight must be positive on the target rule nodes")
    return _map_sweep(f, ev1, ev2, z_grid, w_grid, exclusion, config)


def verify_correspondence(corr: CorrespondenceModel, ev1: KernelEvaluator,
                          ev2: KernelEvaluator, z_grid, w_grid,
                          exclusion: float = GRID_EXCLUSION,
                          config: dict | None = None) -> TransformReport:
    """Residuals of sum_i f_i'(z) K2(f_i(z), w) = sum_j K1(z, F_j(w)) conj(F_j'(w))."""
    zs = np.asarray(z_grid, dtype=complex)
    ws = np.asarray(w_grid, dtype=complex)
    total = len(zs) * len(ws)
    zs = zs[_keep_away(zs, corr.v1, exclusion)]
    ws = ws[_keep_away(ws, corr.v2, exclusion)]

    fwd_pts, fwd_der, kept_z = [], [], []
    for z in zs:
        try:
            b = corr.forward_branches(z)
        except (SingularLocusError, BranchCountError):
            continue
        fwd_pts.append(b.points)
        fwd_der.append(b.derivatives)
        kept_z.append(z)
    bwd_pts, bwd_der, kept_w = [], [], []
    for w in ws:
        try:
            b = corr.backward_branches(w)
        except (SingularLocusError, BranchCountError):
            continue
        bwd_pts.append(b.points)
        bwd_der.append(b.derivatives)
        kept_w.append(w)
    if not kept_z or not kept_w:
        return _make_report(np.empty(0), np.empty(0), total, total, config)

    zs = np.asarray(kept_z)
    ws = np.asarray(kept_w)
    fp = np.asarray(fwd_pts)          # (nz, p)
    fd = np.asarray(fwd_der)
    bp = np.asarray(bwd_pts)          # (nw, q)
    bd = np.asarray(bwd_der)

    k2 = ev2.eval_kernel_grid(fp.ravel(), ws).reshape(len(zs), -1, len(ws))
    lhs = np.einsum("zp,zpw->zw", fd, k2)
    k1 = ev1.eval_kernel_grid(zs, bp.ravel()).reshape(len(zs), len(ws), -1)
    rhs = np.einsum("zwq,wq->zw", k1, bd.conj())
    excluded = total - len(zs) * len(ws)
    return _make_report(lhs, rhs, excluded, total, config)


# ---------------------------------------------------------------------------
# map recovery

@dataclass(frozen=True)
class MapRecovery:
    """Per-point output of the kernel-ratio map recovery.

    ``ratio_half`` is g1/(2*g0), the raw half-ratio of the
    differentiated and plain branch sums at the probe.  With probe 0 it
    equals the map itself; at a shifted probe w0 the identity becomes
    ratio_half = f/(1 - f*conj(w0)), and ``map_estimate`` inverts that.
    Samples with |g0| below the degeneracy floor are masked out and
    counted in ``excluded``.
    """

    points: np.ndarray
    g0: np.ndarray
    g1: np.ndarray
    ratio_half: np.ndarray
    map_estimate: np.ndarray
    probe: complex
    probe_shifted: bool
    valid: np.ndarray
    excluded: int


def recover_map(f: ProperMap, ev: KernelEvaluator, z_grid, probe=0.0,
                fallback_probe=0.1, stencil_radius: float = 1e-4) -> MapRecovery:
    """Recover f from the source kernel via the transformation formula.

    Evaluates g0(z) = sum_k K(z, F_k(w0)) conj(F_k'(w0)) and the
    derivative g1 = d/d(conj(w)) of that branch sum at w0 (4-point
    complex stencil), then forms g1/(2*g0).  The target must be the
    unit disc.  If the probe hits a critical value it moves to
    fallback_probe.
    """
    zs = np.asarray(z_grid, dtype=complex)
    crit = f.critical_values()
    w0 = complex(probe)
    shifted = False
    if crit.size and np.min(np.abs(crit - w0)) <= GRID_EXCLUSION:
        w0 = complex(fallback_probe)
        shifted = True
        if crit.size and np.min(np.abs(crit - w0)) <= GRID_EXCLUSION:
            raise NearCriticalError(
                f"both probe {probe} and fallback {fallback_probe} sit near critical values"
            )

    def rhs(w):
        b = f.local_inverses(w)
        return ev.eval_kernel_grid(zs, b.points) @ b.derivatives.conj()

    h = stencil_radius
    g0 = rhs(w0)
    dx = (rhs(w0 + h) - rhs(w0 - h)) / (2.0 * h)
    dy = (rhs(w0 + 1j * h) - rhs(w0 - 1j * h)) / (2.0 * h)
    g1 = 0.5 * (dx + 1j * dy)

    valid = np.abs(g0) >= 1e-12
    ratio = np.full(zs.shape, np.nan + 0j)
    ratio[valid] = g1[valid] / (2.0 * g0[valid])
    estimate = ratio.copy()
    if w0 != 0:
        estimate[valid] = ratio[valid] / (1.0 + ratio[valid] * np.conj(w0))
    return MapRecovery(
        points=zs, g0=g0, g1=g1, ratio_half=ratio, map_estimate=estimate,
        probe=w0, probe_shifted=shifted, valid=valid,
        excluded=int(np.sum(~valid)),
    )


def antiholomorphic_residual(fun, w, h: float = 1e-4):
    """(|d/dw fun|, |d/d(conj w) fun|) at w by 4-point complex stencils.

    Anti-holomorphic functions of w have vanishing first component; the
    second provides the comparison scale.
    """
    fx = (fun(w + h) - fun(w - h)) / (2.0 * h)
    fy = (fun(w + 1j * h) - fun(w - 1j * h)) / (2.0 * h)
    d_w = 0.5 * (fx - 1j * fy)
    d_wbar = 0.5 * (fx + 1j * fy)
    return abs(d_w), abs(d_wbar)
