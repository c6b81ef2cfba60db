"""Gram assembly, orthonormalization, kernel evaluation, kernel-primitive checks.

Expected values come from analytic norm integrals:
    disc:     ||z^n||^2 = pi/(n+1),  with weight |z|^2: pi/(n+2)
    annulus:  ||z^n||^2 = 2 pi (r2^(2n+2)-r1^(2n+2))/(2n+2),  ||1/z||^2 = 2 pi ln(r2/r1)
and from the closed forms in redbergman.oracles.
"""

import math

import numpy as np
import pytest

from redbergman import (
    ConstantWeight,
    GenericDomain,
    KernelEvaluator,
    PowerWeight,
    build_annulus_quadrature,
    build_disc_quadrature,
    build_generic_quadrature,
    gram_matrix,
    laurent_basis,
    monomial_basis,
    orthonormalize,
    reduced_filter,
)
from redbergman.errors import EvaluationError, PrimitiveUnavailableError
from redbergman.holobasis import BasisElement, RawBasis
from redbergman.oracles import annulus_kernel, disc_kernel, disc_power_weight_kernel

ONE = ConstantWeight()


def disc_evaluator(degree=40, n_radial=40, n_angular=160, weight=ONE):
    rule = build_disc_quadrature(0.0, 1.0, n_radial, n_angular)
    basis = monomial_basis(0.0, degree, rule.domain)
    return KernelEvaluator(orthonormalize(basis, rule, weight), rule, weight)


def annulus_evaluator(r=0.5, n_min=-20, n_max=20, n_radial=48, n_angular=96,
                      reduced=True):
    rule = build_annulus_quadrature(0.0, r, 1.0, n_radial, n_angular)
    basis = laurent_basis(0.0, n_min, n_max, rule.domain)
    if reduced:
        basis = reduced_filter(basis)
    return KernelEvaluator(orthonormalize(basis, rule, ONE), rule, ONE)


def test_gram_disc_monomials_unweighted():
    rule = build_disc_quadrature(0.0, 1.0, 20, 40)
    g = gram_matrix(monomial_basis(0.0, 1, rule.domain), rule, ONE).entries
    assert g[0, 0] == pytest.approx(math.pi, rel=1e-12)
    assert g[1, 1] == pytest.approx(math.pi / 2.0, rel=1e-12)
    assert abs(g[0, 1]) < 1e-13


def test_gram_annulus_inverse_norm():
    rule = build_annulus_quadrature(0.0, 0.5, 1.0, 32, 64)
    basis = laurent_basis(0.0, -1, -1, rule.domain)
    g = gram_matrix(basis, rule, ONE).entries
    assert g[0, 0] == pytest.approx(2.0 * math.pi * math.log(2.0), rel=1e-10)


def test_gram_disc_weighted():
    rule = build_disc_quadrature(0.0, 1.0, 20, 40)
    g = gram_matrix(monomial_basis(0.0, 1, rule.domain), rule, PowerWeight(1.0)).entries
    assert g[0, 0] == pytest.approx(math.pi / 2.0, rel=1e-12)
    assert g[1, 1] == pytest.approx(math.pi / 3.0, rel=1e-12)


def test_gram_nonfinite_value_reports_element_and_node():
    dom = GenericDomain(inside=lambda z: True, bbox=(0.0, 1.0, 0.0, 1.0))
    rule = build_generic_quadrature(dom, 10)
    bad = RawBasis((BasisElement(-1, rule.nodes[0]),), dom)
    with pytest.raises(EvaluationError):
        gram_matrix(bad, rule, ONE)


def test_orthonormalize_disc_coefficients():
    rule = build_disc_quadrature(0.0, 1.0, 20, 40)
    onb = orthonormalize(monomial_basis(0.0, 12, rule.domain), rule, ONE)
    assert onb.retained_count == 13
    for n in range(13):
        expect = np.zeros(13)
        expect[n] = math.sqrt((n + 1) / math.pi)
        assert np.max(np.abs(onb.coeffs[n] - expect)) < 1e-8


def test_orthonormalize_drops_dependent_element():
    # (z-0)^0 and (z-1)^0 are distinct keys but the same constant
    rule = build_disc_quadrature(0.0, 1.0, 10, 20)
    basis = RawBasis((BasisElement(0, 0.0), BasisElement(0, 1.0),
                      BasisElement(1, 0.0)), rule.domain)
    onb = orthonormalize(basis, rule, ONE)
    assert onb.retained_count == 2


def test_orthonormalize_annulus_reduced_no_drop():
    ev = annulus_evaluator()
    assert ev.onb.retained_count == 40     # 41 Laurent powers minus z^-1
    assert ev.orthonormality_residual() < 1e-8


def test_eval_kernel_disc_against_closed_form():
    ev = disc_evaluator()
    assert ev.eval_kernel(0.0, 0.0) == pytest.approx(1.0 / math.pi, abs=1e-8)
    assert ev.eval_kernel(0.5, 0.5) == pytest.approx(1.0 / (math.pi * 0.5625), abs=1e-6)
    rng = np.random.default_rng(3)
    pts = 0.7 * np.sqrt(rng.random(20)) * np.exp(2j * np.pi * rng.random(20))
    got = ev.eval_kernel_grid(pts, pts)
    want = disc_kernel(pts[:, None], pts[None, :])
    assert np.max(np.abs(got - want) / np.abs(want)) < 1e-6


def test_eval_kernel_weighted_disc():
    ev = disc_evaluator(weight=PowerWeight(1.0))
    assert ev.eval_kernel(0.0, 0.0) == pytest.approx(2.0 / math.pi, abs=1e-6)
    z, w = 0.4 + 0.1j, -0.2 + 0.3j
    assert ev.eval_kernel(z, w) == pytest.approx(
        complex(disc_power_weight_kernel(z, w, 1.0)), abs=1e-6)


def test_eval_kernel_dbar():
    ev = disc_evaluator()
    z, w = 0.3 - 0.2j, 0.1 + 0.4j
    assert ev.eval_kernel_dbar(z, w, 0) == ev.eval_kernel(z, w)
    for zz in (0.7, -0.5 + 0.3j, 0.1j):
        assert ev.eval_kernel_dbar(zz, 0.0, 1) == pytest.approx(2.0 * zz / math.pi, abs=1e-6)
        # second conjugate-slot derivative of the series at w = 0: 6 z^2 / pi
        assert ev.eval_kernel_dbar(zz, 0.0, 2) == pytest.approx(6.0 * zz**2 / math.pi,
                                                                abs=1e-6)
    # Hermitian-derivative consistency against first-slot finite differences
    h = 1e-5
    fd = (ev.eval_kernel(w + h, z) - ev.eval_kernel(w - h, z)) / (2 * h)
    exact = ev.eval_kernel_dbar(z, w, 1)
    assert abs(np.conj(fd) - exact) / abs(exact) < 1e-5


def test_annulus_kernel_against_series_oracle():
    ev = annulus_evaluator()
    radii = np.linspace(0.55, 0.95, 5)
    pts = (radii[:, None] * np.exp(2j * np.pi * np.arange(6) / 6)[None, :]).ravel()
    got = ev.eval_kernel_grid(pts, pts)
    want = annulus_kernel(pts[:, None], pts[None, :], 0.5, 1.0, -20, 20)
    assert np.max(np.abs(got - want) / np.abs(want)) < 1e-5


def test_annulus_full_minus_reduced_is_residue_term():
    full = annulus_evaluator(reduced=False)
    red = annulus_evaluator()
    z, w = 0.7, 0.6 + 0.45j
    diff = full.eval_kernel(z, w) - red.eval_kernel(z, w)
    expect = 1.0 / (z * np.conj(w)) / (2.0 * math.pi * math.log(2.0))
    assert abs(diff - expect) / abs(expect) < 1e-5


def test_reproduce_on_basis_element_and_constant():
    ev = disc_evaluator(degree=10, n_radial=24, n_angular=48)
    nodes = ev.rule.nodes
    phi3 = ev.onb.phi_function(3)
    assert ev.reproduce(phi3(nodes), 0.4) == pytest.approx(complex(phi3(np.asarray(0.4))),
                                                           abs=1e-6)
    zeta = 0.2 + 0.1j
    assert ev.reproduce(np.ones(len(nodes)), zeta) == pytest.approx(1.0, abs=1e-6)


def test_reproduce_outside_reduced_space_gives_projection():
    ev = annulus_evaluator()
    nodes = ev.rule.nodes
    zeta = 0.7
    val = ev.reproduce(1.0 / nodes, zeta)
    # z^-1 is orthogonal to every retained power, so the projection vanishes
    assert abs(val) < 1e-6
    assert abs(val - 1.0 / zeta) > 0.1


def test_self_reproduction_residuals():
    assert disc_evaluator().self_reproduction_residual(0.3, 0.5) < 1e-8
    assert annulus_evaluator().self_reproduction_residual(0.7, 0.6) < 1e-8
    wev = disc_evaluator(weight=PowerWeight(1.0))
    assert wev.self_reproduction_residual(0.2, 0.4j) < 1e-8


def test_conjugate_symmetry_and_positivity():
    ev = disc_evaluator(degree=15, n_radial=24, n_angular=64)
    rng = np.random.default_rng(11)
    pts = 0.9 * np.sqrt(rng.random(15)) * np.exp(2j * np.pi * rng.random(15))
    for z in pts[:5]:
        for w in pts[5:10]:
            assert ev.eval_kernel(z, w) == np.conj(ev.eval_kernel(w, z))
    for z in pts:
        assert ev.diagonal(z) > 0


def test_truncation_monotonicity_on_diagonal():
    rule = build_disc_quadrature(0.0, 1.0, 30, 80)
    zeta = 0.65 + 0.1j
    prev = 0.0
    for degree in (5, 10, 20, 30):
        onb = orthonormalize(monomial_basis(0.0, degree, rule.domain), rule, ONE)
        val = KernelEvaluator(onb, rule, ONE).diagonal(zeta)
        assert val >= prev - 1e-12
        prev = val


def test_kernel_primitive_checks():
    ev = disc_evaluator(degree=20, n_radial=30, n_angular=80)
    xi = 0.3
    assert ev.kernel_primitive(xi, xi) == 0.0
    # dM/dz recovers the kernel (finite differences in z)
    h = 1e-5
    for z in (0.5, -0.2 + 0.4j):
        fd = (ev.kernel_primitive(xi, z + h) - ev.kernel_primitive(xi, z - h)) / (2 * h)
        assert abs(fd - ev.eval_kernel(z, xi)) / abs(ev.eval_kernel(z, xi)) < 1e-6
    # Dirichlet pairing <f, M(., xi)> = int f' conj(K(., xi)) dA = f'(xi) for f = z^2
    pairing = ev.reproduce(2.0 * ev.rule.nodes, xi)
    assert pairing == pytest.approx(2.0 * xi, abs=1e-5)


def test_kernel_primitive_requires_reduced_basis():
    ev = annulus_evaluator(reduced=False)
    with pytest.raises(PrimitiveUnavailableError):
        ev.kernel_primitive(0.7, 0.6)


def test_kernel_primitive_on_reduced_annulus():
    ev = annulus_evaluator()
    xi, z = 0.75, 0.6 + 0.3j
    h = 1e-5
    fd = (ev.kernel_primitive(xi, z + h) - ev.kernel_primitive(xi, z - h)) / (2 * h)
    assert abs(fd - ev.eval_kernel(z, xi)) / abs(ev.eval_kernel(z, xi)) < 1e-6


def test_generic_domain_kernel_invariants():
    # predicate-defined unit square: discrete identities still hold even
    # though the rule is only first-order accurate
    dom = GenericDomain(inside=lambda z: (0 < z.real < 1) and (0 < z.imag < 1),
                        bbox=(0.0, 1.0, 0.0, 1.0))
    rule = build_generic_quadrature(dom, 24)
    onb = orthonormalize(monomial_basis(0.5 + 0.5j, 6, dom), rule, ONE)
    ev = KernelEvaluator(onb, rule, ONE)
    zeta = 0.4 + 0.6j
    assert abs(ev.reproduce(np.ones(len(rule)), zeta) - 1.0) < 1e-10
    assert ev.self_reproduction_residual(0.3 + 0.3j, 0.7 + 0.2j) < 1e-10
    assert ev.diagonal(zeta) > 0
    a, b = 0.2 + 0.7j, 0.8 + 0.1j
    assert ev.eval_kernel(a, b) == np.conj(ev.eval_kernel(b, a))


def test_evaluator_thread_safety():
    from concurrent.futures import ThreadPoolExecutor

    ev = disc_evaluator_shared()
    grid = np.linspace(-0.6, 0.6, 40) + 0.1j

    def work(_):
        return ev.eval_kernel_grid(grid, grid)

    with ThreadPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(work, range(8)))
    for r in results[1:]:
        assert np.array_equal(r, results[0])


def disc_evaluator_shared():
    return disc_evaluator(degree=20, n_radial=24, n_angular=64)
