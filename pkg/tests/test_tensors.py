import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypmass.models import DomainSpec, StaticPotential, convert_coords, hyperboloid_lift
from hypmass.tensors import (CriticalPointError, DegenerateMetricError, ScalarField, add_fields,
                             boundary_static_residual, christoffel, covariant_hessian, curvature,
                             domain_boundary_geometry, einstein_divergence, equidistant_induced_metric,
                             fd_first, fd_first_extrapolated, fd_second, fd_second_extrapolated, flat_metric,
                             hyperbolic_metric, hypersurface_geometry, induced_scalar_curvature,
                             lie_derivative_metric, metric_compatibility_residual, riemann_symmetry_residual,
                             sectional_curvature_residual, static_residual, tensor_field)

from .helpers import random_ball_points

CHARTS = ("ball", "halfspace", "hyperboloid")


def chart_points(rng, count, n, chart, radius=0.8):
    p = convert_coords(random_ball_points(rng, count, n, radius), "ball", chart)
    return p[:, 1:] if chart == "hyperboloid" else p


def bump_metric(n, eps=0.05, center=None):
    """Ball metric plus a smooth anisotropic Gaussian bump (derivatives by differences)."""
    rng = np.random.default_rng(11)
    S = rng.normal(size=(n, n))
    S = S + S.T
    c = np.zeros(n) if center is None else np.asarray(center)
    b = hyperbolic_metric(n, "ball")

    def e(p):
        w = np.exp(-np.sum((p - c) ** 2, axis=-1) / 0.18)
        return eps * w[..., None, None] * S

    return add_fields(b, tensor_field(n, e, "ball"))


def test_fd_stencils_on_polynomials():
    p = np.array([[0.3, -0.2]])

    def f(q):
        return q[..., 0] ** 3 * q[..., 1] + 2.0 * q[..., 1] ** 2

    exact_grad = np.array([[3 * 0.09 * -0.2, 0.027 + 4 * -0.2]])
    exact_hess = np.array([[[6 * 0.3 * -0.2, 3 * 0.09], [3 * 0.09, 4.0]]])
    assert np.max(np.abs(fd_first(f, p) - exact_grad)) < 1e-7
    assert np.max(np.abs(fd_first_extrapolated(f, p) - exact_grad)) < 1e-10
    assert np.max(np.abs(fd_second(f, p) - exact_hess)) < 1e-5
    assert np.max(np.abs(fd_second_extrapolated(f, p) - exact_hess)) < 1e-7


def test_christoffel_examples():
    p = np.array([[0.2, 0.4, -0.1]])
    assert np.max(np.abs(christoffel(flat_metric(3), p))) == 0.0
    gam = christoffel(hyperbolic_metric(3, "halfspace"), np.array([[1.0, 0.0, 0.0]]))
    assert gam[0, 0, 0, 0] == pytest.approx(-1.0, abs=1e-15)
    assert np.max(np.abs(christoffel(hyperbolic_metric(3, "ball"), np.zeros((1, 3))))) < 1e-15


@pytest.mark.parametrize("chart", CHARTS)
def test_christoffel_symmetric_and_compatible(chart):
    p = chart_points(np.random.default_rng(1), 100, 4, chart)
    gam = christoffel(hyperbolic_metric(4, chart), p)
    assert np.max(np.abs(gam - np.swapaxes(gam, -1, -2))) < 1e-14
    assert metric_compatibility_residual(hyperbolic_metric(4, chart), p) < 1e-9
    assert metric_compatibility_residual(hyperbolic_metric(4, chart).with_fd(), p) < 1e-5


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("chart", CHARTS)
def test_model_curvature(n, chart):
    p = chart_points(np.random.default_rng(n), 100, n, chart)
    g = hyperbolic_metric(n, chart)
    cd = curvature(g, p)
    assert np.max(np.abs(cd.scalar + n * (n - 1))) < 1e-9
    assert sectional_curvature_residual(g, p) < 1e-9
    assert riemann_symmetry_residual(cd) < 1e-9
    # the plain stencil loses accuracy where the ball factor blows up, so the FD tier samples |y| <= 0.5
    q = chart_points(np.random.default_rng(n), 100, n, chart, 0.5)
    fd = curvature(g.with_fd(), q)
    assert np.max(np.abs(fd.scalar + n * (n - 1))) < 1e-3
    assert riemann_symmetry_residual(fd) < 1e-5


def test_flat_curvature_vanishes():
    cd = curvature(flat_metric(3), np.random.default_rng(0).normal(size=(5, 3)))
    assert np.max(np.abs(cd.riemann)) == 0.0


def _oracle_scalar(g_fn, p, h=2e-3):
    """Scalar curvature from Gamma (fourth-order stencil) and differences of Gamma."""
    n = p.shape[-1]

    def dg4(q):
        out = []
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            out.append((-g_fn(q + 2 * e) + 8 * g_fn(q + e) - 8 * g_fn(q - e) + g_fn(q - 2 * e)) / (12 * h))
        return np.stack(out, axis=-3)

    def gamma(q):
        g = g_fn(q)
        d = dg4(q)
        ginv = np.linalg.inv(g)
        low = 0.5 * (np.einsum("...ijl->...lij", d) + np.einsum("...jil->...lij", d) - d)
        return np.einsum("...kl,...lij->...kij", ginv, low)

    G = gamma(p)
    dG = []
    for m in range(n):
        e = np.zeros(n)
        e[m] = h
        dG.append((-gamma(p + 2 * e) + 8 * gamma(p + e) - 8 * gamma(p - e) + gamma(p - 2 * e)) / (12 * h))
    dG = np.stack(dG, axis=-4)  # [m, k, i, j] = d_m Gamma^k_ij
    ric = (np.einsum("...kkij->...ij", dG) - np.einsum("...jkik->...ij", dG)
           + np.einsum("...kkl,...lij->...ij", G, G) - np.einsum("...kjl,...lik->...ij", G, G))
    return np.einsum("...ij,...ij->...", np.linalg.inv(g_fn(p)), ric)


def test_perturbed_scalar_curvature_matches_dense_stencil_oracle():
    n = 3
    g = bump_metric(n)
    p = random_ball_points(np.random.default_rng(5), 10, n, 0.5)
    ours = curvature(g, p).scalar
    oracle = np.array([_oracle_scalar(g.g, q) for q in p])
    assert np.max(np.abs(ours - oracle)) < 1e-4
    # the bump is large enough to matter
    assert np.max(np.abs(ours + n * (n - 1))) > 1e-2


def test_contracted_bianchi_finite_difference_tier():
    g = bump_metric(3)
    p = random_ball_points(np.random.default_rng(6), 10, 3, 0.4)
    assert np.max(np.abs(einstein_divergence(g, p, 1e-3))) < 1e-3


def test_degenerate_metric_rejected():
    g = tensor_field(2, lambda p: np.broadcast_to(np.diag([1.0, -1.0]), p.shape[:-1] + (2, 2)))
    with pytest.raises(DegenerateMetricError):
        curvature(g, np.zeros((1, 2)))


@pytest.mark.parametrize("n", [3, 4])
@pytest.mark.parametrize("s", [-2.0, -1.0, 0.0, 1.0, 2.0])
def test_equidistant_geometry(n, s):
    rng = np.random.default_rng(7)
    b = hyperbolic_metric(n, "hyperboloid")
    dom = DomainSpec.equidistant(s)
    w = rng.normal(size=(50, n - 1)) * 2
    p = np.concatenate([np.full((50, 1), s), w], axis=1)
    geo = domain_boundary_geometry(b, dom, p)
    lam = s / math.sqrt(1 + s * s)
    assert np.max(np.abs(geo.second_form - lam * geo.induced_metric)) < 1e-6
    assert np.max(np.abs(geo.mean_curvature - (n - 1) * lam)) < 1e-6
    assert np.max(np.abs(np.einsum("pi,pij,pj->p", geo.normal, b.g(p), geo.normal) - 1)) < 1e-10
    assert np.max(np.abs(geo.second_form - np.swapaxes(geo.second_form, -1, -2))) < 1e-12
    for i in [0] + list(range(2, n + 1)):
        _, rob = boundary_static_residual(StaticPotential.basis(i, n), b, lam, p, StaticPotential.basis(1, n), s)
        assert np.max(np.abs(rob)) < 1e-6
    _, rob = boundary_static_residual(StaticPotential.basis(1, n), b, lam, p, StaticPotential.basis(1, n), s)
    assert np.max(np.abs(rob - 1 / math.sqrt(1 + s * s))) < 1e-10


def test_totally_geodesic_and_s_equal_one():
    n = 3
    b = hyperbolic_metric(n, "hyperboloid")
    p = np.array([[0.0, 0.3, -0.7]])
    assert np.max(np.abs(domain_boundary_geometry(b, DomainSpec.equidistant(0.0), p).second_form)) < 1e-14
    p = np.array([[1.0, 0.3, -0.7]])
    geo = domain_boundary_geometry(b, DomainSpec.equidistant(1.0), p)
    assert np.max(np.abs(geo.second_form - geo.induced_metric / math.sqrt(2))) < 1e-12
    assert geo.mean_curvature[0] == pytest.approx((n - 1) / math.sqrt(2), rel=1e-12)


@pytest.mark.parametrize("chi", [0.5, 1.0, 2.0])
def test_horosphere_geometry(chi):
    n = 4
    b = hyperbolic_metric(n, "halfspace")
    rng = np.random.default_rng(8)
    p = np.concatenate([np.full((50, 1), 1 / chi), rng.normal(size=(50, n - 1))], axis=1)
    geo = domain_boundary_geometry(b, DomainSpec.horoball(chi), p)
    assert np.max(np.abs(geo.second_form - geo.induced_metric)) < 1e-9
    assert np.max(np.abs(geo.mean_curvature - (n - 1))) < 1e-9
    _, rob = boundary_static_residual(StaticPotential.horospherical(n), b, 1.0, p, StaticPotential.horospherical(n),
                                      chi)
    assert np.max(np.abs(rob)) < 1e-9


def test_unit_sphere_convention():
    """The round unit sphere bounding a flat ball has Pi = gamma with the outward normal."""
    f = ScalarField(lambda p: np.sum(p * p, axis=-1), lambda p: 2 * p,
                    lambda p: np.broadcast_to(2 * np.eye(3), p.shape + (3,)))
    v = np.random.default_rng(9).normal(size=(10, 3))
    p = v / np.linalg.norm(v, axis=1, keepdims=True)
    geo = hypersurface_geometry(flat_metric(3), f, 1.0, p)
    assert np.max(np.abs(geo.second_form - geo.induced_metric)) < 1e-12


def test_critical_point_rejected():
    f = ScalarField(lambda p: np.sum(p * p, axis=-1), lambda p: 2 * p)
    with pytest.raises(CriticalPointError):
        hypersurface_geometry(flat_metric(2), f, 0.0, np.zeros((1, 2)))


@pytest.mark.parametrize("chart", CHARTS)
def test_static_potentials_of_the_model(chart):
    n = 4
    p = chart_points(np.random.default_rng(10), 50, n, chart)
    g = hyperbolic_metric(n, chart)
    for i in range(n + 1):
        V = StaticPotential.basis(i, n)
        tens, lap = static_residual(V, g, -float(n), p)
        assert np.max(np.abs(tens)) < 1e-9 and np.max(np.abs(lap)) < 1e-9
        hess = covariant_hessian(g, ScalarField.from_potential(V, chart), p)
        assert np.max(np.abs(hess - V(p if chart != "hyperboloid" else hyperboloid_lift(p), chart)[:, None, None]
                             * g.g(p))) < 1e-9


def test_static_residual_flat_example():
    n = 3
    p = random_ball_points(np.random.default_rng(12), 10, n, 0.8)
    V = ScalarField(lambda q: StaticPotential.basis(0, n)(q, "ball"))
    tens, lap = static_residual(V, flat_metric(n), 0.0, p)
    assert np.max(np.abs(tens)) > 1e-1
    assert np.max(np.abs(lap)) > 1e-1


def test_lie_derivative_examples():
    n = 4
    b = hyperbolic_metric(n, "hyperboloid")
    p = np.random.default_rng(13).normal(size=(30, n))
    assert np.max(np.abs(lie_derivative_metric(lambda q: np.zeros_like(q), b, p))) == 0.0

    def rotation(q):  # generator in the (x_2, x_3) plane
        out = np.zeros_like(q)
        out[..., 1], out[..., 2] = -q[..., 2], q[..., 1]
        return out

    assert np.max(np.abs(lie_derivative_metric(rotation, b, p))) < 1e-8

    def boost(q):  # generator of boosts in the (x_0, x_2) plane, pushed to spatial coordinates
        x0 = np.sqrt(1 + np.sum(q * q, axis=-1))
        out = np.zeros_like(q)
        out[..., 1] = x0
        return out

    assert np.max(np.abs(lie_derivative_metric(boost, b, p))) < 1e-7

    def radial_bump(q):
        return np.exp(-np.sum(q * q, axis=-1))[..., None] * q

    def jac(q):  # d_i X^k
        w = np.exp(-np.sum(q * q, axis=-1))
        return w[..., None, None] * (np.eye(n) - 2 * q[..., :, None] * q[..., None, :])

    flat = flat_metric(n)
    ours = lie_derivative_metric(radial_bump, flat, p)
    J = jac(p)
    assert np.max(np.abs(ours - (J + np.swapaxes(J, -1, -2)))) < 1e-7


def test_gauss_relation_on_equidistants():
    n = 4
    for s in (-1.0, 0.5, 2.0):
        kappa2 = 1 / (1 + s * s)
        w = np.random.default_rng(14).normal(size=(10, n - 1))
        R = induced_scalar_curvature(equidistant_induced_metric(n, s), w)
        assert np.max(np.abs(R + (n - 1) * (n - 2) * kappa2)) < 1e-4


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.sampled_from(CHARTS), st.integers(0, 2**32 - 1))
def test_fd_mode_agrees_with_analytic(n, chart, seed):
    p = chart_points(np.random.default_rng(seed), 5, n, chart, 0.5)
    g = hyperbolic_metric(n, chart)
    a = curvature(g, p)
    f = curvature(g.with_fd(), p)
    assert np.max(np.abs(a.riemann - f.riemann) / (1 + np.abs(a.riemann))) < 1e-3


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_perturbed_riemann_symmetries(seed):
    rng = np.random.default_rng(seed)
    g = bump_metric(3, eps=0.05, center=rng.uniform(-0.3, 0.3, 3))
    cd = curvature(g, random_ball_points(rng, 5, 3, 0.6))
    assert riemann_symmetry_residual(cd) < 1e-5
