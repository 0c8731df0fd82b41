"""Clifford algebra, boundary operators and Killing spinors of the ball model."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypmass import spinors as sp
from hypmass.models import DomainSpec, StaticPotential, convert_coords, hyperboloid_lift
from hypmass.tensors import hyperbolic_metric, static_residual

from .helpers import random_ball_points

THETAS = (-1.2, -0.5, 0.0, 0.4, 1.0)
SIGNS = ("+", "-")

unit_theta = st.floats(-math.pi / 2, math.pi / 2, allow_nan=False)
raw_vectors = st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=4, max_size=4)


def _unit(v, n):
    v = np.asarray(v[:n], dtype=float)
    nrm = np.linalg.norm(v)
    return v / nrm if nrm > 1e-3 else np.eye(n)[0]


# ---------------------------------------------------------------------------
# Clifford representation


@pytest.mark.parametrize("n", [2, 4, 6])
def test_clifford_relations(n):
    rep = sp.build_clifford(n)
    assert rep.dim == 2 ** (n // 2)
    assert max(rep.invariant_residuals().values()) < 1e-12


def test_clifford_n2_example():
    rep = sp.build_clifford(2)
    g0, g1 = rep.gammas
    assert np.allclose(g0 @ g0, -np.eye(2))
    assert np.allclose(g0 @ g1, -g1 @ g0)
    assert np.allclose(rep.chirality @ rep.chirality, np.eye(2))


@pytest.mark.parametrize("n", [1, 3, 5, 8])
def test_clifford_rejects_unsupported(n):
    with pytest.raises(sp.UnsupportedDimensionError):
        sp.build_clifford(n)


def test_clifford_multiplication_squares_to_minus_norm():
    rep = sp.build_clifford(4)
    X = np.array([0.3, -1.2, 0.5, 2.0])
    cX = rep.c(X)
    assert np.allclose(cX @ cX, -(X @ X) * np.eye(rep.dim))


# ---------------------------------------------------------------------------
# boundary operator


@pytest.mark.parametrize("n", [2, 4])
@settings(max_examples=50, deadline=None)
@given(theta=unit_theta, raw=raw_vectors)
def test_alg_form_properties(n, theta, raw):
    rep = sp.build_clifford(n)
    nu = _unit(raw, n)
    assert max(sp.verify_alg_form(rep, theta, nu).values()) < 1e-12
    assert sp.block_formula_residual(rep, theta, nu) < 1e-12


@pytest.mark.parametrize("n", [2, 4])
@settings(max_examples=25, deadline=None)
@given(theta=unit_theta, raw=raw_vectors)
def test_projections_split_evenly(n, theta, raw):
    bop = sp.q_theta(sp.build_clifford(n), theta, _unit(raw, n))
    res = sp.projection_residuals(bop)
    assert max(res.values()) < 1e-12


def test_q_theta_validation():
    rep = sp.build_clifford(4)
    with pytest.raises(ValueError):
        sp.q_theta(rep, 0.0, np.array([1.0, 1.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        sp.q_theta(rep, 2.0, np.eye(4)[0])
    with pytest.raises(ValueError):
        sp.q_theta(rep, 0.0, np.eye(3)[0])


def test_mit_bag_is_endpoint():
    rep = sp.build_clifford(4)
    nu = np.eye(4)[1]
    assert np.allclose(sp.q_horo(rep, nu, "+").matrix, 1j * rep.c(nu))
    assert np.allclose(sp.q_horo(rep, nu, "-").matrix, -1j * rep.c(nu))


@pytest.mark.parametrize("theta", THETAS)
@pytest.mark.parametrize("sign", SIGNS)
def test_boundary_dirac_identity(theta, sign):
    rep = sp.build_clifford(4)
    nu = _unit([0.2, -0.4, 0.7, 0.1], 4)
    bop = sp.q_theta(rep, theta, nu)
    for psi in sp.eigenvectors(bop, sign).T:
        assert max(sp.boundary_dirac_identity_check(bop, psi, sign).values()) < 1e-12


def test_boundary_dirac_identity_rejects_wrong_eigenspace():
    rep = sp.build_clifford(4)
    bop = sp.q_theta(rep, 0.3, np.eye(4)[0])
    psi = sp.eigenvectors(bop, "+")[:, 0]
    with pytest.raises(sp.NotAnEigenvectorError):
        sp.boundary_dirac_identity_check(bop, psi, "-")


# ---------------------------------------------------------------------------
# Killing spinors


def test_spin_connection_closed_form_matches_frame_computation():
    rep = sp.build_clifford(4)
    y = random_ball_points(np.random.default_rng(0), 10, 4, 0.8)
    assert np.max(np.abs(sp.ball_spin_connection(rep, y) - sp.ball_spin_connection_closed(rep, y))) < 1e-6


@pytest.mark.parametrize("n", [2, 4])
@pytest.mark.parametrize("sign", SIGNS)
def test_killing_equation_for_arbitrary_seed(n, sign):
    rng = np.random.default_rng(1)
    rep = sp.build_clifford(n)
    u = rng.normal(size=rep.dim) + 1j * rng.normal(size=rep.dim)
    seed = sp.KillingSpinorSeed(u, sign)
    y = random_ball_points(rng, 20, n, 0.8)
    assert np.max(sp.killing_residual(seed, y)) < 1e-5


def test_wrong_sign_fails_killing_equation():
    rep = sp.build_clifford(4)
    u = np.arange(1, rep.dim + 1, dtype=complex)
    y = random_ball_points(np.random.default_rng(2), 10, 4, 0.8)
    res = sp.killing_connection_apply(rep, "-", lambda q: sp.killing_spinor(sp.KillingSpinorSeed(u, "+"), q), y)
    assert np.max(np.abs(res)) > 1e-2


@pytest.mark.parametrize("n", [2, 4])
@pytest.mark.parametrize("theta", THETAS + (math.pi / 2, -math.pi / 2))
@pytest.mark.parametrize("sign", SIGNS)
def test_killing_space_dimension_and_boundary_condition(n, theta, sign):
    rng = np.random.default_rng(3)
    rep = sp.build_clifford(n)
    seeds = sp.killing_space_basis(rep, theta, sign)
    assert len(seeds) == 2 ** (n // 2 - 1)
    assert sp.seeds_gram_rank(seeds) == len(seeds)
    y = sp.ball_boundary_points(sp.boundary_domain_for_theta(theta), n, 20, rng)
    for seed in seeds:
        assert np.max(sp.boundary_condition_residual(seed, theta, y)) < 1e-8


def test_killing_space_rejects_mismatched_projection():
    with pytest.raises(sp.SignMismatchError):
        sp.killing_space_basis(sp.build_clifford(4), 0.0, "+", projection_sign="-")


@pytest.mark.parametrize("theta", THETAS)
@pytest.mark.parametrize("sign", SIGNS)
def test_quartic_invariant_constant(theta, sign):
    rng = np.random.default_rng(4)
    y = random_ball_points(rng, 20, 4, 0.9)
    for seed in sp.killing_space_basis(sp.build_clifford(4), theta, sign):
        q = sp.q_invariant(seed, y)
        assert np.max(np.abs(q - q[0])) < 1e-8 * max(1.0, abs(q[0]))


@pytest.mark.parametrize("theta", THETAS)
@pytest.mark.parametrize("sign", SIGNS)
def test_v_phi_is_admissible_static_potential(theta, sign):
    rng = np.random.default_rng(5)
    n = 4
    y = random_ball_points(rng, 20, n, 0.7)
    b = hyperbolic_metric(n, "ball")
    for seed in sp.killing_space_basis(sp.build_clifford(n), theta, sign):
        V = sp.v_phi_coefficients(seed)
        assert abs(V.coefficients[1]) < 1e-8
        assert np.max(np.abs(sp.normalization_constant(seed, y) - sp.normalization_constant(seed, y[:1]))) < 1e-10
        assert np.max(np.abs(V(y, "ball") - sp.v_phi(seed, y))) < 1e-10
        tens, lap = static_residual(sp.v_phi_field(seed), b, -float(n), y)
        assert max(np.max(np.abs(tens)), np.max(np.abs(lap))) < 1e-5


@pytest.mark.parametrize("sign", SIGNS)
def test_mit_bag_potential_is_horospherical(sign):
    for seed in sp.killing_space_basis(sp.build_clifford(4), math.pi / 2, sign):
        c = sp.v_phi_coefficients(seed).coefficients
        Vh = StaticPotential.horospherical(4).coefficients
        ratio = c[0] / Vh[0]
        assert np.max(np.abs(c - ratio * Vh)) < 1e-8


@pytest.mark.parametrize("sign", SIGNS)
def test_gradient_identity(sign):
    rng = np.random.default_rng(6)
    y = random_ball_points(rng, 10, 4, 0.7)
    Y = rng.normal(size=(10, 4))
    for seed in sp.killing_space_basis(sp.build_clifford(4), 0.3, sign):
        assert np.max(sp.gradient_identity_residual(seed, y, Y)) < 1e-5


@pytest.mark.parametrize("theta", (-0.8, 0.0, 0.6))
@pytest.mark.parametrize("sign", SIGNS)
def test_boundary_killing_equation(theta, sign):
    rng = np.random.default_rng(7)
    y = sp.ball_boundary_points(sp.boundary_domain_for_theta(theta), 4, 5, rng, spread=1.0)
    for seed in sp.killing_space_basis(sp.build_clifford(4), theta, sign):
        assert np.max(sp.boundary_killing_residual(seed, theta, y)) < 1e-5


def test_boundary_domain_for_theta():
    assert sp.boundary_domain_for_theta(0.0) == DomainSpec.equidistant(0.0)
    assert sp.boundary_domain_for_theta(math.pi / 2).kind == "horoball"
    assert sp.boundary_domain_for_theta(-math.pi / 2).kind == "horoball-complement"
    assert math.isclose(sp.boundary_domain_for_theta(0.7).umbilicity, math.sin(0.7))


# ---------------------------------------------------------------------------
# spinorial mass identity on the model


@pytest.mark.parametrize("theta", THETAS + (math.pi / 2,))
@pytest.mark.parametrize("sign", SIGNS)
def test_witten_integrands_vanish_on_model(theta, sign):
    rng = np.random.default_rng(8)
    n = 4
    yi = random_ball_points(rng, 200, n, 0.85)
    yb = sp.ball_boundary_points(sp.boundary_domain_for_theta(theta), n, 200, rng)
    nu = sp.ball_inward_normal(sp.boundary_domain_for_theta(theta), yb)
    for seed in sp.killing_space_basis(sp.build_clifford(n), theta, sign):
        parts = sp.witten_integrands(seed, theta, yi, yb)
        assert max(float(np.max(np.abs(v))) for v in parts.values()) < 1e-5
        assert np.max(np.abs(sp.witten_boundary_operator(seed, yb, nu))) < 1e-5


@pytest.mark.parametrize("n", [2, 4])
@pytest.mark.parametrize("theta", [-1.0, 0.0, 0.7])
@pytest.mark.parametrize("sign", ["+", "-"])
def test_chiral_phase_relation_on_the_axis(n, theta, sign):
    """At the boundary point on the e_1 axis (nu = -e_1) the chiral halves of
    Phi differ by the phase +-i e^{-i theta}; the seed itself carries +-i."""
    rep = sp.build_clifford(n)
    x = np.zeros((1, n))
    x[0, 0] = math.tan(theta)
    y = convert_coords(hyperboloid_lift(x), "hyperboloid", "ball")[0]
    nu = -np.eye(n)[0]
    s = 1.0 if sign == "+" else -1.0
    for seed in sp.killing_space_basis(rep, theta, sign):
        plus, minus = sp.chiral_components(rep, sp.killing_spinor(seed, y), nu)
        assert np.max(np.abs(minus - s * 1j * np.exp(-1j * theta) * plus)) < 1e-10
        u_plus, u_minus = sp.chiral_components(rep, seed.u, nu)
        assert np.max(np.abs(u_minus - s * 1j * u_plus)) < 1e-10
