"""Acceptance criteria with pinned tolerances; each test records one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from hypmass import spinors as sp
from hypmass.mass.chai import chai_flux, tangency_residual
from hypmass.mass.energy import boundary_points, energy_scan
from hypmass.mass.functional import (mass_at_radius, mass_limit, mass_vector, pushforward_data,
                                     radius_schedule)
from hypmass.mass.quadrature import QuadratureOrders, build_rule, sphere_area
from hypmass.masslab.config import config_from_dict
from hypmass.masslab.families import (GraphProfile, boundary_graph, conformal_decay, random_bump_profile,
                                      zero_data)
from hypmass.masslab.suites import mass_suite, models_suite, spinors_suite
from hypmass.models import DomainSpec, StaticPotential, boost_matrix, preserves_equidistant, rotation_matrix
from hypmass.tensors import MetricField, add_fields, hyperbolic_metric

from .acceptance_log import record
from .helpers import random_ball_points, random_orthogonal

pytestmark = pytest.mark.slow

LONG_SCHEDULE = radius_schedule(2.0, 7)


def _check_map(checks):
    return {c.name: c.residual for c in checks}


def test_criterion_1_model_geometry():
    start = time.perf_counter()
    checks = []
    for n in (3, 4):
        res = _check_map(models_suite(config_from_dict({"dimension": n, "seed": 11})))
        for name in ("defining-gradient-norm", "equidistant-umbilicity", "potential-robin-condition"):
            checks.append((f"n={n} {name}", res[name], 1e-6))
    checks.append(("runtime [s]", time.perf_counter() - start, 10.0))
    assert record(1, "equidistant model geometry", checks)


def test_criterion_2_horospherical():
    checks = []
    for n in (3, 4):
        res = _check_map(models_suite(config_from_dict({"dimension": n, "seed": 12})))
        for name in ("horosphere-shape-operator", "horosphere-mean-curvature", "halfspace-potentials",
                     "chart-round-trip"):
            checks.append((f"n={n} {name}", res[name], 1e-6))
    assert record(2, "horospherical geometry", checks)


def test_criterion_3_clifford():
    start = time.perf_counter()
    rng = np.random.default_rng(13)
    checks = []
    for n in (2, 4):
        rep = sp.build_clifford(n)
        alg, block = max(rep.invariant_residuals().values()), 0.0
        for _ in range(50):
            theta = rng.uniform(-math.pi / 2, math.pi / 2)
            nu = sp.random_unit_vectors(rng, 1, n)[0]
            alg = max(alg, max(sp.verify_alg_form(rep, theta, nu).values()))
            block = max(block, sp.block_formula_residual(rep, theta, nu))
        checks += [(f"n={n} algebraic properties", alg, 1e-12), (f"n={n} block formula", block, 1e-12)]
    checks.append(("runtime [s]", time.perf_counter() - start, 5.0))
    assert record(3, "Clifford and boundary operators", checks)


def test_criterion_4_killing_spinors():
    bounds = {"killing-equation": 1e-5, "killing-space-dimension": None, "boundary-condition": 1e-8,
              "quartic-invariant-constancy": 1e-8, "static-potential": 1e-5, "normal-coefficient": 1e-8,
              "mit-bag-horospherical": 1e-8}
    checks = []
    for n in (2, 4):
        res = _check_map(spinors_suite(config_from_dict({"dimension": n, "seed": 14})))
        checks += [(f"n={n} {name}", res[name], bound) for name, bound in bounds.items()]
    assert record(4, "Killing spinors", checks)


def _cap_oracle(n, s, amplitude, sigma, r):
    # e = A x_0^-sigma b: the charge is (n-1)(1+sigma) A x_0^-sigma times the unit radial covector
    x0 = math.sqrt(1 + r * r)
    cap = quad(lambda a: math.sin(a) ** (n - 2), math.acos(s / r), math.pi, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    return (n - 1) * (1 + sigma) * amplitude * x0 ** (-sigma) * r**n * sphere_area(n - 2) * cap


def _random_stabilizer(rng, n):
    m = rotation_matrix(n, random_orthogonal(rng, n - 1)) @ boost_matrix(n, rng.uniform(-0.5, 0.5), (0, 2))
    return m @ rotation_matrix(n, random_orthogonal(rng, n - 1))


def test_criterion_5_mass_functional():
    start = time.perf_counter()
    rng = np.random.default_rng(15)
    orders = QuadratureOrders(16, 32)
    checks = []
    for n in (3, 4):
        zero = 0.0
        for dom in (DomainSpec.equidistant(0.5), DomainSpec.horoball(1.0), DomainSpec.horoball_complement(1.0)):
            rule = build_rule(dom, n, 6.0, orders)
            zero = max(zero, max(abs(mass_at_radius(zero_data(dom, n), V, rule))
                                 for V in dom.admissible_potentials(n)))
        checks.append((f"n={n} zero data", zero, None))

        res = _check_map(mass_suite(config_from_dict({"dimension": n, "seed": 15})))
        checks.append((f"n={n} gauge perturbation", res["gauge-invariance"], 1e-4))

        dom = DomainSpec.equidistant(0.5)
        data = conformal_decay(dom, n, 0.2, float(n))
        P, _ = mass_vector(data, LONG_SCHEDULE, orders)
        cov = 0.0
        for _ in range(10):
            M = _random_stabilizer(rng, n)
            assert preserves_equidistant(M)
            P2, _ = mass_vector(pushforward_data(data, M), LONG_SCHEDULE, orders)
            expected = (M @ np.insert(P.components, 1, 0.0))[[0] + list(range(2, n + 1))]
            cov = max(cov, float(np.max(np.abs(P2.components - expected))))
        checks.append((f"n={n} isometry covariance (10 A)", cov, 1e-4))

        data = conformal_decay(dom, n, 0.5, n + 1.0)
        rule = build_rule(dom, n, 20.0)
        vals = [mass_at_radius(data, V, rule) for V in dom.admissible_potentials(n)]
        oracle = _cap_oracle(n, 0.5, 0.5, n + 1.0, 20.0)
        checks.append((f"n={n} sigma=n+1 oracle", max(abs(vals[0] - oracle), *map(abs, vals[1:])), 1e-5))

        graph = boundary_graph(dom, n, GraphProfile(0.2, np.zeros(n - 1), 1.0, n + 1.0))
        Pg, _ = mass_vector(graph, LONG_SCHEDULE)
        checks.append((f"n={n} boundary graph |P|", float(np.max(np.abs(Pg.components))), 1e-4))
    checks.append(("runtime [s]", time.perf_counter() - start, 300.0))
    assert record(5, "mass functional", checks)


def test_criterion_6_chai_ratio():
    n, dom = 4, DomainSpec.horoball(1.0)
    orders = QuadratureOrders(12, 16)
    Vh = StaticPotential.horospherical(n)
    ratios = []
    for center in (None, [1.5, 0, 0.5, 0, 0], [2, 1, 0.5, 0.3, 0], [1.5, -1, 0, 0.4, 0]):
        data = conformal_decay(dom, n, 1e-4, 0.5, center=center)
        ratios.append(chai_flux(data, orders=orders).value / mass_limit(data, Vh, orders=orders).value)
    ratios = np.array(ratios)
    spread = float((ratios.max() - ratios.min()) / abs(ratios.mean()))
    rng = np.random.default_rng(16)
    z = np.concatenate([np.ones((50, 1)), rng.normal(size=(50, n - 1)) * 2.0], axis=1)
    tang = max(float(np.max(np.abs(tangency_residual(z, a)))) for a in [None] + list(range(2, n + 1)))
    checks = [("ratio spread over 4 perturbations", spread, 0.05), ("tangency", tang, 1e-10)]
    assert record(6, f"curvature flux ratio (mean {ratios.mean():.4f})", checks)


def test_criterion_7_witten_model():
    rng = np.random.default_rng(17)
    checks = []
    for n in (2, 4):
        rep = sp.build_clifford(n)
        worst_int, worst_op, count = 0.0, 0.0, 0
        for theta in (-1.2, -0.5, 0.0, 0.4, 1.0, math.pi / 2, -math.pi / 2):
            dom = sp.boundary_domain_for_theta(theta)
            yi = random_ball_points(rng, 200, n, 0.85)
            yb = sp.ball_boundary_points(dom, n, 200, rng)
            nu = sp.ball_inward_normal(dom, yb)
            for sign in ("+", "-"):
                for seed in sp.killing_space_basis(rep, theta, sign):
                    count += 1
                    parts = sp.witten_integrands(seed, theta, yi, yb)
                    worst_int = max(worst_int, max(float(np.max(np.abs(v))) for v in parts.values()))
                    worst_op = max(worst_op, float(np.max(np.abs(sp.witten_boundary_operator(seed, yb, nu)))))
        checks += [(f"n={n} integrands ({count} spinors)", worst_int, 1e-5), (f"n={n} boundary operator", worst_op, 1e-5)]
    assert record(7, "spinorial identity on the model", checks)


def test_criterion_8_outward_bump():
    rng = np.random.default_rng(18)
    checks = []
    for n in (3, 4):
        b = hyperbolic_metric(n, "hyperboloid")
        for k in range(5):
            dom = DomainSpec.equidistant(rng.uniform(-1.0, 1.0))
            data = boundary_graph(dom, n, random_bump_profile(n, rng))
            g = add_fields(b, MetricField(n, data.e, None, None, "hyperboloid"))
            grid = rng.uniform(-3.0, 3.0, size=(300, n - 1))
            rep = energy_scan(g, dom, boundary=boundary_points(dom, n, grid), count=100, rmax=6.0, seed=k)
            checks.append((f"n={n} profile {k} min(H - (n-1) lambda)", rep.boundary_margin, 0.0))
    assert record(8, "outward bump violates the boundary energy condition", checks)
