"""The invariant catalogue run by ``masslab verify``."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .. import spinors as sp
from ..mass.chai import modified_einstein, modified_newton, tangency_residual
from ..mass.conventions import OUTWARD, NormalConventions, sign_audit
from ..mass.energy import boundary_points, energy_scan
from ..mass.functional import mass_at_radius, working_chart
from ..mass.quadrature import build_rule
from ..models import DomainSpec, StaticPotential, convert_coords
from ..tensors import (boundary_static_residual, curvature, domain_boundary_geometry, gradient_inner,
                       hyperbolic_metric, riemann_symmetry_residual, sectional_curvature_residual,
                       static_residual)
from .config import ExperimentConfig
from .families import lie_gauge, random_gauge_field, zero_data
from .report import Check

S_VALUES = (-2.0, -1.0, 0.0, 1.0, 2.0)
CHI_VALUES = (0.5, 1.0, 2.0)
POINTS = 50


def conventions_for(cfg: ExperimentConfig) -> NormalConventions:
    conv = OUTWARD
    if "flip-normal" in cfg.mutations:
        conv = conv.flipped("eta")
    if "flip-conormal" in cfg.mutations:
        conv = conv.flipped("conormal")
    if "flip-hemisphere-normal" in cfg.mutations:
        conv = conv.flipped("mu")
    return conv


def _w(rng, n, count=POINTS, spread=2.0):
    return rng.normal(size=(count, n - 1)) * spread


def models_suite(cfg: ExperimentConfig) -> list[Check]:
    n, rng = cfg.n, np.random.default_rng(cfg.seed)
    b = hyperbolic_metric(n, "hyperboloid")
    out = []
    grad, umb, robin = 0.0, 0.0, 0.0
    for s in S_VALUES:
        dom = DomainSpec.equidistant(s)
        p = boundary_points(dom, n, _w(rng, n))
        V1 = StaticPotential.basis(1, n)
        grad = max(grad, float(np.max(np.abs(np.sqrt(gradient_inner(b, V1, V1, p)) - math.sqrt(1 + s * s)))))
        geo = domain_boundary_geometry(b, dom, p)
        lam = dom.umbilicity
        umb = max(umb, float(np.max(np.abs(geo.second_form - lam * geo.induced_metric))))
        for V in dom.admissible_potentials(n):
            _, rob = boundary_static_residual(V, b, lam, p, V1, s, 1.0)
            robin = max(robin, float(np.max(np.abs(rob))))
    out.append(Check("models", "defining-gradient-norm", "equidistant-gradient-norm", grad, 1e-6))
    out.append(Check("models", "equidistant-umbilicity", "equidistant-second-form", umb, 1e-6))
    out.append(Check("models", "potential-robin-condition", "equidistant-robin-condition", robin, 1e-6))

    bh = hyperbolic_metric(n, "halfspace")
    shape, mean = 0.0, 0.0
    for chi in CHI_VALUES:
        dom = DomainSpec.horoball(chi)
        geo = domain_boundary_geometry(bh, dom, boundary_points(dom, n, _w(rng, n)))
        shape = max(shape, float(np.max(np.abs(geo.shape_operator - np.eye(n - 1)))))
        mean = max(mean, float(np.max(np.abs(geo.mean_curvature - (n - 1)))))
    out.append(Check("models", "horosphere-shape-operator", "horosphere-normal-derivative", shape, 1e-6))
    out.append(Check("models", "horosphere-mean-curvature", "horosphere-mean-curvature", mean, 1e-6))

    z = np.concatenate([rng.uniform(0.2, 3.0, (POINTS, 1)), _w(rng, n)], axis=1)
    x = convert_coords(z, "halfspace", "hyperboloid")
    pot = max(float(np.max(np.abs((x[:, 0] - x[:, 1]) * z[:, 0] - 1.0))),
              float(np.max(np.abs(x[:, 2:] - z[:, 1:] / z[:, :1]))))
    out.append(Check("models", "halfspace-potentials", "halfspace-static-potentials", pot, 1e-6))
    back = convert_coords(convert_coords(convert_coords(x, "hyperboloid", "ball"), "ball", "halfspace"),
                          "halfspace", "hyperboloid")
    out.append(Check("models", "chart-round-trip", "chart-conversions",
                     float(np.max(np.abs(back - x) / (1 + np.abs(x)))), 1e-9))
    return out


def tensors_suite(cfg: ExperimentConfig) -> list[Check]:
    n, rng = cfg.n, np.random.default_rng(cfg.seed + 1)
    out = []
    y = rng.normal(size=(POINTS, n))
    y *= (rng.uniform(0, 0.8, (POINTS, 1)) / np.linalg.norm(y, axis=1, keepdims=True))
    for chart in ("ball", "halfspace", "hyperboloid"):
        p = convert_coords(y, "ball", chart)
        if chart == "hyperboloid":
            p = p[:, 1:]
        g = hyperbolic_metric(n, chart)
        out.append(Check("tensors", f"sectional-curvature-{chart}", "constant-curvature-model",
                         float(sectional_curvature_residual(g, p)), 1e-9))
        out.append(Check("tensors", f"riemann-symmetries-{chart}", "curvature-symmetries",
                         float(riemann_symmetry_residual(curvature(g, p))), 1e-9))
        out.append(Check("tensors", f"vacuum-{chart}", "modified-einstein-vanishes",
                         float(np.max(np.abs(modified_einstein(g, p)))), 1e-9))
        st = 0.0
        for i in range(n + 1):
            tens, lap = static_residual(StaticPotential.basis(i, n), g, -float(n), p)
            st = max(st, float(np.max(np.abs(tens))), float(np.max(np.abs(lap))))
        out.append(Check("tensors", f"static-equations-{chart}", "static-potentials", st, 1e-8))
    bh = hyperbolic_metric(n, "halfspace")
    dom = DomainSpec.horoball(1.0)
    Pi, _ = modified_newton(bh, dom.defining_potential(n), dom.level, boundary_points(dom, n, _w(rng, n)),
                            dom.outward_sign)
    out.append(Check("tensors", "horosphere-modified-newton", "modified-newton-vanishes",
                     float(np.max(np.abs(Pi))), 1e-9))
    zs = np.concatenate([np.ones((POINTS, 1)), _w(rng, n)], axis=1)
    tang = max(float(np.max(np.abs(tangency_residual(zs, a)))) for a in [None] + list(range(2, n + 1)))
    out.append(Check("tensors", "conformal-field-tangency", "conformal-fields-tangent-to-horosphere", tang, 1e-10))
    return out


def spinors_suite(cfg: ExperimentConfig) -> list[Check]:
    n, rng = cfg.n, np.random.default_rng(cfg.seed + 2)
    rep = sp.build_clifford(n)  # raises for odd n
    out = [Check("spinors", "clifford-relations", "clifford-compatibility",
                 max(rep.invariant_residuals().values()), 1e-12)]
    alg, block = 0.0, 0.0
    for _ in range(POINTS):
        theta = rng.uniform(-math.pi / 2, math.pi / 2)
        nu = sp.random_unit_vectors(rng, 1, n)[0]
        alg = max(alg, max(sp.verify_alg_form(rep, theta, nu).values()))
        block = max(block, sp.block_formula_residual(rep, theta, nu))
    out.append(Check("spinors", "boundary-operator-algebra", "boundary-operator-properties", alg, 1e-12))
    out.append(Check("spinors", "chiral-block-form", "boundary-operator-block-form", block, 1e-12))

    kill, count, bc, qconst, v1, static, mit = 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    y_in = rng.normal(size=(20, n))
    y_in *= rng.uniform(0, 0.7, (20, 1)) / np.linalg.norm(y_in, axis=1, keepdims=True)
    b = hyperbolic_metric(n, "ball")
    for theta in (-1.0, 0.0, 0.6):
        for sign in ("+", "-"):
            seeds = sp.killing_space_basis(rep, theta, sign)
            count = max(count, abs(len(seeds) - 2 ** (n // 2 - 1)))
            yb = sp.ball_boundary_points(sp.boundary_domain_for_theta(theta), n, 20, rng)
            for seed in seeds:
                kill = max(kill, float(np.max(sp.killing_residual(seed, y_in))))
                bc = max(bc, float(np.max(sp.boundary_condition_residual(seed, theta, yb))))
                q = sp.q_invariant(seed, y_in)
                qconst = max(qconst, float(np.max(np.abs(q - q[0]))))
                V = sp.v_phi_coefficients(seed)
                v1 = max(v1, abs(float(V.coefficients[1])))
                tens, lap = static_residual(sp.v_phi_field(seed), b, -float(n), y_in)
                static = max(static, float(np.max(np.abs(tens))), float(np.max(np.abs(lap))))
    for sign in ("+", "-"):
        for seed in sp.killing_space_basis(rep, math.pi / 2, sign):
            c = sp.v_phi_coefficients(seed).coefficients
            mit = max(mit, abs(c[0] + c[1]), float(np.max(np.abs(c[2:]))))
    out += [
        Check("spinors", "killing-equation", "killing-spinor-equation", kill, 1e-5),
        Check("spinors", "killing-space-dimension", "killing-space-dimension", count, 0.0),
        Check("spinors", "boundary-condition", "killing-boundary-condition", bc, 1e-8),
        Check("spinors", "quartic-invariant-constancy", "killing-quartic-invariant", qconst, 1e-8),
        Check("spinors", "static-potential", "spinor-static-potential", static, 1e-5),
        Check("spinors", "normal-coefficient", "spinor-potential-normal-coefficient", v1, 1e-8),
        Check("spinors", "mit-bag-horospherical", "mit-bag-potential", mit, 1e-8),
    ]
    return out


def mass_suite(cfg: ExperimentConfig) -> list[Check]:
    n, dom = cfg.n, cfg.domain
    conv = conventions_for(cfg)
    orders = cfg.orders
    out = []
    worst = math.inf
    for r in cfg.radius_schedule[:3]:
        rule = build_rule(dom, n, r, orders, conv.complement_corner)
        worst = min(worst, min(sign_audit(rule, n, conv).values()))
    out.append(Check("mass", "sign-audit", "outward-normal-conventions", max(0.0, -worst), 0.0,
                     f"minimum orientation margin {worst:.3e}"))

    zero = zero_data(dom, n)
    r = cfg.radius_schedule[1]
    rule = build_rule(dom, n, r, orders, conv.complement_corner)
    zres = max(abs(mass_at_radius(zero, V, rule, conv)) for V in dom.admissible_potentials(n))
    out.append(Check("mass", "zero-data", "zero-perturbation-zero-mass", zres, 0.0))

    rng = np.random.default_rng(cfg.seed + 3)
    gauge = lie_gauge(dom, n, random_gauge_field(dom, n, rng, center_r=4.0, width=3.0))
    gres = 0.0
    for rr in (3.0, 5.0):
        rule = build_rule(dom, n, rr, orders, conv.complement_corner)
        gres = max(gres, max(abs(mass_at_radius(gauge, V, rule, conv)) for V in dom.admissible_potentials(n)))
    out.append(Check("mass", "gauge-invariance", "exact-charge-of-lie-derivative", gres, 1e-4))

    b = hyperbolic_metric(n, working_chart(dom))
    rep = energy_scan(b, dom, count=100, seed=cfg.seed)
    out.append(Check("mass", "model-energy-margins", "model-saturates-energy-conditions",
                     max(abs(rep.interior_margin), abs(rep.boundary_margin)), 1e-9))
    return out


CATALOGUE: dict[str, Callable[[ExperimentConfig], list[Check]]] = {
    "models": models_suite,
    "tensors": tensors_suite,
    "spinors": spinors_suite,
    "mass": mass_suite,
}


def run_suites(cfg: ExperimentConfig) -> list[Check]:
    checks = []
    for name in cfg.suites:
        checks.extend(CATALOGUE[name](cfg))
    return checks
