"""Quadrature on the large hemispheres and their corner spheres.

Two exhaustions are used:

* hyperboloid chart (equidistant domains and horoball complements):
  coordinate spheres ``|x'| = r`` cut by ``x_1 <= c(r)``; these are geodesic
  spheres about the vertex and carry the Euclidean area element.
* half-space chart (horoballs ``z_1 >= 1/chi``): Euclidean hemispheres
  ``|z - e_1/chi| = r`` above the horosphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import betainc, beta as beta_fn, roots_jacobi, roots_legendre

from ..models import DomainSpec
from ..tensors import hyperbolic_metric, inverse_metric


@dataclass(frozen=True)
class QuadratureOrders:
    """Gauss nodes per polar panel, azimuthal nodes, and the panel grading.

    The polar range is split into panels shrinking geometrically (ratio
    ``grading``) toward the corner until the smallest one is about ``1/r``
    wide, so integrands varying on unit scale near the boundary stay resolved
    on large hemispheres.
    """

    polar: int = 24
    azimuthal: int = 48
    grading: float = 0.25

    def __post_init__(self):
        if self.polar < 2 or self.azimuthal < 3:
            raise ValueError("quadrature orders too small")


@lru_cache(maxsize=64)
def sphere_rule(m: int, polar: int, azimuthal: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on the unit sphere ``S^m`` in ``R^{m+1}``."""
    if m == 0:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if m == 1:
        ang = 2.0 * math.pi * np.arange(azimuthal) / azimuthal
        return np.stack([np.cos(ang), np.sin(ang)], axis=1), np.full(azimuthal, 2.0 * math.pi / azimuthal)
    a = 0.5 * (m - 2)
    t, wt = roots_jacobi(polar, a, a)
    sub_x, sub_w = sphere_rule(m - 1, polar, azimuthal)
    rad = np.sqrt(1.0 - t * t)
    pts = np.concatenate(
        [np.repeat(t, len(sub_w))[:, None], (rad[:, None, None] * sub_x[None]).reshape(-1, m)], axis=1
    )
    w = (wt[:, None] * sub_w[None]).ravel()
    return pts, w


def sphere_area(m: int) -> float:
    return 2.0 * math.pi ** ((m + 1) / 2) / math.gamma((m + 1) / 2)


def polar_cap_integral(n: int, c: float) -> float:
    """``int_{arccos c}^{pi} sin^{n-2}(a) da`` for ``c`` in ``[-1, 1]``."""
    k = 0.5 * (n - 3)
    return 2.0 ** (2 * k + 1) * beta_fn(k + 1, k + 1) * betainc(k + 1, k + 1, 0.5 * (1.0 + c))


@dataclass(frozen=True)
class QuadratureRule:
    domain: DomainSpec
    chart: str
    radius: float
    nodes: np.ndarray
    weights: np.ndarray
    mu: np.ndarray
    corner_nodes: np.ndarray
    corner_weights: np.ndarray
    eta: np.ndarray
    conormal: np.ndarray
    center: np.ndarray

    @property
    def area(self) -> float:
        return float(np.sum(self.weights))

    @property
    def corner_area(self) -> float:
        return float(np.sum(self.corner_weights))


def graded_polar_rule(a0: float, a1: float, r: float, orders: QuadratureOrders) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on ``[a0, a1]`` graded toward ``a0``."""
    t, wt = roots_legendre(orders.polar)
    length = a1 - a0
    edges = [1.0]
    while edges[-1] * length * max(r, 1.0) > 1.0:
        edges.append(edges[-1] * orders.grading)
    edges.append(0.0)
    edges = a0 + length * np.array(edges[::-1])
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        nodes.append(lo + (hi - lo) * 0.5 * (t + 1.0))
        weights.append(0.5 * (hi - lo) * wt)
    return np.concatenate(nodes), np.concatenate(weights)


def hyperboloid_cut(domain: DomainSpec, r: float) -> float:
    """Height ``c(r)`` of the cut ``x_1 <= c`` on the sphere ``|x'| = r``."""
    if domain.kind == "equidistant":
        return domain.s
    if domain.kind == "horoball-complement":
        return math.sqrt(1.0 + r * r) - domain.chi
    raise ValueError("horoballs use the half-space exhaustion")


def exact_area(domain: DomainSpec, n: int, r: float) -> float:
    """Closed-form b-area of the hyperboloid-chart hemisphere."""
    c = hyperboloid_cut(domain, r)
    return r ** (n - 1) * sphere_area(n - 2) * polar_cap_integral(n, max(-1.0, min(1.0, c / r)))


def _unit_b(vec: np.ndarray, g: np.ndarray) -> np.ndarray:
    nrm = np.sqrt(np.einsum("...i,...ij,...j->...", vec, g, vec))
    return vec / nrm[..., None]


def _conormal(mu: np.ndarray, eta: np.ndarray, g: np.ndarray) -> np.ndarray:
    proj = mu - np.einsum("...i,...ij,...j->...", mu, g, eta)[..., None] * eta
    return _unit_b(proj, g)


def boundary_normal(domain: DomainSpec, p: np.ndarray, chart: str, corner_mode: str = "outward") -> np.ndarray:
    """Unit outward normal of the domain boundary as a vector field."""
    n = p.shape[-1]
    V = domain.defining_potential(n)
    _, grad, _ = V.derivatives(p, chart)
    g = hyperbolic_metric(n, chart).g(p)
    sign = domain.outward_sign
    if domain.kind == "horoball-complement" and corner_mode == "horospherical":
        sign = 1.0
    vec = sign * np.einsum("...ij,...j->...i", inverse_metric(g), grad)
    return _unit_b(vec, g)


def build_rule(domain: DomainSpec, n: int, r: float, orders: QuadratureOrders = QuadratureOrders(),
               corner_mode: str = "outward") -> QuadratureRule:
    if domain.kind == "horoball":
        return _halfspace_rule(domain, n, r, orders)
    return _hyperboloid_rule(domain, n, r, orders, corner_mode)


def _hyperboloid_rule(domain, n, r, orders, corner_mode):
    c = hyperboloid_cut(domain, r)
    if not r > abs(c):
        raise ValueError(f"radius {r} does not reach the boundary (cut at {c})")
    a0 = math.acos(c / r)
    alpha, w_alpha = graded_polar_rule(a0, math.pi, r, orders)
    w_alpha = w_alpha * np.sin(alpha) ** (n - 2)
    om, w_om = sphere_rule(n - 2, orders.polar, orders.azimuthal)
    ca = np.cos(alpha)[:, None, None]
    sa = np.sin(alpha)[:, None, None]
    pts = np.concatenate([np.broadcast_to(ca, (len(alpha), len(w_om), 1)), sa * om[None]], axis=2)
    nodes = r * pts.reshape(-1, n)
    weights = r ** (n - 1) * (w_alpha[:, None] * w_om[None]).ravel()
    mu = math.sqrt(1.0 + r * r) * nodes / r

    rho = math.sqrt(r * r - c * c)
    cn = np.concatenate([np.full((len(w_om), 1), c), rho * om], axis=1)
    cw = rho ** (n - 2) * w_om
    g = hyperbolic_metric(n, "hyperboloid").g(cn)
    eta = boundary_normal(domain, cn, "hyperboloid", corner_mode)
    mu_c = math.sqrt(1.0 + r * r) * cn / r
    return QuadratureRule(domain, "hyperboloid", r, nodes, weights, mu, cn, cw, eta,
                          _conormal(mu_c, eta, g), np.zeros(n))


def _halfspace_rule(domain, n, r, orders):
    c1 = 1.0 / domain.chi
    center = np.zeros(n)
    center[0] = c1
    # graded toward the corner at alpha = pi/2
    beta, w_beta = graded_polar_rule(0.0, 0.5 * math.pi, r, orders)
    alpha = 0.5 * math.pi - beta
    w_alpha = w_beta * np.sin(alpha) ** (n - 2)
    om, w_om = sphere_rule(n - 2, orders.polar, orders.azimuthal)
    ca = np.cos(alpha)[:, None, None]
    sa = np.sin(alpha)[:, None, None]
    unit = np.concatenate([np.broadcast_to(ca, (len(alpha), len(w_om), 1)), sa * om[None]], axis=2).reshape(-1, n)
    nodes = center + r * unit
    z1 = nodes[:, 0]
    weights = r ** (n - 1) * (w_alpha[:, None] * w_om[None]).ravel() * z1 ** (-(n - 1))
    mu = z1[:, None] * unit

    cn = np.concatenate([np.full((len(w_om), 1), c1), r * om], axis=1)
    cw = (r / c1) ** (n - 2) * w_om
    eta = np.zeros_like(cn)
    eta[:, 0] = -c1
    conormal = c1 * np.concatenate([np.zeros((len(w_om), 1)), om], axis=1)
    return QuadratureRule(domain, "halfspace", r, nodes, weights, mu, cn, cw, eta, conormal, center)


def outward_tests(rule: QuadratureRule, n: int, conventions) -> dict[str, np.ndarray]:
    """Orientation margins: positive when each signed normal points outward."""
    dom = rule.domain
    rel = rule.nodes - rule.center
    mu_margin = conventions.mu * np.einsum("...i,...i->...", rel, rule.mu)
    V = dom.defining_potential(n)
    _, grad, _ = V.derivatives(rule.corner_nodes, rule.chart)
    eta_margin = conventions.eta * dom.outward_sign * np.einsum("...i,...i->...", grad, rule.eta)
    crel = rule.corner_nodes - rule.center
    con_margin = conventions.conormal * np.einsum("...i,...i->...", crel, rule.conormal)
    return {"mu": mu_margin, "eta": eta_margin, "conormal": con_margin}
