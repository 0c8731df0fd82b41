"""Curvature fluxes of the modified Einstein and Newton tensors on horoballs.

The raw fluxes are returned without any dimensional constant; the ratio to the
charge-form mass is measured empirically.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from ..models import DomainSpec, convert_coords, minkowski_metric
from ..tensors import (MetricField, add_fields, curvature, fd_second_extrapolated, hyperbolic_metric,
                       hypersurface_geometry)
from .functional import AsymptoticData, MassLimit, radius_schedule, richardson
from .quadrature import QuadratureOrders, build_rule


def modified_einstein(g: MetricField, p) -> np.ndarray:
    """``Ric - R g / 2 - (n-1)(n-2)/2 g``."""
    p = np.asarray(p, dtype=float)
    n = g.n
    cd = curvature(g, p)
    gm = g.g(p)
    return cd.ricci - 0.5 * cd.scalar[..., None, None] * gm - 0.5 * (n - 1) * (n - 2) * gm


def modified_newton(g: MetricField, f, level: float, p, outward_sign: float = 1.0):
    """``Pi - H gamma + (n-2) gamma`` on ``{f = level}`` in the tangent basis,
    together with the basis itself."""
    geo = hypersurface_geometry(g, f, level, p, outward_sign)
    n = g.n
    gam = geo.induced_metric
    tens = geo.second_form - geo.mean_curvature[..., None, None] * gam + (n - 2) * gam
    return tens, geo


def modified_tensors(g: MetricField, p, domain: Optional[DomainSpec] = None):
    """``(E~_g, Pi~_g)``; the second entry is ``None`` unless a boundary is given."""
    E = modified_einstein(g, p)
    if domain is None:
        return E, None
    V = domain.defining_potential(g.n)
    Pi, _ = modified_newton(g, V, domain.level, p, domain.outward_sign)
    return E, Pi


# ---------------------------------------------------------------------------
# conformal fields in the half-space chart


def _ambient_gradient(c: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Gradient on the hyperboloid of ``V_c`` as an ambient vector."""
    ct = minkowski_metric(x.shape[-1] - 1) @ c
    q = -ct[0] * x[..., 0] + x[..., 1:] @ ct[1:]
    return ct + q[..., None] * x


def _boost_field(x: np.ndarray, a: int) -> np.ndarray:
    Y = np.zeros_like(x)
    Y[..., a] = x[..., 0]
    Y[..., 0] = x[..., a]
    return Y


def horo_field_ambient(x: np.ndarray, a: Optional[int] = None) -> np.ndarray:
    """``X`` (``a is None``) or ``X_a`` as ambient vectors at hyperboloid points."""
    m = x.shape[-1]
    ch = np.zeros(m)
    ch[0], ch[1] = 1.0, -1.0
    out = -_ambient_gradient(ch, x) - _boost_field(x, 1)
    if a is not None:
        ca = np.zeros(m)
        ca[a] = 1.0
        out = out + _ambient_gradient(ca, x) - _boost_field(x, a)
    return out


def ambient_to_halfspace_jacobian(x: np.ndarray) -> np.ndarray:
    """Jacobian of ``x -> (1, x_2, ..., x_n) / (x_0 - x_1)`` (rows: z, columns: x)."""
    m = x.shape[-1]
    n = m - 1
    d = x[..., 0] - x[..., 1]
    J = np.zeros(x.shape[:-1] + (n, m))
    J[..., 0, 0] = -1.0 / d**2
    J[..., 0, 1] = 1.0 / d**2
    for j in range(1, n):
        J[..., j, 0] = -x[..., j + 1] / d**2
        J[..., j, 1] = x[..., j + 1] / d**2
        J[..., j, j + 1] = 1.0 / d
    return J


def horo_field(z, a: Optional[int] = None) -> np.ndarray:
    """The conformal field ``X`` or ``X_a`` in half-space components."""
    z = np.asarray(z, dtype=float)
    x = convert_coords(z, "halfspace", "hyperboloid")
    return np.einsum("...ij,...j->...i", ambient_to_halfspace_jacobian(x), horo_field_ambient(x, a))


def tangency_residual(z, a: Optional[int] = None) -> np.ndarray:
    """``<X, grad V_h>`` on points of the horosphere ``z_1 = 1``; ``dV_h = -dz_1 / z_1^2``."""
    z = np.asarray(z, dtype=float)
    X = horo_field(z, a)
    return -X[..., 0] / z[..., 0] ** 2


# ---------------------------------------------------------------------------
# fluxes


def _perturbed_metric(data: AsymptoticData) -> MetricField:
    # the fluxes are small differences of terms growing like r^2, so the
    # second derivatives of e use the extrapolated stencil
    b = hyperbolic_metric(data.n, data.chart)
    e = MetricField(data.n, data.e, data.de, lambda p: fd_second_extrapolated(data.e, p), data.chart)
    return add_fields(b, e)


def _tangent_coords(T: np.ndarray, gm: np.ndarray, v: np.ndarray) -> np.ndarray:
    # coefficients a with T a = tangential part of v (g-orthogonal projection)
    G = np.einsum("...ia,...ij,...jb->...ab", T, gm, T)
    rhs = np.einsum("...ia,...ij,...j->...a", T, gm, v)
    return np.linalg.solve(G, rhs[..., None])[..., 0]


def chai_terms(data: AsymptoticData, r: float, a: Optional[int] = None,
               orders: QuadratureOrders = QuadratureOrders()) -> tuple[float, float]:
    """``(hemisphere, corner)`` raw flux terms at radius ``r``."""
    if data.domain.kind != "horoball":
        raise ValueError("the curvature fluxes are defined for horoballs")
    if data.domain.chi != 1.0:
        raise ValueError("the conformal fields are tangent to the horosphere z_1 = 1 only")
    rule = build_rule(data.domain, data.n, r, orders)
    g = _perturbed_metric(data)
    E = modified_einstein(g, rule.nodes)
    X = horo_field(rule.nodes, a)
    hemi = math.fsum(rule.weights * np.einsum("pi,pij,pj->p", X, E, rule.mu))
    V = data.domain.defining_potential(data.n)
    Pi, geo = modified_newton(g, V, data.domain.level, rule.corner_nodes, data.domain.outward_sign)
    gm = g.g(rule.corner_nodes)
    Xc = _tangent_coords(geo.tangent, gm, horo_field(rule.corner_nodes, a))
    # the conormal points into the horospherical disk: with this orientation
    # the flux of a boundary-tangent Killing field telescopes to zero
    th = _tangent_coords(geo.tangent, gm, -rule.conormal)
    corner = math.fsum(rule.corner_weights * np.einsum("pa,pab,pb->p", Xc, Pi, th))
    return hemi, corner


def chai_flux(data: AsymptoticData, which="mass", r_schedule: Optional[Sequence[float]] = None,
              orders: QuadratureOrders = QuadratureOrders()) -> MassLimit:
    """Raw curvature flux for ``X`` (``which="mass"``) or ``X_a`` (``which=a``)."""
    if data.domain.kind != "horoball":
        raise ValueError("the curvature fluxes are defined for horoballs")
    a = None if which == "mass" else int(which)
    radii = list(r_schedule) if r_schedule is not None else radius_schedule(data.r0)
    vals = []
    for r in radii:
        hemi, corner = chai_terms(data, r, a, orders)
        vals.append(hemi - corner)
    return richardson(radii, vals)
