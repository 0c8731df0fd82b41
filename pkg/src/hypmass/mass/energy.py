"""Dominant-energy scanners: interior scalar curvature and boundary mean curvature margins."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..models import DomainSpec, convert_coords, hyperboloid_lift
from ..tensors import MetricField, curvature, domain_boundary_geometry
from .functional import sample_domain, working_chart


@dataclass(frozen=True)
class EnergyReport:
    """Minimum margins over the samples and the sampled decay of the weighted margins.

    ``decay`` rows are ``(r, max |r (R + n(n-1))|, max |r (H - (n-1) lambda)|)``
    over the interior and boundary samples falling in each radial shell.
    """

    interior_margin: float
    boundary_margin: float
    interior_argmin: np.ndarray
    boundary_argmin: np.ndarray
    decay: np.ndarray

    @property
    def holds(self) -> bool:
        return self.interior_margin >= 0.0 and self.boundary_margin >= 0.0


def boundary_points(domain: DomainSpec, n: int, w: np.ndarray) -> np.ndarray:
    """Boundary points parametrized by ``w`` in ``R^{n-1}``, in the domain's working chart.

    ``w`` is ``(x_2..x_n)`` on hyperboloid-chart boundaries and ``(z_2..z_n)`` on
    the horosphere ``z_1 = 1/chi``.
    """
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != n - 1:
        raise ValueError("boundary parameters have n-1 components")
    if domain.kind == "horoball":
        z1 = np.full(w.shape[:-1] + (1,), 1.0 / domain.chi)
        return np.concatenate([z1, w], axis=-1)
    if domain.kind == "equidistant":
        x1 = np.full(w.shape[:-1] + (1,), domain.s)
    else:
        chi = domain.chi
        x1 = ((1.0 + np.sum(w * w, axis=-1) - chi * chi) / (2.0 * chi))[..., None]
    return np.concatenate([x1, w], axis=-1)


def _radius(p: np.ndarray, chart: str) -> np.ndarray:
    x = hyperboloid_lift(p) if chart == "hyperboloid" else convert_coords(p, chart, "hyperboloid")
    return np.sqrt(np.maximum(x[..., 0] ** 2 - 1.0, 0.0))


def scalar_margin(g: MetricField, p) -> np.ndarray:
    """``R_g + n(n-1)``."""
    return curvature(g, p).scalar + g.n * (g.n - 1)


def mean_curvature_margin(g: MetricField, domain: DomainSpec, p) -> np.ndarray:
    """``H_g - (n-1) lambda`` on the boundary (``H_g + (n-1)`` for horoball complements)."""
    geo = domain_boundary_geometry(g, domain, p)
    return geo.mean_curvature - (g.n - 1) * domain.umbilicity


def _shell_max(r: np.ndarray, vals: np.ndarray, edges: np.ndarray) -> np.ndarray:
    out = np.full(len(edges) - 1, np.nan)
    idx = np.digitize(r, edges) - 1
    for k in range(len(out)):
        sel = idx == k
        if np.any(sel):
            out[k] = float(np.max(np.abs(r[sel] * vals[sel])))
    return out


def energy_scan(g: MetricField, domain: DomainSpec, interior: Optional[np.ndarray] = None,
                boundary: Optional[np.ndarray] = None, count: int = 400, rmax: float = 8.0,
                seed: int = 0) -> EnergyReport:
    """Scan ``R_g + n(n-1)`` and ``H_g - (n-1) lambda`` over sample points.

    Without explicit samples, ``count`` random interior points with ``|x'| <= rmax``
    and ``count`` boundary points with ``|w| <= rmax`` are drawn.
    """
    n = g.n
    chart = g.chart or working_chart(domain)
    rng = np.random.default_rng(seed)
    if interior is None:
        x = sample_domain(domain, n, count, rng, 0.0, rmax)
        interior = x[:, 1:] if chart == "hyperboloid" else convert_coords(x, "hyperboloid", chart)
    if boundary is None:
        d = rng.normal(size=(count, n - 1))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        boundary = boundary_points(domain, n, d * rng.uniform(0.0, rmax, size=(count, 1)))
    interior = np.asarray(interior, dtype=float)
    boundary = np.asarray(boundary, dtype=float)
    rm = scalar_margin(g, interior)
    hm = mean_curvature_margin(g, domain, boundary)
    ri = _radius(interior, chart)
    rb = _radius(boundary, chart)
    top = max(float(np.max(ri, initial=0.0)), float(np.max(rb, initial=0.0)), 1.0)
    edges = np.geomspace(0.5, top * 1.0001, num=max(3, int(math.log2(2 * top)) + 2))
    decay = np.column_stack([np.sqrt(edges[:-1] * edges[1:]), _shell_max(ri, rm, edges), _shell_max(rb, hm, edges)])
    i, j = int(np.argmin(rm)), int(np.argmin(hm))
    return EnergyReport(float(rm[i]), float(hm[j]), interior[i], boundary[j], decay)


def linearized_conformal_scalar(n: int, u: np.ndarray, lap_u: np.ndarray) -> np.ndarray:
    """First-order ``R_g + n(n-1)`` for ``g = (1 + u) b``: ``n(n-1) u - (n-1) Lap_b u``."""
    return n * (n - 1) * u - (n - 1) * lap_u
