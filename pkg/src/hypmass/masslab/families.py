"""Perturbation generators.

Every generator returns :class:`~hypmass.mass.functional.AsymptoticData` in
the working chart of its domain (half-space for horoballs, hyperboloid
spatial coordinates otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..mass.functional import AsymptoticData, working_chart
from ..models import DomainSpec, convert_coords, hyperboloid_lift, minkowski_inner, potential_derivatives
from ..tensors import fd_first, fd_first_extrapolated, hyperbolic_metric, lie_derivative_metric

FAMILIES = ("conformal-decay", "transverse-traceless-decay", "compact-bump", "boundary-graph", "lie-gauge")


def _ambient(p: np.ndarray, chart: str) -> np.ndarray:
    if chart == "hyperboloid":
        return hyperboloid_lift(p)
    return convert_coords(p, chart, "hyperboloid")


def _timelike(n: int, center) -> np.ndarray:
    if center is None:
        T = np.zeros(n + 1)
        T[0] = 1.0
        return T
    T = np.asarray(center, dtype=float)
    q = minkowski_inner(T, T)
    if q >= 0 or T[0] <= 0:
        raise ValueError("center must be a future timelike vector")
    return T / np.sqrt(-q)


def zero_data(domain: DomainSpec, n: int, r0: float = 2.0) -> AsymptoticData:
    def e(p):
        return np.zeros(p.shape + (n,))

    def de(p):
        return np.zeros(p.shape[:-1] + (n, n, n))

    return AsymptoticData(domain, n, e, np.inf, r0, de, "zero")


def conformal_decay(domain: DomainSpec, n: int, amplitude: float, sigma: float, center=None,
                    r0: float = 2.0) -> AsymptoticData:
    """``e = A W^{-sigma} b`` with ``W = -<T, x>`` for a unit timelike ``T``."""
    chart = working_chart(domain)
    b = hyperbolic_metric(n, chart)
    T = _timelike(n, center)

    def e(p):
        W = -minkowski_inner(T, _ambient(p, chart))
        return (amplitude * W ** (-sigma))[..., None, None] * b.g(p)

    return AsymptoticData(domain, n, e, sigma, r0, None, "conformal-decay")


def transverse_traceless_decay(domain: DomainSpec, n: int, amplitude: float, sigma: float,
                               r0: float = 2.0) -> AsymptoticData:
    """Trace-free (with respect to ``b``) anisotropic perturbation decaying at rate ``sigma``.

    Built from ``dV_(2)^2 - dV_(n)^2`` with its ``b``-trace removed; it is not
    divergence free.
    """
    if n < 3:
        raise ValueError("needs n >= 3")
    chart = working_chart(domain)
    b = hyperbolic_metric(n, chart)
    c2 = np.zeros(n + 1)
    c2[2] = 1.0
    cn = np.zeros(n + 1)
    cn[n] = 1.0
    c0 = np.zeros(n + 1)
    c0[0] = 1.0

    def e(p):
        g = b.g(p)
        _, d2, _ = potential_derivatives(c2, p, chart)
        _, dn, _ = potential_derivatives(cn, p, chart)
        W = potential_derivatives(c0, p, chart)[0]
        h = d2[..., :, None] * d2[..., None, :] - dn[..., :, None] * dn[..., None, :]
        tr = np.einsum("...ij,...ij->...", np.linalg.inv(g), h)
        h = h - (tr / n)[..., None, None] * g
        return (amplitude * W ** (-sigma - 2.0))[..., None, None] * h

    return AsymptoticData(domain, n, e, sigma, r0, None, "transverse-traceless-decay")


def _raise_index(chart: str, p: np.ndarray, form: np.ndarray) -> np.ndarray:
    """``b^{-1} form`` in closed form: ``I + p p^T`` on the hyperboloid chart,
    ``z_1^2 I`` on the half-space."""
    if chart == "hyperboloid":
        return form + p * np.sum(p * form, axis=-1, keepdims=True)
    if chart == "halfspace":
        return p[..., :1] ** 2 * form
    raise ValueError(f"no closed-form inverse metric for chart {chart!r}")


def _smooth_bump(t: np.ndarray) -> np.ndarray:
    """``exp(1 - 1/(1 - t^2))`` on ``|t| < 1``, zero outside; equals 1 at 0."""
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    return out


def compact_bump(domain: DomainSpec, n: int, amplitude: float, center_r: float = 3.0, width: float = 1.5,
                 seed: int = 0, r0: float = 2.0) -> AsymptoticData:
    """Compactly supported symmetric perturbation around ``|x'| = center_r``."""
    chart = working_chart(domain)
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n))
    S = 0.5 * (M + M.T)
    b = hyperbolic_metric(n, chart)

    def e(p):
        x = _ambient(p, chart)
        r = np.sqrt(np.maximum(x[..., 0] ** 2 - 1.0, 0.0))
        w = _smooth_bump((r - center_r) / width)
        return (amplitude * w)[..., None, None] * (b.g(p) + 0.5 * S)

    return AsymptoticData(domain, n, e, np.inf, r0, None, "compact-bump")


# ---------------------------------------------------------------------------
# boundary graphs


@dataclass(frozen=True)
class GraphProfile:
    """Deformation ``F(x') = x' + phi(w) psi(x_1 - s) e_1`` of an equidistant half-space.

    ``phi`` is either a compact bump (``sigma=None``) or a decaying profile
    ``A (1 + |w - w0|^2)^{-(sigma + 1)/2}``.
    """

    amplitude: float
    center: np.ndarray
    width: float = 1.0
    sigma: Optional[float] = None
    cutoff: float = 0.75

    def phi(self, w):
        d = w - self.center
        q = np.sum(d * d, axis=-1)
        if self.sigma is None:
            return self.amplitude * _smooth_bump(np.sqrt(q) / self.width)
        return self.amplitude * (1.0 + q / self.width**2) ** (-(self.sigma + 1.0) / 2.0)

    def dphi(self, w):
        return fd_first(self.phi, w, 1e-6)

    def psi(self, t):
        return _smooth_bump(t / self.cutoff)

    def dpsi(self, t):
        h = 1e-6
        return (self.psi(t + h) - self.psi(t - h)) / (2 * h)


def boundary_graph_map(profile: GraphProfile, s: float):
    def F(p):
        out = p.copy()
        out[..., 0] = p[..., 0] + profile.phi(p[..., 1:]) * profile.psi(p[..., 0] - s)
        return out

    def DF(p):
        n = p.shape[-1]
        J = np.broadcast_to(np.eye(n), p.shape[:-1] + (n, n)).copy()
        t = p[..., 0] - s
        J[..., 0, 0] += profile.phi(p[..., 1:]) * profile.dpsi(t)
        J[..., 0, 1:] += profile.psi(t)[..., None] * profile.dphi(p[..., 1:])
        return J

    return F, DF


def boundary_graph(domain: DomainSpec, n: int, profile: GraphProfile, r0: float = 2.0) -> AsymptoticData:
    """``e = F^* b - b``: the model pulled back by a boundary-moving diffeomorphism.

    The deformed metric is hyperbolic (so the interior energy condition holds
    with equality) while the boundary ``{x_1 = s}`` becomes the graph
    ``x_1 = s + phi(w)`` of the model.
    """
    if domain.kind != "equidistant":
        raise ValueError("boundary graphs deform equidistant boundaries")
    b = hyperbolic_metric(n, "hyperboloid")
    F, DF = boundary_graph_map(profile, domain.s)

    def e(p):
        J = DF(p)
        return np.einsum("...ai,...ab,...bj->...ij", J, b.g(F(p)), J) - b.g(p)

    sigma = np.inf if profile.sigma is None else profile.sigma
    return AsymptoticData(domain, n, e, sigma, r0, None, "boundary-graph")


def random_bump_profile(n: int, rng: np.random.Generator, amplitude: float = 0.2) -> GraphProfile:
    center = rng.uniform(-1.0, 1.0, size=n - 1)
    return GraphProfile(amplitude * rng.uniform(0.5, 1.5), center, width=rng.uniform(0.8, 1.6))


# ---------------------------------------------------------------------------
# gauge data


@dataclass(frozen=True)
class GaugeField:
    """Compactly supported vector field tangent to the boundary of ``domain``."""

    domain: DomainSpec
    n: int
    coeffs: np.ndarray
    phases: np.ndarray
    center_r: float
    width: float

    def __call__(self, p):
        chart = working_chart(self.domain)
        x = _ambient(p, chart)
        r = np.sqrt(np.maximum(x[..., 0] ** 2 - 1.0, 0.0))
        bump = _smooth_bump((r - self.center_r) / self.width)
        w = np.einsum("ij,...j->...i", self.coeffs, np.sin(p / 3.0 + self.phases))
        # make w tangent to the level sets of the defining function
        V = self.domain.defining_potential(self.n)
        val, grad, _ = V.derivatives(p, chart)
        up = _raise_index(chart, p, grad)
        nn = np.einsum("...i,...i->...", grad, up)
        tang = w - (np.einsum("...i,...i->...", grad, w) / nn)[..., None] * up
        normal = ((val - self.domain.level) * np.sin(p[..., -1]))[..., None] * up / np.sqrt(nn)[..., None]
        return bump[..., None] * (tang + normal)


def random_gauge_field(domain: DomainSpec, n: int, rng: np.random.Generator, center_r: float = 5.0,
                       width: float = 3.0) -> GaugeField:
    return GaugeField(domain, n, rng.normal(size=(n, n)), rng.uniform(0, 2 * np.pi, size=n), center_r, width)


def lie_gauge(domain: DomainSpec, n: int, zeta: GaugeField, r0: float = 2.0) -> AsymptoticData:
    """``e = L_zeta b`` exactly (Jacobian of ``zeta`` by central differences).

    ``de`` uses the extrapolated stencil: the nested differences of the plain
    stencil leave an error comparable to the gauge charge being tested.
    """
    b = hyperbolic_metric(n, working_chart(domain))

    def e(p):
        return lie_derivative_metric(zeta, b, p)

    def de(p):
        return fd_first_extrapolated(e, p, 1e-3)

    return AsymptoticData(domain, n, e, np.inf, r0, de, "lie-gauge")


def build_family(family: str, domain: DomainSpec, n: int, params: dict, seed: int = 0) -> AsymptoticData:
    rng = np.random.default_rng(seed)
    amp = float(params.get("amplitude", 0.1))
    sigma = float(params.get("sigma", n + 1))
    r0 = float(params.get("r0", 2.0))
    if family == "conformal-decay":
        return conformal_decay(domain, n, amp, sigma, params.get("center"), r0)
    if family == "transverse-traceless-decay":
        return transverse_traceless_decay(domain, n, amp, sigma, r0)
    if family == "compact-bump":
        return compact_bump(domain, n, amp, float(params.get("center_r", 3.0)), float(params.get("width", 1.5)),
                            seed, r0)
    if family == "boundary-graph":
        # the profile decays only when profile_sigma is given; otherwise it is a compact bump
        ps = params.get("profile_sigma")
        prof = GraphProfile(amp, np.asarray(params.get("center", np.zeros(n - 1)), dtype=float),
                            float(params.get("width", 1.0)), None if ps is None else float(ps))
        return boundary_graph(domain, n, prof, r0)
    if family == "lie-gauge":
        z = random_gauge_field(domain, n, rng, float(params.get("center_r", 5.0)), float(params.get("width", 3.0)))
        if amp != 1.0:
            z = GaugeField(z.domain, z.n, amp * z.coeffs, z.phases, z.center_r, z.width)
        return lie_gauge(domain, n, z, r0)
    raise ValueError(f"unknown perturbation family {family!r}")
