"""Mass functionals, their large-radius limits and the derived invariants."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..models import (DomainSpec, LorentzIsometry, StaticPotential, convert_coords, hyperboloid_lift,
                      minkowski_metric, potential_derivatives)
from ..tensors import fd_first, hyperbolic_metric, tensor_norm
from .charge import charge_from_parts, charge_parts
from .conventions import OUTWARD, NormalConventions
from .quadrature import QuadratureOrders, QuadratureRule, build_rule

CHUNK = 2048


class InadmissiblePotentialError(ValueError):
    """The potential is not a static potential of the chosen boundary problem."""


class NonConvergenceError(RuntimeError):
    pass


def working_chart(domain: DomainSpec) -> str:
    return "halfspace" if domain.kind == "horoball" else "hyperboloid"


@dataclass(frozen=True)
class AsymptoticData:
    """Perturbation ``e = g - b`` in the working chart of ``domain``.

    The working chart is the half-space for horoballs and the hyperboloid
    (spatial coordinates) otherwise. ``derivative`` optionally returns
    ``d_k e_ij``; central differences are used when it is absent.
    """

    domain: DomainSpec
    n: int
    perturbation: Callable[[np.ndarray], np.ndarray]
    sigma: float
    r0: float = 2.0
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = ""

    @property
    def chart(self) -> str:
        return working_chart(self.domain)

    def e(self, p) -> np.ndarray:
        return self.perturbation(np.asarray(p, dtype=float))

    def de(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.derivative is not None:
            return self.derivative(p)
        return fd_first(self.perturbation, p)

    def radial(self, p) -> np.ndarray:
        """``r = |x'|``, the radial coordinate of the hyperboloid chart."""
        x = convert_coords(p, self.chart, "hyperboloid") if self.chart != "hyperboloid" else hyperboloid_lift(p)
        return np.sqrt(np.maximum(x[..., 0] ** 2 - 1.0, 0.0))

    def decay_profile(self, samples: int = 200, seed: int = 0, shells: int = 4) -> np.ndarray:
        """Maximum of ``|e|_b r^sigma`` on shells ``r in [r0 2^k, r0 2^{k+1}]``."""
        rng = np.random.default_rng(seed)
        per = max(1, samples // shells)
        out = []
        b = hyperbolic_metric(self.n, self.chart)
        for k in range(shells):
            pts = sample_domain(self.domain, self.n, per, rng, self.r0 * 2**k, self.r0 * 2 ** (k + 1))
            pts = convert_coords(pts, "hyperboloid", self.chart) if self.chart != "hyperboloid" else pts[..., 1:]
            r = self.radial(pts)
            out.append(float(np.max(tensor_norm(self.e(pts), b.g(pts)) * r**self.sigma)))
        return np.array(out)

    def decay_bounded(self, factor: float = 4.0, **kw) -> bool:
        prof = self.decay_profile(**kw)
        ref = max(prof[0], 1e-300)
        return bool(np.all(prof <= factor * ref) or np.max(prof) < 1e-14)


def sample_domain(domain: DomainSpec, n: int, count: int, rng: np.random.Generator,
                  rmin: float, rmax: float) -> np.ndarray:
    """Random hyperboloid points of the domain with ``|x'|`` in ``[rmin, rmax]``."""
    out = []
    while sum(len(o) for o in out) < count:
        d = rng.normal(size=(4 * count, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = rng.uniform(rmin, rmax, size=(4 * count, 1))
        x = hyperboloid_lift(r * d)
        out.append(x[domain.contains(x, "hyperboloid")])
    return np.concatenate(out)[:count]


# ---------------------------------------------------------------------------
# the functional at fixed radius


@dataclass(frozen=True)
class RadiusResult:
    radius: float
    hemisphere: float
    corner: float

    @property
    def total(self) -> float:
        return self.hemisphere - self.corner


def check_admissible(domain: DomainSpec, V: StaticPotential) -> None:
    if not domain.is_admissible(V):
        if domain.kind == "equidistant":
            raise InadmissiblePotentialError("V_(1) is not a static potential of the equidistant problem")
        raise InadmissiblePotentialError("horospherical problems admit only V_h and V_(j), j >= 2")


def _hemisphere_chunk(data: AsymptoticData, coeffs: Sequence[np.ndarray], nodes, weights, mu) -> np.ndarray:
    """Hemisphere sums for several potentials sharing one evaluation of ``e`` and ``de``."""
    b = hyperbolic_metric(data.n, data.chart)
    parts = charge_parts(data.e(nodes), data.de(nodes), b.g(nodes), b.dg(nodes))
    out = np.empty(len(coeffs))
    for k, c in enumerate(coeffs):
        val, grad, _ = potential_derivatives(c, nodes, data.chart)
        U = charge_from_parts(parts, val, grad)
        out[k] = float(np.sum(weights * np.einsum("pi,pi->p", U, mu)))
    return out


def _corner_sum(data: AsymptoticData, coeffs: np.ndarray, rule: QuadratureRule, conv: NormalConventions) -> float:
    p = rule.corner_nodes
    val = potential_derivatives(coeffs, p, data.chart)[0]
    e = data.e(p)
    eta = conv.eta * rule.eta
    th = conv.conormal * rule.conormal
    return float(np.sum(rule.corner_weights * val * np.einsum("pi,pij,pj->p", eta, e, th)))


def _chunks(count: int):
    return [(s, min(count, s + CHUNK)) for s in range(0, count, CHUNK)]


def radius_terms_many(data: AsymptoticData, potentials: Sequence[StaticPotential], rule: QuadratureRule,
                      conventions: NormalConventions = OUTWARD,
                      pool: Optional[ThreadPoolExecutor] = None) -> list[RadiusResult]:
    """:func:`radius_terms` for several potentials at once."""
    for V in potentials:
        check_admissible(data.domain, V)
    coeffs = [V.coefficients for V in potentials]
    mu = conventions.mu * rule.mu
    spans = _chunks(len(rule.weights))

    def work(span):
        a, b = span
        return _hemisphere_chunk(data, coeffs, rule.nodes[a:b], rule.weights[a:b], mu[a:b])

    parts = list(pool.map(work, spans)) if pool is not None else [work(s) for s in spans]
    out = []
    for k, c in enumerate(coeffs):
        # fixed-order reduction keeps results independent of the worker count
        hemi = math.fsum(part[k] for part in parts)
        out.append(RadiusResult(rule.radius, hemi, _corner_sum(data, c, rule, conventions)))
    return out


def radius_terms(data: AsymptoticData, V: StaticPotential, rule: QuadratureRule,
                 conventions: NormalConventions = OUTWARD, pool: Optional[ThreadPoolExecutor] = None) -> RadiusResult:
    return radius_terms_many(data, [V], rule, conventions, pool)[0]


def mass_at_radius(data: AsymptoticData, V: StaticPotential, rule: QuadratureRule,
                   conventions: NormalConventions = OUTWARD, include_corner: bool = True,
                   pool: Optional[ThreadPoolExecutor] = None) -> float:
    res = radius_terms(data, V, rule, conventions, pool)
    return res.total if include_corner else res.hemisphere


# ---------------------------------------------------------------------------
# limits


@dataclass(frozen=True)
class MassLimit:
    value: float
    error: float
    converged: bool
    radii: tuple
    values: tuple
    rate: Optional[float] = None


def richardson(radii: Sequence[float], values: Sequence[float], exponents: Optional[Sequence[float]] = None,
               noise: float = 1e-12) -> MassLimit:
    """Richardson table for ``m(r) = m + sum_j a_j r^{-p_j}`` on a geometric schedule.

    The default exponents are ``1, 2, 3, ...``. Convergence is declared when the
    last two diagonal entries of the table agree better than the previous pair.
    """
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(v) < 3:
        raise ValueError("need at least three radii")
    ratio = r[1] / r[0]
    if not np.allclose(r[1:] / r[:-1], ratio, rtol=1e-12):
        raise ValueError("Richardson extrapolation needs a geometric radius schedule")
    K = len(v) - 1
    p = list(exponents) if exponents is not None else list(range(1, K + 1))
    scale = max(1.0, float(np.max(np.abs(v))))
    if np.max(np.abs(np.diff(v)[-2:])) <= noise * scale:
        return MassLimit(float(v[-1]), float(abs(v[-1] - v[-2])), True, tuple(r), tuple(v), None)
    table = [v.copy()]
    for j in range(1, K + 1):
        f = ratio ** p[j - 1]
        prev = table[-1]
        table.append((f * prev[1:] - prev[:-1]) / (f - 1.0))
    diag = np.array([t[-1] for t in table])
    d = np.abs(np.diff(diag))
    est = float(diag[-1])
    err = float(np.max(d[-2:]))
    floor = noise * scale
    converged = bool(len(d) < 3 or err <= max(0.5 * d[-3], floor))
    # the raw sequence must itself settle for the limit to make sense
    raw = np.abs(np.diff(v))
    if raw[-1] > raw[-2] * 1.05 and raw[-1] > 1e-10 * scale:
        converged = False
    return MassLimit(est, err, converged, tuple(r), tuple(v), float(p[0]))


def radius_schedule(r0: float, levels: int = 5) -> list[float]:
    return [r0 * 2.0**k for k in range(levels + 1)]


def mass_limit(data: AsymptoticData, V: StaticPotential, r_schedule: Optional[Sequence[float]] = None,
               orders: QuadratureOrders = QuadratureOrders(), conventions: NormalConventions = OUTWARD,
               include_corner: bool = True, threads: int = 1) -> MassLimit:
    return mass_limits(data, [V], r_schedule, orders, conventions, include_corner, threads)[0]


class _null_pool:
    def __enter__(self):
        return None

    def __exit__(self, *exc):
        return False


# ---------------------------------------------------------------------------
# mass vectors


@dataclass(frozen=True)
class MassVector:
    components: np.ndarray
    errors: np.ndarray = field(default=None)  # type: ignore[assignment]
    kind: str = "equidistant"

    def classification(self, tol: float = 1e-8) -> str:
        P = self.components
        if self.kind != "equidistant":
            return "zero" if np.max(np.abs(P)) <= tol else "horospherical"
        if np.max(np.abs(P)) <= tol:
            return "zero"
        q = P[0] ** 2 - np.sum(P[1:] ** 2)
        if abs(q) <= tol * max(1.0, P[0] ** 2):
            return "null"
        return "timelike" if q > 0 else "spacelike"


def lorentz_norm(P: MassVector, tol: float = 1e-8) -> Optional[float]:
    """``sqrt(P_0^2 - sum P_a^2)`` when causal, else ``None``."""
    cls = P.classification(tol)
    if cls in ("zero", "null"):
        return 0.0
    if cls == "timelike":
        c = P.components
        return float(math.sqrt(c[0] ** 2 - np.sum(c[1:] ** 2)))
    return None


def mass_limits(data: AsymptoticData, potentials: Sequence[StaticPotential], r_schedule=None,
                orders: QuadratureOrders = QuadratureOrders(), conventions: NormalConventions = OUTWARD,
                include_corner: bool = True, threads: int = 1) -> list[MassLimit]:
    """Limits for several potentials, sharing every evaluation of the data."""
    radii = list(r_schedule) if r_schedule is not None else radius_schedule(data.r0)
    if len(radii) < 3 or np.any(np.diff(radii) <= 0):
        raise ValueError("radius schedule must be increasing with at least three radii")
    table = []
    with ThreadPoolExecutor(max_workers=threads) if threads > 1 else _null_pool() as pool:
        for r in radii:
            rule = build_rule(data.domain, data.n, r, orders, conventions.complement_corner)
            res = radius_terms_many(data, potentials, rule, conventions, pool)
            table.append([x.total if include_corner else x.hemisphere for x in res])
    vals = np.array(table)
    return [richardson(radii, vals[:, k]) for k in range(len(potentials))]


def mass_vector(data: AsymptoticData, r_schedule=None, orders: QuadratureOrders = QuadratureOrders(),
                conventions: NormalConventions = OUTWARD, threads: int = 1, include_corner: bool = True):
    """Components ``P_0, P_2, ..., P_n`` (equidistant) or ``m_h, C^2..C^n`` (horospherical)."""
    pots = data.domain.admissible_potentials(data.n)
    lims = mass_limits(data, pots, r_schedule, orders, conventions, include_corner, threads)
    comps = np.array([m.value for m in lims])
    errs = np.array([m.error for m in lims])
    kind = "equidistant" if data.domain.kind == "equidistant" else "horospherical"
    return MassVector(comps, errs, kind), lims


def horo_invariants(data: AsymptoticData, r_schedule=None, orders: QuadratureOrders = QuadratureOrders(),
                    conventions: NormalConventions = OUTWARD, threads: int = 1):
    """``(m_h, C_h)`` with ``m_h`` the mass of ``V_h`` and ``C_h^a`` that of ``V_(a)``."""
    if not data.domain.is_horospherical:
        raise ValueError("horospherical invariants need a horoball or its complement")
    P, lims = mass_vector(data, r_schedule, orders, conventions, threads)
    return float(P.components[0]), P.components[1:].copy()


# ---------------------------------------------------------------------------
# transport of data by isometries


def _chart_map_jacobian(A: np.ndarray, chart: str, p: np.ndarray):
    """Image of ``p`` under the isometry with matrix ``A`` and its Jacobian."""
    def image(q):
        if chart == "hyperboloid":
            return (hyperboloid_lift(q) @ A.T)[..., 1:]
        return convert_coords(convert_coords(q, chart, "hyperboloid") @ A.T, "hyperboloid", chart)

    if chart == "hyperboloid":
        x = hyperboloid_lift(p)
        dlift = np.concatenate([(p / x[..., :1])[..., None, :], np.broadcast_to(np.eye(p.shape[-1]), p.shape[:-1] + (p.shape[-1],) * 2)], axis=-2)
        J = np.einsum("ab,...bk->...ak", A[1:], dlift)  # [a, k] = d image_a / d p_k
        return image(p), J
    J = np.swapaxes(fd_first(image, p, 1e-5), -1, -2)
    return image(p), J


def pushforward_data(data: AsymptoticData, A, label: str = "") -> AsymptoticData:
    """Data ``(A^{-1})^* e`` for an isometry ``A`` preserving the domain."""
    M = A.matrix if hasattr(A, "matrix") else np.asarray(A, dtype=float)
    LorentzIsometry(M)
    eta = minkowski_metric(M.shape[0] - 1)
    Minv = eta @ M.T @ eta
    chart = data.chart

    def e_new(p):
        q, J = _chart_map_jacobian(Minv, chart, p)
        return np.swapaxes(J, -1, -2) @ data.e(q) @ J

    return AsymptoticData(data.domain, data.n, e_new, data.sigma, data.r0, None, label or data.label)


def rho_matrix(A, n: int) -> np.ndarray:
    """Matrix of ``V -> V o A^{-1}`` on coefficient vectors."""
    M = A.matrix if hasattr(A, "matrix") else np.asarray(A, dtype=float)
    eta = minkowski_metric(n)
    return eta @ M @ eta
