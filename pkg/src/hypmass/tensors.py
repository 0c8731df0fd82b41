"""Pointwise coordinate tensor calculus.

Index conventions for arrays (batch axes first):

* ``g[..., i, j]``            metric components
* ``dg[..., k, i, j]``        ``d_k g_ij``
* ``ddg[..., k, l, i, j]``    ``d_k d_l g_ij``
* ``gamma[..., k, i, j]``     Christoffel symbol ``Gamma^k_ij``
* ``riem[..., i, k, l, m]``   ``R_iklm`` with ``R_ijij = K (g_ii g_jj - g_ij^2)``
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .models import DomainSpec, StaticPotential, potential_derivatives

FD_STEP_FIRST = 1e-4
FD_STEP_SECOND = 1e-3

ArrayFn = Callable[[np.ndarray], np.ndarray]


class DegenerateMetricError(ValueError):
    """The metric is not positive definite at an evaluated point."""


class CriticalPointError(ValueError):
    """The defining function has vanishing gradient at the requested point."""


# ---------------------------------------------------------------------------
# finite differences on batched array functions


def fd_first(fn: ArrayFn, p: np.ndarray, h: float = FD_STEP_FIRST) -> np.ndarray:
    """Central differences; output axis for the direction is inserted right
    after the batch axes of ``p``."""
    p = np.asarray(p, dtype=float)
    n = p.shape[-1]
    steps = h * np.eye(n)
    plus = fn(p[..., None, :] + steps)
    minus = fn(p[..., None, :] - steps)
    return (plus - minus) / (2.0 * h)


def fd_second(fn: ArrayFn, p: np.ndarray, h: float = FD_STEP_SECOND) -> np.ndarray:
    """Second derivatives with two new axes ``k, l`` after the batch axes."""
    p = np.asarray(p, dtype=float)
    n = p.shape[-1]
    e = h * np.eye(n)
    sp = e[:, None, :] + e[None, :, :]
    sm = e[:, None, :] - e[None, :, :]
    base = p[..., None, None, :]
    f_pp = fn(base + sp)
    f_mm = fn(base - sp)
    f_pm = fn(base + sm)
    f_mp = fn(base - sm)
    return (f_pp - f_pm - f_mp + f_mm) / (4.0 * h * h)


def fd_first_extrapolated(fn: ArrayFn, p: np.ndarray, h: float = FD_STEP_SECOND) -> np.ndarray:
    """Central differences at ``h`` and ``h/2`` combined to cancel the ``h^2`` error."""
    coarse = fd_first(fn, p, h)
    fine = fd_first(fn, p, 0.5 * h)
    return (4.0 * fine - coarse) / 3.0


def fd_second_extrapolated(fn: ArrayFn, p: np.ndarray, h: float = FD_STEP_SECOND) -> np.ndarray:
    """Second differences at ``h`` and ``h/2`` combined to cancel the ``h^2`` error."""
    coarse = fd_second(fn, p, h)
    fine = fd_second(fn, p, 0.5 * h)
    return (4.0 * fine - coarse) / 3.0


# ---------------------------------------------------------------------------
# metric fields


@dataclass(frozen=True)
class MetricField:
    """A Riemannian metric given in coordinates of some chart.

    Missing derivative callables are filled in by central differences.
    ``chart`` names the coordinate system so that static potentials can be
    evaluated in the same coordinates; for ``hyperboloid`` the coordinates are
    the spatial components ``x' = (x_1..x_n)``.
    """

    n: int
    metric: ArrayFn
    first: Optional[ArrayFn] = None
    second: Optional[ArrayFn] = None
    chart: Optional[str] = None
    decay: Optional[float] = None
    fd_first_step: float = FD_STEP_FIRST
    fd_second_step: float = FD_STEP_SECOND

    @property
    def analytic(self) -> bool:
        return self.first is not None and self.second is not None

    def g(self, p) -> np.ndarray:
        return self.metric(np.asarray(p, dtype=float))

    def dg(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.first is not None:
            return self.first(p)
        return fd_first(self.metric, p, self.fd_first_step)

    def ddg(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.second is not None:
            return self.second(p)
        return fd_second(self.metric, p, self.fd_second_step)

    def __add__(self, other: "MetricField") -> "MetricField":
        return add_fields(self, other)

    def with_fd(self) -> "MetricField":
        """Same metric, derivatives forced through finite differences."""
        return MetricField(self.n, self.metric, None, None, self.chart, self.decay)


def add_fields(a: MetricField, b: MetricField, chart: Optional[str] = None) -> MetricField:
    if a.n != b.n:
        raise ValueError("dimension mismatch")
    ch = chart or a.chart or b.chart

    def metric(p):
        return a.g(p) + b.g(p)

    def first(p):
        return a.dg(p) + b.dg(p)

    def second(p):
        return a.ddg(p) + b.ddg(p)

    # route derivatives through each summand so analytic parts stay analytic
    return MetricField(a.n, metric, first, second, ch, b.decay if b.decay is not None else a.decay)


def tensor_field(n: int, fn: ArrayFn, chart: Optional[str] = None, first: Optional[ArrayFn] = None,
                 second: Optional[ArrayFn] = None, decay: Optional[float] = None) -> MetricField:
    """Wrap a symmetric 2-tensor valued function (not necessarily definite)."""
    return MetricField(n, fn, first, second, chart, decay)


def flat_metric(n: int, chart: Optional[str] = None) -> MetricField:
    def metric(p):
        return np.broadcast_to(np.eye(n), p.shape[:-1] + (n, n)).copy()

    def first(p):
        return np.zeros(p.shape[:-1] + (n, n, n))

    def second(p):
        return np.zeros(p.shape[:-1] + (n, n, n, n))

    return MetricField(n, metric, first, second, chart)


def conformal_metric(n: int, phi_jet: Callable, chart: Optional[str] = None) -> MetricField:
    """``e^{2 phi} delta`` with ``phi_jet(p) -> (phi, dphi, ddphi)``."""
    eye = np.eye(n)

    def metric(p):
        phi, _, _ = phi_jet(p)
        return np.exp(2.0 * phi)[..., None, None] * eye

    def first(p):
        phi, d, _ = phi_jet(p)
        w = 2.0 * np.exp(2.0 * phi)[..., None, None, None]
        return w * d[..., :, None, None] * eye

    def second(p):
        phi, d, dd = phi_jet(p)
        w = np.exp(2.0 * phi)[..., None, None]
        coef = (4.0 * d[..., :, None] * d[..., None, :] + 2.0 * dd) * w
        return coef[..., None, None] * eye

    return MetricField(n, metric, first, second, chart)


def _ball_phi(p):
    q = np.sum(p * p, axis=-1)
    om = 0.5 * (1.0 - q)
    d = p / om[..., None]
    n = p.shape[-1]
    dd = np.eye(n) / om[..., None, None] + p[..., :, None] * p[..., None, :] / (om**2)[..., None, None]
    return -np.log(om), d, dd


def _halfspace_phi(p):
    z1 = p[..., 0]
    n = p.shape[-1]
    d = np.zeros_like(p)
    d[..., 0] = -1.0 / z1
    dd = np.zeros(p.shape + (n,))
    dd[..., 0, 0] = 1.0 / z1**2
    return -np.log(z1), d, dd


def _hyperboloid_metric_fns(n: int):
    eye = np.eye(n)

    def metric(p):
        w = 1.0 + np.sum(p * p, axis=-1)
        return eye - p[..., :, None] * p[..., None, :] / w[..., None, None]

    def first(p):
        w = (1.0 + np.sum(p * p, axis=-1))[..., None, None, None]
        # d_k (x_i x_j / w)
        a = eye[:, :, None] * p[..., None, None, :] + eye[:, None, :] * p[..., None, :, None]
        xxx = p[..., :, None, None] * p[..., None, :, None] * p[..., None, None, :]
        return -a / w + 2.0 * xxx / w**2

    def second(p):
        w = (1.0 + np.sum(p * p, axis=-1))[..., None, None, None, None]
        x = p
        # N_ij = x_i x_j, w = 1 + |x|^2, b_ij = delta_ij - N_ij / w
        # d_k d_l (N/w) = N_kl/w - (N_k w_l + N_l w_k)/w^2 - N w_kl / w^2 + 2 N w_k w_l / w^3
        Nk = eye[:, :, None] * x[..., None, None, :] + eye[:, None, :] * x[..., None, :, None]  # [k,i,j]
        Nkl = eye[:, None, :, None] * eye[None, :, None, :] + eye[:, None, None, :] * eye[None, :, :, None]  # [k,l,i,j]
        wk = 2.0 * x
        N = x[..., :, None] * x[..., None, :]
        t1 = Nkl / w
        t2 = (Nk[..., :, None, :, :] * wk[..., None, :, None, None] + Nk[..., None, :, :, :] * wk[..., :, None, None, None]) / w**2
        t3 = N[..., None, None, :, :] * (2.0 * eye)[:, :, None, None] / w**2
        t4 = 2.0 * N[..., None, None, :, :] * (wk[..., :, None] * wk[..., None, :])[..., None, None] / w**3
        return -(t1 - t2 - t3 + t4)

    return metric, first, second


def hyperbolic_metric(n: int, chart: str = "ball") -> MetricField:
    """The model metric ``b`` in analytic form for the given chart."""
    if chart == "ball":
        return conformal_metric(n, _ball_phi, "ball")
    if chart == "halfspace":
        return conformal_metric(n, _halfspace_phi, "halfspace")
    if chart == "hyperboloid":
        m, d1, d2 = _hyperboloid_metric_fns(n)
        return MetricField(n, m, d1, d2, "hyperboloid")
    raise ValueError(f"unknown chart {chart!r}")


# ---------------------------------------------------------------------------
# connection and curvature


def inverse_metric(g: np.ndarray) -> np.ndarray:
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMetricError("metric is not positive definite") from exc
    return np.linalg.inv(g)


def christoffel_from(g: np.ndarray, dg: np.ndarray, ginv: Optional[np.ndarray] = None) -> np.ndarray:
    if ginv is None:
        ginv = inverse_metric(g)
    # lowered[l, i, j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    lowered = 0.5 * (np.einsum("...ijl->...lij", dg) + np.einsum("...jil->...lij", dg) - dg)
    return np.einsum("...kl,...lij->...kij", ginv, lowered)


def christoffel(g: MetricField, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return christoffel_from(g.g(p), g.dg(p))


@dataclass(frozen=True)
class CurvatureData:
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray


def curvature_from(g: np.ndarray, dg: np.ndarray, ddg: np.ndarray) -> CurvatureData:
    ginv = inverse_metric(g)
    gam = christoffel_from(g, dg, ginv)
    # second derivative part: 1/2 (g_im,kl + g_kl,im - g_il,km - g_km,il); ddg[a,b,i,j] = d_a d_b g_ij
    sec = 0.5 * (np.einsum("...klim->...iklm", ddg) + np.einsum("...imkl->...iklm", ddg)
                 - np.einsum("...kmil->...iklm", ddg) - np.einsum("...ilkm->...iklm", ddg))
    glow = np.einsum("...np,...pim->...nim", g, gam)  # g_np Gamma^p_im
    quad = np.einsum("...nkl,...nim->...iklm", gam, glow) - np.einsum("...nkm,...nil->...iklm", gam, glow)
    riem = sec + quad
    ric = np.einsum("...il,...iklm->...km", ginv, riem)
    scal = np.einsum("...km,...km->...", ginv, ric)
    return CurvatureData(riem, ric, scal)


def curvature(g: MetricField, p) -> CurvatureData:
    p = np.asarray(p, dtype=float)
    return curvature_from(g.g(p), g.dg(p), g.ddg(p))


def riemann_symmetry_residual(cd: CurvatureData) -> float:
    r = cd.riemann
    anti1 = r + np.swapaxes(r, -4, -3)
    anti2 = r + np.swapaxes(r, -2, -1)
    pair = r - np.einsum("...iklm->...lmik", r)
    bianchi = r + np.einsum("...iklm->...ilmk", r) + np.einsum("...iklm->...imkl", r)
    return float(max(np.max(np.abs(a)) for a in (anti1, anti2, pair, bianchi)))


def sectional_curvature_residual(g: MetricField, p, K: float = -1.0) -> float:
    p = np.asarray(p, dtype=float)
    gm = g.g(p)
    cd = curvature(g, p)
    model = K * (np.einsum("...il,...km->...iklm", gm, gm) - np.einsum("...im,...kl->...iklm", gm, gm))
    return float(np.max(np.abs(cd.riemann - model)))


def metric_compatibility_residual(g: MetricField, p) -> float:
    """``max |nabla_k g_ij|`` computed from the Christoffel symbols."""
    p = np.asarray(p, dtype=float)
    gm, dg = g.g(p), g.dg(p)
    gam = christoffel_from(gm, dg)
    cov = dg - np.einsum("...lki,...lj->...kij", gam, gm) - np.einsum("...lkj,...il->...kij", gam, gm)
    return float(np.max(np.abs(cov)))


def einstein_divergence(g: MetricField, p, h: float = FD_STEP_FIRST) -> np.ndarray:
    """``div(Ric - R g / 2)`` by differencing the curvature pointwise."""
    p = np.asarray(p, dtype=float)

    def einstein(q):
        cd = curvature(g, q)
        return cd.ricci - 0.5 * cd.scalar[..., None, None] * g.g(q)

    ginv = inverse_metric(g.g(p))
    G = einstein(p)
    dG = fd_first(einstein, p, h)  # [k, i, j]
    gam = christoffel(g, p)
    cov = dG - np.einsum("...lki,...lj->...kij", gam, G) - np.einsum("...lkj,...il->...kij", gam, G)
    return np.einsum("...ki,...kij->...j", ginv, cov)


# ---------------------------------------------------------------------------
# scalar fields and hypersurfaces


@dataclass(frozen=True)
class ScalarField:
    """Function of coordinates with optional analytic gradient and Hessian."""

    value: ArrayFn
    gradient: Optional[ArrayFn] = None
    hessian: Optional[ArrayFn] = None

    def __call__(self, p):
        return self.value(np.asarray(p, dtype=float))

    def grad(self, p):
        p = np.asarray(p, dtype=float)
        if self.gradient is not None:
            return self.gradient(p)
        return fd_first(self.value, p)

    def hess(self, p):
        p = np.asarray(p, dtype=float)
        if self.hessian is not None:
            return self.hessian(p)
        if self.gradient is not None:
            return np.swapaxes(fd_first(self.gradient, p), -1, -2)
        return fd_second(self.value, p)

    @classmethod
    def from_potential(cls, V: StaticPotential, chart: str) -> "ScalarField":
        c = V.coefficients
        return cls(
            lambda p: potential_derivatives(c, p, chart)[0],
            lambda p: potential_derivatives(c, p, chart)[1],
            lambda p: potential_derivatives(c, p, chart)[2],
        )


def as_scalar_field(f, chart: Optional[str]) -> ScalarField:
    if isinstance(f, ScalarField):
        return f
    if isinstance(f, StaticPotential):
        if chart is None:
            raise ValueError("metric has no chart; cannot evaluate a static potential")
        return ScalarField.from_potential(f, chart)
    return ScalarField(f)


def covariant_hessian(g: MetricField, f: ScalarField, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return f.hess(p) - np.einsum("...kij,...k->...ij", christoffel(g, p), f.grad(p))


def gradient_inner(g: MetricField, f1, f2, p) -> np.ndarray:
    """``<grad f1, grad f2>_g``."""
    p = np.asarray(p, dtype=float)
    a = as_scalar_field(f1, g.chart).grad(p)
    b = as_scalar_field(f2, g.chart).grad(p)
    return np.einsum("...i,...ij,...j->...", a, inverse_metric(g.g(p)), b)


def tangent_basis(df: np.ndarray) -> np.ndarray:
    """Columns spanning ``ker df`` (Euclidean orthonormal), shape ``(..., n, n-1)``."""
    _, _, vt = np.linalg.svd(df[..., None, :])
    return np.swapaxes(vt[..., 1:, :], -1, -2)


@dataclass(frozen=True)
class HypersurfaceGeometry:
    point: np.ndarray
    normal: np.ndarray  # outward unit normal eta (vector components)
    tangent: np.ndarray  # coordinate tangent basis, columns
    induced_metric: np.ndarray
    second_form: np.ndarray
    mean_curvature: np.ndarray

    @property
    def inward_normal(self) -> np.ndarray:
        return -self.normal

    @property
    def shape_operator(self) -> np.ndarray:
        return np.linalg.solve(self.induced_metric, self.second_form)


def hypersurface_geometry(g: MetricField, f, level: float, p, outward_sign: float = 1.0,
                          level_tol: float = 1e-8) -> HypersurfaceGeometry:
    """Geometry of ``{f = level}`` with outward normal ``outward_sign * grad f``.

    The second fundamental form is ``Pi(X, Y) = <nabla_X eta, Y>``, so the
    unit sphere bounding a flat ball has ``Pi = gamma``.
    """
    p = np.asarray(p, dtype=float)
    sf = as_scalar_field(f, g.chart)
    val = np.asarray(sf(p))
    if np.any(np.abs(val - level) > level_tol * np.maximum(1.0, np.abs(level))):
        raise ValueError("point is not on the level set")
    gm = g.g(p)
    ginv = inverse_metric(gm)
    df = sf.grad(p)
    norm = np.sqrt(np.einsum("...i,...ij,...j->...", df, ginv, df))
    if np.any(norm < 1e-14):
        raise CriticalPointError("defining function is critical at the point")
    eta = outward_sign * np.einsum("...ij,...j->...i", ginv, df) / norm[..., None]
    T = tangent_basis(df)
    gamma_ind = np.einsum("...ia,...ij,...jb->...ab", T, gm, T)
    hess = covariant_hessian(g, sf, p)
    pi = outward_sign * np.einsum("...ia,...ij,...jb->...ab", T, hess, T) / norm[..., None, None]
    H = np.einsum("...ab,...ab->...", np.linalg.inv(gamma_ind), pi)
    return HypersurfaceGeometry(p, eta, T, gamma_ind, pi, H)


def domain_boundary_geometry(g: MetricField, domain: DomainSpec, p) -> HypersurfaceGeometry:
    """Boundary geometry of a model domain, ``g`` given in the chart ``g.chart``."""
    V = domain.defining_potential(g.n)
    return hypersurface_geometry(g, V, domain.level, p, domain.outward_sign)


def static_residual(V, g: MetricField, Lambda: float, p):
    """``(Hess V + Lambda V g - V Ric, Laplacian V + Lambda V)``."""
    p = np.asarray(p, dtype=float)
    sf = as_scalar_field(V, g.chart)
    gm = g.g(p)
    val = np.asarray(sf(p))
    hess = covariant_hessian(g, sf, p)
    ric = curvature(g, p).ricci
    tens = hess + Lambda * val[..., None, None] * gm - val[..., None, None] * ric
    lap = np.einsum("...ij,...ij->...", inverse_metric(gm), hess)
    return tens, lap + Lambda * val


def boundary_static_residual(V, g: MetricField, lam: float, p, f, level: float,
                             outward_sign: float = 1.0):
    """``(Pi - lam * gamma, dV/d eta - lam * V)`` on ``{f = level}``."""
    p = np.asarray(p, dtype=float)
    geo = hypersurface_geometry(g, f, level, p, outward_sign)
    sf = as_scalar_field(V, g.chart)
    dv = np.einsum("...i,...i->...", sf.grad(p), geo.normal)
    return geo.second_form - lam * geo.induced_metric, dv - lam * np.asarray(sf(p))


# ---------------------------------------------------------------------------
# Lie derivatives and norms


def lie_derivative_metric(X, g: MetricField, p, jacobian: Optional[ArrayFn] = None) -> np.ndarray:
    """``(L_X g)_ij = X^k d_k g_ij + g_kj d_i X^k + g_ik d_j X^k``."""
    p = np.asarray(p, dtype=float)
    Xv = X(p)
    J = jacobian(p) if jacobian is not None else fd_first(X, p)  # J[..., i, k] = d_i X^k
    gm = g.g(p)
    dg = g.dg(p)
    return (np.einsum("...k,...kij->...ij", Xv, dg) + np.einsum("...kj,...ik->...ij", gm, J)
            + np.einsum("...ik,...jk->...ij", gm, J))


def lie_derivative_tensor(X, e: ArrayFn, p, h: float = FD_STEP_FIRST) -> np.ndarray:
    """Lie derivative of an arbitrary symmetric 2-tensor field by differences."""
    f = MetricField(np.asarray(p).shape[-1], e, fd_first_step=h)
    return lie_derivative_metric(X, f, p)


def tensor_norm(e: np.ndarray, g: np.ndarray) -> np.ndarray:
    ginv = inverse_metric(g)
    return np.sqrt(np.abs(np.einsum("...ik,...jl,...ij,...kl->...", ginv, ginv, e, e)))


def induced_scalar_curvature(gamma_fn: ArrayFn, w) -> np.ndarray:
    """Scalar curvature of a metric on a chart of a hypersurface (by differences)."""
    m = np.asarray(w).shape[-1]
    return curvature(MetricField(m, gamma_fn), w).scalar


def equidistant_induced_metric(n: int, s: float) -> ArrayFn:
    """Induced metric on ``{x_1 = s}`` in the coordinates ``(x_2, ..., x_n)``."""
    eye = np.eye(n - 1)

    def gam(w):
        den = 1.0 + s * s + np.sum(w * w, axis=-1)
        return eye - w[..., :, None] * w[..., None, :] / den[..., None, None]

    return gam
