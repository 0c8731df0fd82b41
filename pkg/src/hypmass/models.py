"""Coordinate models of hyperbolic n-space and the isometries acting on them.

Three charts are supported:

``hyperboloid``
    points ``x = (x_0, ..., x_n)`` of R^{1,n} with <x, x> = -1, x_0 > 0.
``ball``
    the Poincare ball, ``|y| < 1`` with metric ``Omega(y)^-2 delta``,
    ``Omega = (1 - |y|^2) / 2``.
``halfspace``
    the upper half-space ``z_1 > 0`` with metric ``z_1^-2 delta``.

The ball is the canonical chart: hyperboloid <-> half-space conversions are
routed through it. All low level maps accept arrays with a leading batch shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

Chart = Literal["hyperboloid", "ball", "halfspace"]
CHARTS: tuple[str, ...] = ("hyperboloid", "ball", "halfspace")

HYPERBOLOID_TOL = 1e-12
LORENTZ_TOL = 1e-10


class ChartDomainError(ValueError):
    """A point lies on or outside the domain of its chart."""


class NotAnIsometryError(ValueError):
    """A matrix is not a time-orientation preserving Lorentz transformation."""


class DomainPreservationError(ValueError):
    """An isometry does not preserve the domain it is asked to act on."""


def minkowski_metric(n: int) -> np.ndarray:
    eta = np.eye(n + 1)
    eta[0, 0] = -1.0
    return eta


def minkowski_inner(x, y) -> np.ndarray | float:
    """Lorentzian product ``-x_0 y_0 + sum_{i>=1} x_i y_i`` over the last axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# raw chart maps (array in, array out)


def hyperboloid_lift(xp) -> np.ndarray:
    """Lift spatial coordinates ``x' = (x_1..x_n)`` to the hyperboloid."""
    xp = np.asarray(xp, dtype=float)
    x0 = np.sqrt(1.0 + np.sum(xp * xp, axis=-1))
    return np.concatenate([x0[..., None], xp], axis=-1)


def hyperboloid_to_ball(x) -> np.ndarray:
    # central projection from (-1, 0, ..., 0)
    x = np.asarray(x, dtype=float)
    return x[..., 1:] / (1.0 + x[..., :1])


def ball_to_hyperboloid(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    q = np.sum(y * y, axis=-1, keepdims=True)
    d = 1.0 - q
    return np.concatenate([(1.0 + q) / d, 2.0 * y / d], axis=-1)


def ball_to_halfspace(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    q = np.sum(y * y, axis=-1, keepdims=True)
    shifted = y.copy()
    shifted[..., 0] -= 1.0
    den = np.sum(shifted * shifted, axis=-1, keepdims=True)
    z = 2.0 * y / den
    z[..., :1] = (1.0 - q) / den
    return z


def halfspace_to_ball(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    q = np.sum(z * z, axis=-1, keepdims=True)
    shifted = z.copy()
    shifted[..., 0] += 1.0
    den = np.sum(shifted * shifted, axis=-1, keepdims=True)
    y = 2.0 * z / den
    y[..., :1] = (q - 1.0) / den
    return y


def hyperboloid_to_halfspace(x) -> np.ndarray:
    return ball_to_halfspace(hyperboloid_to_ball(x))


def halfspace_to_hyperboloid(z) -> np.ndarray:
    return ball_to_hyperboloid(halfspace_to_ball(z))


_MAPS = {
    ("hyperboloid", "ball"): hyperboloid_to_ball,
    ("ball", "hyperboloid"): ball_to_hyperboloid,
    ("ball", "halfspace"): ball_to_halfspace,
    ("halfspace", "ball"): halfspace_to_ball,
    ("hyperboloid", "halfspace"): hyperboloid_to_halfspace,
    ("halfspace", "hyperboloid"): halfspace_to_hyperboloid,
}


def convert_coords(coords, source: str, target: str) -> np.ndarray:
    """Convert raw coordinate arrays between charts (no validation)."""
    if source == target:
        return np.array(coords, dtype=float)
    return _MAPS[(source, target)](coords)


def validate_coords(coords, chart: str) -> None:
    c = np.asarray(coords, dtype=float)
    if not np.all(np.isfinite(c)):
        raise ChartDomainError("non-finite coordinates")
    if chart == "ball":
        if np.any(np.sum(c * c, axis=-1) >= 1.0):
            raise ChartDomainError("ball point must satisfy |y| < 1")
    elif chart == "halfspace":
        if np.any(c[..., 0] <= 0.0):
            raise ChartDomainError("half-space point must satisfy z_1 > 0")
    elif chart == "hyperboloid":
        q = minkowski_inner(c, c)
        scale = np.maximum(1.0, c[..., 0] ** 2)
        if np.any(np.abs(np.asarray(q) + 1.0) > HYPERBOLOID_TOL * scale) or np.any(c[..., 0] <= 0):
            raise ChartDomainError("hyperboloid point must satisfy <x,x> = -1, x_0 > 0")
    else:
        raise ValueError(f"unknown chart {chart!r}")


@dataclass(frozen=True)
class ModelPoint:
    """A point of H^n tagged with the chart its coordinates refer to."""

    chart: str
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.ndim != 1:
            raise ValueError("ModelPoint holds a single point")
        validate_coords(c, self.chart)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def dim(self) -> int:
        return self.coords.size - (1 if self.chart == "hyperboloid" else 0)

    def to(self, chart: str) -> "ModelPoint":
        return convert(self, chart)

    @classmethod
    def from_spatial(cls, xp) -> "ModelPoint":
        return cls("hyperboloid", hyperboloid_lift(xp))


def convert(p: ModelPoint, target_chart: str) -> ModelPoint:
    if target_chart not in CHARTS:
        raise ValueError(f"unknown chart {target_chart!r}")
    return ModelPoint(target_chart, convert_coords(p.coords, p.chart, target_chart))


# ---------------------------------------------------------------------------
# static potentials


def potential_basis(coords, chart: str) -> np.ndarray:
    """Values of ``V_(0), ..., V_(n)`` using the closed form of each chart.

    Returns an array of shape ``batch + (n+1,)``.
    """
    c = np.asarray(coords, dtype=float)
    if chart == "hyperboloid":
        return c.copy()
    q = np.sum(c * c, axis=-1, keepdims=True)
    if chart == "ball":
        d = 1.0 - q
        return np.concatenate([(1.0 + q) / d, 2.0 * c / d], axis=-1)
    if chart == "halfspace":
        z1 = c[..., :1]
        return np.concatenate([(q + 1.0) / (2 * z1), (q - 1.0) / (2 * z1), c[..., 1:] / z1], axis=-1)
    raise ValueError(f"unknown chart {chart!r}")


@dataclass(frozen=True)
class StaticPotential:
    """``sum_i c_i V_(i)`` with ``V_(i)`` the restricted Minkowski coordinates."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size < 3:
            raise ValueError("need coefficients c_0..c_n with n >= 2")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def n(self) -> int:
        return self.coefficients.size - 1

    @classmethod
    def basis(cls, i: int, n: int) -> "StaticPotential":
        c = np.zeros(n + 1)
        c[i] = 1.0
        return cls(c)

    @classmethod
    def horospherical(cls, n: int) -> "StaticPotential":
        c = np.zeros(n + 1)
        c[0], c[1] = 1.0, -1.0
        return cls(c)

    def __add__(self, other: "StaticPotential") -> "StaticPotential":
        return StaticPotential(self.coefficients + other.coefficients)

    def __mul__(self, a: float) -> "StaticPotential":
        return StaticPotential(a * self.coefficients)

    __rmul__ = __mul__

    def __call__(self, coords, chart: str = "hyperboloid") -> np.ndarray:
        return potential_basis(coords, chart) @ self.coefficients

    def derivatives(self, coords, chart: str):
        """Value, gradient and Hessian w.r.t. the coordinates of ``chart``.

        For the hyperboloid chart the coordinates are the spatial components
        ``x' = (x_1..x_n)``.
        """
        return potential_derivatives(self.coefficients, coords, chart)


def potential_derivatives(coeffs, coords, chart: str):
    c = np.asarray(coeffs, dtype=float)
    p = np.asarray(coords, dtype=float)
    n = p.shape[-1]
    eye = np.eye(n)
    if chart == "hyperboloid":
        x0 = np.sqrt(1.0 + np.sum(p * p, axis=-1))[..., None]
        val = c[0] * x0[..., 0] + p @ c[1:]
        grad = c[0] * p / x0 + c[1:]
        hess = c[0] * (eye / x0[..., None] - p[..., :, None] * p[..., None, :] / x0[..., None] ** 3)
        return val, grad, hess
    q = np.sum(p * p, axis=-1)
    if chart == "ball":
        num = c[0] * (1.0 + q) + 2.0 * p @ c[1:]
        dnum = 2.0 * c[0] * p + 2.0 * c[1:]
        hnum = 2.0 * c[0] * np.broadcast_to(eye, p.shape + (n,))
        den = 1.0 - q
        dden = -2.0 * p
        hden = -2.0 * np.broadcast_to(eye, p.shape + (n,))
    elif chart == "halfspace":
        a = 0.5 * (c[0] + c[1])
        beta = 0.5 * (c[0] - c[1])
        lin = np.concatenate([[0.0], c[2:]])
        num = a * q + beta + p @ lin
        dnum = 2.0 * a * p + lin
        hnum = 2.0 * a * np.broadcast_to(eye, p.shape + (n,))
        den = p[..., 0]
        dden = np.broadcast_to(eye[0], p.shape)
        hden = np.zeros(p.shape + (n,))
    else:
        raise ValueError(f"unknown chart {chart!r}")
    val = num / den
    v = val[..., None]
    d = den[..., None]
    grad = (dnum - v * dden) / d
    outer = grad[..., :, None] * dden[..., None, :]
    hess = (hnum - outer - np.swapaxes(outer, -1, -2) - v[..., None] * hden) / d[..., None]
    return val, grad, hess


def eval_potential(V: StaticPotential, p: ModelPoint) -> float:
    return float(V(p.coords, p.chart))


def grad_potential_inner(i: int, j: int, x) -> np.ndarray | float:
    """Closed form of ``<grad V_(i), grad V_(j)>_b`` at hyperboloid points ``x``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] - 1
    if not (0 <= i <= n and 0 <= j <= n):
        raise IndexError("potential index out of range")
    eta_ij = (-1.0 if i == 0 else 1.0) if i == j else 0.0
    out = eta_ij + x[..., i] * x[..., j]
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# isometries


def boost_matrix(n: int, rho: float, plane: tuple[int, int] = (0, 1)) -> np.ndarray:
    a = np.eye(n + 1)
    i, j = plane
    a[i, i] = a[j, j] = math.cosh(rho)
    a[i, j] = a[j, i] = math.sinh(rho)
    return a


def rotation_matrix(n: int, R, offset: int = 2) -> np.ndarray:
    """Embed an orthogonal block acting on coordinates ``offset..n``."""
    R = np.asarray(R, dtype=float)
    a = np.eye(n + 1)
    a[offset:offset + R.shape[0], offset:offset + R.shape[0]] = R
    return a


def translation_matrix(U) -> np.ndarray:
    """The exponential of ``U in R^{n-1}`` in the unipotent radical N."""
    U = np.asarray(U, dtype=float)
    m = U.size
    h = 0.5 * float(U @ U)
    a = np.eye(m + 2)
    a[0, 0], a[0, 1] = 1 + h, -h
    a[1, 0], a[1, 1] = h, 1 - h
    a[0, 2:] = U
    a[1, 2:] = U
    a[2:, 0] = U
    a[2:, 1] = -U
    return a


@dataclass(frozen=True)
class LorentzIsometry:
    matrix: np.ndarray

    def __post_init__(self):
        a = np.array(self.matrix, dtype=float)
        m = a.shape[0]
        if a.shape != (m, m) or m < 3:
            raise NotAnIsometryError("expected a square (n+1)x(n+1) matrix, n >= 2")
        eta = minkowski_metric(m - 1)
        scale = max(1.0, float(np.max(np.abs(a))) ** 2)
        if np.max(np.abs(a.T @ eta @ a - eta)) > LORENTZ_TOL * scale:
            raise NotAnIsometryError("A^T eta A != eta")
        if a[0, 0] <= 0:
            raise NotAnIsometryError("A does not preserve time orientation")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @property
    def n(self) -> int:
        return self.matrix.shape[0] - 1

    def inverse(self) -> "LorentzIsometry":
        eta = minkowski_metric(self.n)
        return LorentzIsometry(eta @ self.matrix.T @ eta)

    def __matmul__(self, other: "LorentzIsometry") -> "LorentzIsometry":
        return LorentzIsometry(self.matrix @ other.matrix)


@dataclass(frozen=True)
class ParabolicElement:
    """An element ``rotation * boost * exp(U)`` of the stabilizer of the ideal
    point ``o = [d/dx_0 + d/dx_1]``."""

    rotation: np.ndarray
    boost: float = 0.0
    translation: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError("rotation must be square")
        if np.max(np.abs(R.T @ R - np.eye(R.shape[0]))) > LORENTZ_TOL:
            raise NotAnIsometryError("rotation block is not orthogonal")
        U = np.zeros(R.shape[0]) if self.translation is None else np.array(self.translation, dtype=float)
        if U.shape != (R.shape[0],):
            raise ValueError("translation must have length n-1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", U)

    @property
    def n(self) -> int:
        return self.rotation.shape[0] + 1

    @property
    def matrix(self) -> np.ndarray:
        n = self.n
        return rotation_matrix(n, self.rotation) @ boost_matrix(n, self.boost) @ translation_matrix(self.translation)

    def as_isometry(self) -> LorentzIsometry:
        return LorentzIsometry(self.matrix)


def _matrix_of(A) -> np.ndarray:
    if isinstance(A, ParabolicElement):
        return A.matrix
    if isinstance(A, LorentzIsometry):
        return A.matrix
    return LorentzIsometry(A).matrix


def apply_isometry(A, p: ModelPoint) -> ModelPoint:
    m = _matrix_of(A)
    x = convert_coords(p.coords, p.chart, "hyperboloid")
    if m.shape[0] != x.size:
        raise ValueError("dimension mismatch")
    return ModelPoint(p.chart, convert_coords(m @ x, "hyperboloid", p.chart))


def apply_isometry_coords(A, coords, chart: str) -> np.ndarray:
    """Batched version of :func:`apply_isometry` on raw coordinates."""
    m = _matrix_of(A)
    x = convert_coords(coords, chart, "hyperboloid")
    return convert_coords(x @ m.T, "hyperboloid", chart)


def preserves_equidistant(m: np.ndarray, tol: float = LORENTZ_TOL) -> bool:
    e1 = np.zeros(m.shape[0])
    e1[1] = 1.0
    return bool(np.max(np.abs(m[1] - e1)) <= tol and np.max(np.abs(m[:, 1] - e1)) <= tol)


def preserves_horospheres(m: np.ndarray, tol: float = LORENTZ_TOL) -> bool:
    o = np.zeros(m.shape[0])
    o[:2] = 1.0
    return bool(np.max(np.abs(m @ o - o)) <= tol * max(1.0, float(np.max(np.abs(m)))))


def rho_action(A, V: StaticPotential, variant: str = "s") -> StaticPotential:
    """``V o A^-1`` with a domain-preservation check for the chosen variant."""
    m = _matrix_of(A)
    if variant == "s":
        if not preserves_equidistant(m):
            raise DomainPreservationError("isometry does not preserve the equidistant hypersurfaces")
    elif variant == "h":
        if not preserves_horospheres(m):
            raise DomainPreservationError("isometry does not preserve the horospherical foliation")
    elif variant != "any":
        raise ValueError(f"unknown variant {variant!r}")
    eta = minkowski_metric(m.shape[0] - 1)
    # (A^-1)^T c with A^-1 = eta A^T eta
    return StaticPotential(eta @ m @ eta @ V.coefficients)


def horospherical_split(V: StaticPotential, tol: float = 1e-10) -> tuple[float, np.ndarray]:
    """Coordinates of ``V`` in the basis ``V_h, V_(2), ..., V_(n)``."""
    c = V.coefficients
    if abs(c[0] + c[1]) > tol * max(1.0, float(np.max(np.abs(c)))):
        raise ValueError("potential does not lie in span(V_h, V_(2), ..., V_(n))")
    return float(c[0]), c[2:].copy()


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class DomainSpec:
    """An equidistant half-space, a horoball, or the complement of a horoball.

    ``equidistant``: ``{x_1 <= s}`` bounded by ``{V_(1) = s}``.
    ``horoball``: ``{V_h <= chi}``; ``horoball-complement``: ``{V_h >= chi}``.
    """

    kind: str
    parameter: float = 0.0

    def __post_init__(self):
        if self.kind not in ("equidistant", "horoball", "horoball-complement"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind != "equidistant" and not self.parameter > 0:
            raise ValueError("horospherical domains need chi > 0")

    @classmethod
    def equidistant(cls, s: float) -> "DomainSpec":
        return cls("equidistant", float(s))

    @classmethod
    def horoball(cls, chi: float = 1.0) -> "DomainSpec":
        return cls("horoball", float(chi))

    @classmethod
    def horoball_complement(cls, chi: float = 1.0) -> "DomainSpec":
        return cls("horoball-complement", float(chi))

    @property
    def is_horospherical(self) -> bool:
        return self.kind != "equidistant"

    @property
    def s(self) -> float:
        if self.kind != "equidistant":
            raise AttributeError("s is defined for equidistant domains only")
        return self.parameter

    @property
    def chi(self) -> float:
        if self.kind == "equidistant":
            raise AttributeError("chi is defined for horospherical domains only")
        return self.parameter

    @property
    def umbilicity(self) -> float:
        """``lambda`` in ``Pi = lambda * gamma`` w.r.t. the outward normal."""
        if self.kind == "equidistant":
            s = self.parameter
            return s / math.sqrt(1.0 + s * s)
        return 1.0 if self.kind == "horoball" else -1.0

    @property
    def theta(self) -> float:
        return math.asin(self.umbilicity)

    @property
    def kappa(self) -> float:
        if self.kind == "equidistant":
            return 1.0 / math.sqrt(1.0 + self.parameter**2)
        return 0.0

    @property
    def tau(self) -> float:
        return self.umbilicity

    @property
    def outward_sign(self) -> float:
        # outward normal = outward_sign * grad f / |grad f|
        return -1.0 if self.kind == "horoball-complement" else 1.0

    def defining_potential(self, n: int) -> StaticPotential:
        if self.kind == "equidistant":
            return StaticPotential.basis(1, n)
        return StaticPotential.horospherical(n)

    @property
    def level(self) -> float:
        return self.parameter

    def contains(self, coords, chart: str = "hyperboloid", tol: float = 0.0) -> np.ndarray:
        n = np.asarray(coords).shape[-1] - (1 if chart == "hyperboloid" else 0)
        f = self.defining_potential(n)(coords, chart)
        return self.outward_sign * (f - self.level) <= tol

    def admissible_potentials(self, n: int) -> list[StaticPotential]:
        if self.kind == "equidistant":
            return [StaticPotential.basis(i, n) for i in [0] + list(range(2, n + 1))]
        return [StaticPotential.horospherical(n)] + [StaticPotential.basis(j, n) for j in range(2, n + 1)]

    def is_admissible(self, V: StaticPotential, tol: float = 1e-12) -> bool:
        c = V.coefficients
        if self.kind == "equidistant":
            return abs(c[1]) <= tol
        return abs(c[0] + c[1]) <= tol
