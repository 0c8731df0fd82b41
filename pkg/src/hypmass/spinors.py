"""Clifford algebra representations, boundary chirality operators and the
imaginary Killing spinors of the ball model.

Gamma matrices are skew-Hermitian with ``gamma_i^2 = -I``; the Hermitian inner
product ``<a, b> = b^H a`` is conjugate-linear in the second slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np
import scipy.linalg

from . import tensors
from .models import DomainSpec, StaticPotential

Sign = Literal["+", "-"]

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class UnsupportedDimensionError(ValueError):
    """Spinor features require an even dimension."""


class SignMismatchError(ValueError):
    """A Killing connection sign was paired with the opposite boundary projection."""


class NotAnEigenvectorError(ValueError):
    pass


def _sign_value(sign: str) -> int:
    if sign == "+":
        return 1
    if sign == "-":
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``<a, b>`` over the last axis, conjugate-linear in ``b``."""
    return np.sum(a * np.conj(b), axis=-1)


def _hermitian_gammas(n: int) -> list[np.ndarray]:
    # Hermitian generators with e_i e_j + e_j e_i = 2 delta_ij, built by Kronecker products
    if n == 2:
        return [_PAULI[0], _PAULI[1]]
    lower = _hermitian_gammas(n - 2)
    size = lower[0].shape[0]
    out = [np.kron(_PAULI[0], m) for m in lower]
    out.append(np.kron(_PAULI[1], np.eye(size)))
    out.append(np.kron(_PAULI[2], np.eye(size)))
    return out


@dataclass(frozen=True)
class CliffordRep:
    n: int
    gammas: tuple
    chirality: np.ndarray

    @property
    def dim(self) -> int:
        return self.chirality.shape[0]

    def c(self, X) -> np.ndarray:
        """Clifford multiplication by the Euclidean frame vector ``X`` (batched)."""
        X = np.asarray(X)
        return np.einsum("...a,aij->...ij", X, self._stack)

    @property
    def _stack(self) -> np.ndarray:
        return np.stack(self.gammas)

    def invariant_residuals(self) -> dict[str, float]:
        n, eye = self.n, np.eye(self.dim)
        g = self.gammas
        anti = max(np.max(np.abs(g[i] @ g[j] + g[j] @ g[i] + 2.0 * (i == j) * eye)) for i in range(n) for j in range(n))
        skew = max(np.max(np.abs(gi.conj().T + gi)) for gi in g)
        w = self.chirality
        return {
            "anticommutator": float(anti),
            "skew_hermitian": float(skew),
            "chirality_square": float(np.max(np.abs(w @ w - eye))),
            "chirality_anticommutes": float(max(np.max(np.abs(w @ gi + gi @ w)) for gi in g)),
            "chirality_hermitian": float(np.max(np.abs(w - w.conj().T))),
        }


@lru_cache(maxsize=None)
def build_clifford(n: int) -> CliffordRep:
    if n % 2:
        raise UnsupportedDimensionError("spinors require even n")
    if not 2 <= n <= 6:
        raise UnsupportedDimensionError("supported dimensions are n = 2, 4, 6")
    gam = [1j * m for m in _hermitian_gammas(n)]
    prod = np.eye(gam[0].shape[0], dtype=complex)
    for m in gam:
        prod = prod @ m
    omega = (1j ** (n // 2)) * prod
    for m in gam:
        m.setflags(write=False)
    omega.setflags(write=False)
    return CliffordRep(n, tuple(gam), omega)


# ---------------------------------------------------------------------------
# boundary operators


@dataclass(frozen=True)
class BoundaryOp:
    rep: CliffordRep
    theta: float
    normal: np.ndarray
    matrix: np.ndarray = field(repr=False)

    @property
    def kappa(self) -> float:
        return math.cos(self.theta)

    @property
    def tau(self) -> float:
        return math.sin(self.theta)


def q_theta_matrix(rep: CliffordRep, theta: float, nu) -> np.ndarray:
    """``cos(theta) omega c(nu) + sin(theta) i c(nu)`` (batched over ``nu``)."""
    cn = rep.c(nu)
    return math.cos(theta) * (rep.chirality @ cn) + math.sin(theta) * 1j * cn


def q_theta(rep: CliffordRep, theta: float, nu) -> BoundaryOp:
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (rep.n,):
        raise ValueError("normal must be a single vector of length n")
    if abs(float(nu @ nu) - 1.0) > 1e-12:
        raise ValueError("normal must have unit length")
    if not -math.pi / 2 - 1e-15 <= theta <= math.pi / 2 + 1e-15:
        raise ValueError("theta must lie in [-pi/2, pi/2]")
    return BoundaryOp(rep, float(theta), nu, q_theta_matrix(rep, theta, nu))


def q_horo(rep: CliffordRep, nu, sign: Sign = "+") -> BoundaryOp:
    """MIT bag operator ``+- i c(nu)``."""
    return q_theta(rep, _sign_value(sign) * math.pi / 2, nu)


def _tangent_frame(nu: np.ndarray) -> np.ndarray:
    _, _, vt = np.linalg.svd(nu[None, :])
    return vt[1:]


def verify_alg_form(rep: CliffordRep, theta: float, nu) -> dict[str, float]:
    """Residuals of the four algebraic properties of ``Q_theta``."""
    bop = q_theta(rep, theta, nu)
    Q = bop.matrix
    eye = np.eye(rep.dim)
    w = rep.chirality
    cn = rep.c(bop.normal)
    r1 = max(np.max(np.abs(Q @ Q - eye)), np.max(np.abs(Q - Q.conj().T)))
    r2 = np.max(np.abs(w @ Q + Q @ w))
    r3 = 0.0
    for X in _tangent_frame(bop.normal):
        ct = rep.c(X) @ cn
        r3 = max(r3, np.max(np.abs(ct @ Q + Q @ ct)))
    r4 = np.max(np.abs(cn @ Q + Q @ cn + 2.0 * bop.tau * 1j * eye))
    return {"involution": float(r1), "chirality": float(r2), "symbol": float(r3), "normal": float(r4)}


def chiral_basis(rep: CliffordRep, nu) -> np.ndarray:
    """Unitary ``B`` whose columns are ``(E_+, E_-)``: ``E_+`` spans the
    ``+1`` eigenspace of the chirality and ``E_- = i c(nu) E_+``."""
    w = rep.chirality
    vals, vecs = np.linalg.eigh(w)
    plus = vecs[:, vals > 0]
    minus = 1j * rep.c(nu) @ plus
    return np.concatenate([plus, minus], axis=1)


def block_formula_residual(rep: CliffordRep, theta: float, nu) -> float:
    """In the chiral basis ``Q_theta (a, b) = (-i e^{i theta} b, i e^{-i theta} a)``,
    the chirality is ``diag(I, -I)`` and ``c(nu) = -i offdiag(I, I)``."""
    B = chiral_basis(rep, nu)
    k = rep.dim // 2
    I, Z = np.eye(k), np.zeros((k, k))
    Binv = B.conj().T
    Q = Binv @ q_theta(rep, theta, nu).matrix @ B
    expected_q = np.block([[Z, -1j * np.exp(1j * theta) * I], [1j * np.exp(-1j * theta) * I, Z]])
    expected_w = np.block([[I, Z], [Z, -I]])
    expected_c = -1j * np.block([[Z, I], [I, Z]])
    return float(max(
        np.max(np.abs(Q - expected_q)),
        np.max(np.abs(Binv @ rep.chirality @ B - expected_w)),
        np.max(np.abs(Binv @ rep.c(nu) @ B - expected_c)),
        np.max(np.abs(Binv @ B - np.eye(rep.dim))),
    ))


def projections(bop: BoundaryOp) -> tuple[np.ndarray, np.ndarray]:
    eye = np.eye(bop.rep.dim)
    return 0.5 * (eye + bop.matrix), 0.5 * (eye - bop.matrix)


def projection_residuals(bop: BoundaryOp) -> dict[str, float]:
    pp, pm = projections(bop)
    eye = np.eye(bop.rep.dim)
    Q = bop.matrix
    half = bop.rep.dim // 2
    vals = np.linalg.eigvalsh(Q)
    return {
        "idempotent": float(max(np.max(np.abs(pp @ pp - pp)), np.max(np.abs(pm @ pm - pm)))),
        "orthogonal": float(np.max(np.abs(pp @ pm))),
        "complete": float(np.max(np.abs(pp + pm - eye))),
        "rank": float(abs(np.linalg.matrix_rank(pp) - half) + abs(np.linalg.matrix_rank(pm) - half)),
        "spectrum": float(max(np.max(np.abs(vals[:half] + 1)), np.max(np.abs(vals[half:] - 1)))),
        "swap": float(np.max(np.abs(bop.rep.chirality @ pp - pm @ bop.rep.chirality))),
    }


def eigenvectors(bop: BoundaryOp, sign: Sign) -> np.ndarray:
    """Orthonormal columns spanning ``{Q_theta Psi = +-Psi}``."""
    vals, vecs = np.linalg.eigh(bop.matrix)
    return vecs[:, vals * _sign_value(sign) > 0]


def boundary_dirac_identity_check(bop: BoundaryOp, psi, sign: Sign) -> dict[str, float]:
    """Zeroth-order and symbol-level parts of the boundary Dirac identity for an
    eigenspinor ``Q_theta psi = +-psi``."""
    psi = np.asarray(psi, dtype=complex)
    s = _sign_value(sign)
    Q = bop.matrix
    if np.max(np.abs(Q @ psi - s * psi)) > 1e-10 * max(1.0, np.linalg.norm(psi)):
        raise NotAnEigenvectorError("psi is not an eigenvector of Q_theta for this sign")
    rep, n = bop.rep, bop.rep.n
    cn = rep.c(bop.normal)
    nrm2 = float(np.real(inner(psi, psi)))
    zeroth = inner(s * 0.5 * (n - 1) * 1j * (cn @ psi), psi)
    r_zero = abs(zeroth - 0.5 * (n - 1) * bop.tau * nrm2)
    r_ref = abs(inner(1j * (cn @ psi), psi) - s * bop.tau * nrm2)
    # tangential Clifford symbols swap the eigenspaces, so they pair +- components only
    r_sym = 0.0
    for X in _tangent_frame(bop.normal):
        ct = rep.c(X) @ cn
        r_sym = max(r_sym, abs(inner(ct @ psi, psi)))
    return {"zeroth_order": float(r_zero), "reflection": float(r_ref), "symbol": float(r_sym)}


# ---------------------------------------------------------------------------
# spin connection and Killing spinors in the ball


def frame_connection(g: tensors.MetricField, frame, p) -> np.ndarray:
    """``omega[..., i, a, b] = <nabla_{d_i} e_a, e_b>`` for a frame given by a
    callable returning ``E[..., k, a]`` (component ``k`` of ``e_a``)."""
    p = np.asarray(p, dtype=float)
    E = frame(p)
    dE = tensors.fd_first(frame, p)  # [i, k, a]
    gam = tensors.christoffel(g, p)  # [k, i, l]
    cov = dE + np.einsum("...kil,...la->...ika", gam, E)
    return np.einsum("...ika,...kj,...jb->...iab", cov, g.g(p), E)


def conformal_frame(phi):
    """Orthonormal frame ``e_a = e^{-phi} d_a`` for ``e^{2 phi} delta``."""
    def frame(p):
        f = np.exp(-phi(p))
        n = p.shape[-1]
        return f[..., None, None] * np.eye(n)
    return frame


def ball_phi(y):
    return -np.log(0.5 * (1.0 - np.sum(y * y, axis=-1)))


def spin_connection(rep: CliffordRep, omega: np.ndarray) -> np.ndarray:
    """``A_i = 1/4 sum_ab omega_iab gamma_a gamma_b``."""
    G = rep._stack
    return 0.25 * np.einsum("...iab,axy,byz->...ixz", omega, G, G)


def ball_spin_connection(rep: CliffordRep, y) -> np.ndarray:
    """Spin connection of the ball model assembled from the Christoffel symbols."""
    g = tensors.hyperbolic_metric(rep.n, "ball")
    return spin_connection(rep, frame_connection(g, conformal_frame(ball_phi), y))


def ball_spin_connection_closed(rep: CliffordRep, y) -> np.ndarray:
    """Closed form ``A_i = (c(grad phi) gamma_i - gamma_i c(grad phi)) / 4``."""
    y = np.asarray(y, dtype=float)
    om = 0.5 * (1.0 - np.sum(y * y, axis=-1))
    cphi = rep.c(y / om[..., None])
    G = rep._stack
    return 0.25 * (np.einsum("...xy,iyz->...ixz", cphi, G) - np.einsum("ixy,...yz->...ixz", G, cphi))


@dataclass(frozen=True)
class KillingSpinorSeed:
    """A constant spinor ``u`` and the sign of the Killing connection
    ``nabla_X +- (i/2) c(X)``."""

    u: np.ndarray
    sign: Sign

    def __post_init__(self):
        u = np.array(self.u, dtype=complex)
        _sign_value(self.sign)
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return int(round(math.log2(self.u.size))) * 2

    @property
    def rep(self) -> CliffordRep:
        return build_clifford(self.n)

    def type_one_residual(self) -> float:
        rep = self.rep
        brackets = np.array([inner(g @ self.u, self.u) for g in rep.gammas])
        return float(abs(np.real(inner(self.u, self.u)) ** 2 + np.sum(brackets**2)))


def killing_spinor(seed: KillingSpinorSeed, y) -> np.ndarray:
    """``Omega^{-1/2} (I -+ i c(y)) u`` in the flat trivialization (batched)."""
    y = np.asarray(y, dtype=float)
    q = np.sum(y * y, axis=-1)
    if np.any(q >= 1.0):
        raise ValueError("ball point must satisfy |y| < 1")
    om = 0.5 * (1.0 - q)
    rep = seed.rep
    s = _sign_value(seed.sign)
    cy = rep.c(y)
    phi = seed.u - s * 1j * np.einsum("...ij,j->...i", cy, seed.u)
    return phi / np.sqrt(om)[..., None]


def killing_connection_apply(rep: CliffordRep, sign: Sign, field_fn, y, connection=None) -> np.ndarray:
    """``nabla^{+-}_{d_i} Phi = d_i Phi + A_i Phi +- (i/2) c(d_i) Phi``,
    returned with index ``[..., i, spinor]`` (coordinate directions)."""
    y = np.asarray(y, dtype=float)
    s = _sign_value(sign)
    A = ball_spin_connection(rep, y) if connection is None else connection
    phi = field_fn(y)
    dphi = tensors.fd_first(field_fn, y)
    om = 0.5 * (1.0 - np.sum(y * y, axis=-1))
    G = rep._stack
    cdi = np.einsum("...,ixy->...ixy", 1.0 / om, G)  # c(d_i) = Omega^-1 gamma_i
    return dphi + np.einsum("...ixy,...y->...ix", A, phi) + s * 0.5j * np.einsum("...ixy,...y->...ix", cdi, phi)


def killing_residual(seed: KillingSpinorSeed, y, connection=None) -> np.ndarray:
    """Frame-normalised ``|nabla^{+-}_{e_a} Phi|`` maxima at each point."""
    y = np.asarray(y, dtype=float)
    res = killing_connection_apply(seed.rep, seed.sign, lambda q: killing_spinor(seed, q), y, connection)
    om = 0.5 * (1.0 - np.sum(y * y, axis=-1))
    return np.max(np.abs(res), axis=(-1, -2)) * om


def q_invariant(seed: KillingSpinorSeed, y) -> np.ndarray:
    """``|Phi|^4 + sum_a <c(e_a) Phi, Phi>^2`` (real, batched)."""
    phi = killing_spinor(seed, y)
    rep = seed.rep
    nrm = np.real(inner(phi, phi))
    br = np.stack([inner(np.einsum("ij,...j->...i", g, phi), phi) for g in rep.gammas], axis=-1)
    return np.real(nrm**2 + np.sum(br**2, axis=-1))


def v_phi(seed: KillingSpinorSeed, y) -> np.ndarray:
    phi = killing_spinor(seed, y)
    return np.real(inner(phi, phi))


def v_phi_field(seed: KillingSpinorSeed) -> tensors.ScalarField:
    """``|Phi|^2`` as a scalar field on the ball; the Hessian uses the
    extrapolated second-difference stencil."""
    def value(p):
        return v_phi(seed, p)

    return tensors.ScalarField(value, None, lambda p: tensors.fd_second_extrapolated(value, p))


def v_phi_expansion(seed: KillingSpinorSeed) -> StaticPotential:
    """Coefficients ``(|u|^2, -+ i <gamma_j u, u>)`` in the basis ``V_(0), V_(j)``."""
    u = seed.u
    s = _sign_value(seed.sign)
    c0 = float(np.real(inner(u, u)))
    cj = [float(np.real(-s * 1j * inner(g @ u, u))) for g in seed.rep.gammas]
    return StaticPotential(np.array([c0] + cj))


def normalization_constant(seed: KillingSpinorSeed, y) -> np.ndarray:
    """Pointwise ratio ``|Phi|^2 / expansion``; constant for a correct expansion."""
    exp = v_phi_expansion(seed)(np.asarray(y, dtype=float), "ball")
    return v_phi(seed, y) / exp


def v_phi_coefficients(seed: KillingSpinorSeed, y_ref=None) -> StaticPotential:
    """``|Phi|^2`` as a static potential; the overall scale is measured, not assumed."""
    exp = v_phi_expansion(seed)
    pts = np.zeros((1, seed.rep.n)) if y_ref is None else np.atleast_2d(y_ref)
    C = float(np.mean(normalization_constant(seed, pts)))
    return StaticPotential(C * exp.coefficients)


def gradient_identity_residual(seed: KillingSpinorSeed, y, Y) -> np.ndarray:
    """``Y |Phi|^2 + -  i <c(Y) Phi, Phi>`` with ``Y`` in coordinate components."""
    y = np.asarray(y, dtype=float)
    Y = np.asarray(Y, dtype=float)
    d = tensors.fd_first(lambda q: v_phi(seed, q), y)
    lhs = np.einsum("...i,...i->...", d, Y)
    om = 0.5 * (1.0 - np.sum(y * y, axis=-1))
    phi = killing_spinor(seed, y)
    cY = seed.rep.c(Y / om[..., None])
    rhs = -_sign_value(seed.sign) * 1j * inner(np.einsum("...ij,...j->...i", cY, phi), phi)
    return np.abs(lhs - rhs)


# ---------------------------------------------------------------------------
# boundary data in the ball


def boundary_domain_for_theta(theta: float, chi: float = 1.0) -> DomainSpec:
    """The model domain whose boundary umbilicity equals ``sin(theta)``."""
    if abs(abs(theta) - math.pi / 2) < 1e-14:
        return DomainSpec.horoball(chi) if theta > 0 else DomainSpec.horoball_complement(chi)
    return DomainSpec.equidistant(math.tan(theta))


def ball_boundary_points(domain: DomainSpec, n: int, count: int, rng: np.random.Generator,
                         spread: float = 1.5) -> np.ndarray:
    """Random points of the domain boundary, in ball coordinates."""
    from .models import convert_coords, hyperboloid_lift

    w = rng.normal(size=(count, n - 1)) * spread
    if domain.kind == "equidistant":
        x = np.concatenate([np.full((count, 1), domain.s), w], axis=1)
        return convert_coords(hyperboloid_lift(x), "hyperboloid", "ball")
    z = np.concatenate([np.full((count, 1), 1.0 / domain.chi), w], axis=1)
    return convert_coords(z, "halfspace", "ball")


def ball_inward_normal(domain: DomainSpec, y) -> np.ndarray:
    """Inward unit normal at boundary points, as Euclidean (= frame) components."""
    y = np.asarray(y, dtype=float)
    V = domain.defining_potential(y.shape[-1])
    _, grad, _ = V.derivatives(y, "ball")
    grad = domain.outward_sign * grad
    return -grad / np.linalg.norm(grad, axis=-1, keepdims=True)


def _seed_constraint(rep: CliffordRep, theta: float, sign: Sign, y: np.ndarray, nu: np.ndarray) -> np.ndarray:
    s = _sign_value(sign)
    Q = q_theta_matrix(rep, theta, nu)
    eye = np.eye(rep.dim)
    lift = eye - s * 1j * rep.c(y)
    return (Q - s * eye) @ lift


def killing_space_basis(rep: CliffordRep, theta: float, sign: Sign, projection_sign: Sign | None = None,
                        samples: int = 24, seed: int = 0, tol: float = 1e-9) -> list[KillingSpinorSeed]:
    """Seeds ``u`` whose Killing spinors ``Phi_{u,+-}`` satisfy ``Q_theta Phi = +-Phi``
    on the boundary of the model domain with umbilicity ``sin(theta)``."""
    if projection_sign is not None and projection_sign != sign:
        raise SignMismatchError("the Killing connection sign must match the boundary projection sign")
    _sign_value(sign)
    domain = boundary_domain_for_theta(theta)
    rng = np.random.default_rng(seed)
    y = ball_boundary_points(domain, rep.n, samples, rng)
    nu = ball_inward_normal(domain, y)
    M = _seed_constraint(rep, theta, sign, y, nu).reshape(-1, rep.dim)
    ns = scipy.linalg.null_space(M, rcond=tol)
    return [KillingSpinorSeed(ns[:, k], sign) for k in range(ns.shape[1])]


def boundary_condition_residual(seed: KillingSpinorSeed, theta: float, y) -> np.ndarray:
    domain = boundary_domain_for_theta(theta)
    rep = seed.rep
    nu = ball_inward_normal(domain, y)
    Q = q_theta_matrix(rep, theta, nu)
    phi = killing_spinor(seed, y)
    s = _sign_value(seed.sign)
    return np.max(np.abs(np.einsum("...ij,...j->...i", Q, phi) - s * phi), axis=-1)


def chiral_components(rep: CliffordRep, u, nu) -> tuple[np.ndarray, np.ndarray]:
    """Components of ``u`` in the chiral basis attached to ``nu``."""
    B = chiral_basis(rep, nu)
    coeff = B.conj().T @ np.asarray(u, dtype=complex)
    k = rep.dim // 2
    return coeff[:k], coeff[k:]


def boundary_killing_residual(seed: KillingSpinorSeed, theta: float, y, h: float = 1e-4) -> np.ndarray:
    """Residual of the intrinsic boundary Killing equation

        nabla_X Phi + 1/2 c(nabla_X nu) c(nu) Phi - (kappa i / 2) c(X) c(nu) omega Phi = 0

    for tangent ``X``, i.e. the ambient connection restricted to the boundary,
    rewritten through the induced spin connection. Evaluated on an orthonormal
    tangent frame at each boundary point; derivatives are taken along curves in
    the boundary by central differences with step ``h``.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    rep = seed.rep
    domain = boundary_domain_for_theta(theta)
    kappa = math.cos(theta)
    G = rep._stack
    A_all = ball_spin_connection_closed(rep, y)
    out = np.zeros(y.shape[0])
    for idx, p in enumerate(y):
        nu = ball_inward_normal(domain, p[None])[0]
        om = 0.5 * (1.0 - p @ p)
        T = _tangent_frame(nu)  # Euclidean orthonormal tangent directions
        phi = killing_spinor(seed, p[None])[0]
        worst = 0.0
        for X in T:
            # boundary curve through p in direction X, projected back onto the level set
            pp = _project_to_boundary(domain, p + h * X)
            pm = _project_to_boundary(domain, p - h * X)
            dphi = (killing_spinor(seed, pp[None])[0] - killing_spinor(seed, pm[None])[0]) / (2 * h)
            nup = ball_inward_normal(domain, pp[None])[0]
            num = ball_inward_normal(domain, pm[None])[0]
            # covariant derivative of nu (frame components) along X
            dnu = (nup - num) / (2 * h)
            Ax = np.einsum("i,ixy->xy", X, A_all[idx])
            # frame rotation part of nabla nu: omega(X)_ab nu_a e_b
            om_x = np.einsum("i,iab->ab", X, _ball_omega_closed(p))
            cov_nu = dnu + om_x.T @ nu
            Xf = X / om  # frame components of the coordinate vector X
            cX = np.einsum("a,axy->xy", Xf, G)
            cn = rep.c(nu)
            term = (dphi + Ax @ phi + 0.5 * rep.c(cov_nu) @ cn @ phi
                    - 0.5j * kappa * cX @ cn @ rep.chirality @ phi)
            worst = max(worst, float(np.max(np.abs(term))) * om)
        out[idx] = worst
    return out


def _ball_omega_closed(y) -> np.ndarray:
    # <nabla_{d_i} e_a, e_b> = phi_a delta_ib - delta_ia phi_b with phi_k = y_k / Omega
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    dphi = y / (0.5 * (1.0 - y @ y))
    eye = np.eye(n)
    return np.einsum("a,ib->iab", dphi, eye) - np.einsum("ia,b->iab", eye, dphi)


def _project_to_boundary(domain: DomainSpec, y: np.ndarray, iters: int = 30) -> np.ndarray:
    V = domain.defining_potential(y.size)
    for _ in range(iters):
        val, grad, _ = V.derivatives(y, "ball")
        step = (val - domain.level) / (grad @ grad)
        y = y - step * grad
        if abs(val - domain.level) < 1e-15 * max(1.0, abs(domain.level)):
            break
    return y


def witten_boundary_operator(seed: KillingSpinorSeed, y, nu_frame) -> np.ndarray:
    """``-(nabla^{+-}_nu + c(nu) D^{+-}) Phi`` with ``D^{+-} = sum_a c(e_a) nabla^{+-}_{e_a}``."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    rep = seed.rep
    res = killing_connection_apply(rep, seed.sign, lambda q: killing_spinor(seed, q), y)
    om = 0.5 * (1.0 - np.sum(y * y, axis=-1))
    frame_der = res * om[:, None, None]  # nabla_{e_a} = Omega nabla_{d_a}
    nu = np.atleast_2d(nu_frame)
    along = np.einsum("pa,pax->px", nu, frame_der)
    dirac = np.einsum("axy,pay->px", rep._stack, frame_der)
    return -(along + np.einsum("pxy,py->px", rep.c(nu), dirac))


def witten_integrands(seed: KillingSpinorSeed, theta: float, y_interior, y_boundary) -> dict[str, np.ndarray]:
    """Pointwise integrands of the spinorial mass identity for the unperturbed model:
    the Killing-connection energy, the scalar-curvature term and the boundary
    mean-curvature term."""
    rep = seed.rep
    n = rep.n
    yi = np.atleast_2d(np.asarray(y_interior, dtype=float))
    res = killing_connection_apply(rep, seed.sign, lambda q: killing_spinor(seed, q), yi)
    om = 0.5 * (1.0 - np.sum(yi * yi, axis=-1))
    energy = np.sum(np.abs(res) ** 2, axis=(-1, -2)) * om**2
    g = tensors.hyperbolic_metric(n, "ball")
    scal = tensors.curvature(g, yi).scalar
    curv = (scal + n * (n - 1)) * v_phi(seed, yi) / 4.0
    domain = boundary_domain_for_theta(theta)
    yb = np.atleast_2d(np.asarray(y_boundary, dtype=float))
    geo = tensors.domain_boundary_geometry(g, domain, yb)
    bd = (geo.mean_curvature - (n - 1) * domain.umbilicity) * v_phi(seed, yb)
    return {"connection": energy, "scalar": curv, "boundary": bd}


def random_unit_vectors(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    v = rng.normal(size=(count, n))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def seeds_gram_rank(seeds: Sequence[KillingSpinorSeed], tol: float = 1e-10) -> int:
    if not seeds:
        return 0
    M = np.stack([s.u for s in seeds], axis=1)
    return int(np.linalg.matrix_rank(M.conj().T @ M, tol=tol))
