"""The charge 1-form and the boundary 2-form of the linearized constraint."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..models import StaticPotential, potential_derivatives
from ..tensors import MetricField, christoffel_from, fd_first, inverse_metric


def _covariant_de(e, de, gam):
    # nabla_k e_ij = d_k e_ij - Gamma^l_ki e_lj - Gamma^l_kj e_il; the two corrections are transposes
    corr = np.moveaxis(gam, -3, -1) @ e[..., None, :, :]  # [k, i, j] = Gamma^l_ki e_lj
    return de - corr - np.swapaxes(corr, -1, -2)


@dataclass(frozen=True)
class ChargeParts:
    """Potential-independent pieces of the charge: ``div e - d tr e``, ``tr e``, ``b^-1`` and ``e``."""

    div_minus_dtr: np.ndarray
    trace: np.ndarray
    binv: np.ndarray
    e: np.ndarray


def charge_parts(e, de, b, db) -> ChargeParts:
    binv = inverse_metric(b)
    gam = christoffel_from(b, db, binv)
    nab = _covariant_de(e, de, gam)  # [k, i, j]
    div = np.einsum("...jk,...jki->...i", binv, nab)
    dtr = np.einsum("...jk,...ijk->...i", binv, nab)
    tr = np.einsum("...jk,...jk->...", binv, e)
    return ChargeParts(div - dtr, tr, binv, e)


def charge_from_parts(parts: ChargeParts, V_val, V_grad) -> np.ndarray:
    """``V (div e - d tr e) - e(grad V, .) + tr(e) dV``."""
    grad_up = (parts.binv @ V_grad[..., None])[..., 0]
    contr = (grad_up[..., None, :] @ parts.e)[..., 0, :]
    return V_val[..., None] * parts.div_minus_dtr - contr + parts.trace[..., None] * V_grad


def charge_from_arrays(V_val, V_grad, e, de, b, db) -> np.ndarray:
    """``V (div e - d tr e) - e(grad V, .) + tr(e) dV`` from pointwise arrays."""
    return charge_from_parts(charge_parts(e, de, b, db), V_val, V_grad)


def charge_form(V: StaticPotential, e, b: MetricField, p, de=None) -> np.ndarray:
    """Charge 1-form ``U(V, e)`` at ``p`` (coordinates of ``b.chart``).

    ``e`` is a callable returning symmetric matrices; ``de`` optionally gives
    ``d_k e_ij`` (otherwise central differences are used).
    """
    p = np.asarray(p, dtype=float)
    val, grad, _ = potential_derivatives(V.coefficients, p, b.chart)
    ev = e(p)
    dev = de(p) if de is not None else fd_first(e, p)
    return charge_from_arrays(val, grad, ev, dev, b.g(p), b.dg(p))


def boundary_two_form(V: StaticPotential, X, b: MetricField, p, jacobian=None) -> np.ndarray:
    """``V (X_{i;k} - X_{k;i}) + 2 (X_k V_i - X_i V_k)`` with ``X_i = b_ij X^j``."""
    p = np.asarray(p, dtype=float)
    val, grad, _ = potential_derivatives(V.coefficients, p, b.chart)

    def lowered(q):
        return np.einsum("...ij,...j->...i", b.g(q), X(q))

    Xl = lowered(p)
    dXl = fd_first(lowered, p) if jacobian is None else jacobian(p)  # [k, i] = d_k X_i
    curl = np.swapaxes(dXl, -1, -2) - dXl  # [i, k] = d_k X_i - d_i X_k
    return val[..., None, None] * curl + 2.0 * (Xl[..., None, :] * grad[..., :, None] - Xl[..., :, None] * grad[..., None, :])


def two_form_divergence(V: StaticPotential, X, b: MetricField, p) -> np.ndarray:
    """``(div W)_i = b^{kl} nabla_l W_ik`` for the boundary 2-form ``W``."""
    p = np.asarray(p, dtype=float)

    def W(q):
        return boundary_two_form(V, X, b, q)

    Wp = W(p)
    dW = fd_first(W, p)  # [l, i, k]
    g = b.g(p)
    binv = inverse_metric(g)
    gam = christoffel_from(g, b.dg(p), binv)
    nab = dW - np.einsum("...mli,...mk->...lik", gam, Wp) - np.einsum("...mlk,...im->...lik", gam, Wp)
    return np.einsum("...kl,...lik->...i", binv, nab)
