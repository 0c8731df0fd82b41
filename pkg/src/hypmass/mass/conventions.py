"""Orientation conventions shared by every mass integrand.

All three normals are outward: ``mu`` on the large hemispheres, ``eta`` on the
boundary hypersurface and ``vartheta`` as the conormal of the corner sphere
inside the boundary. Each integrand multiplies its normal by the matching sign
below, so a single flipped entry is enough to break the sign audit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class NormalConventions:
    mu: float = 1.0
    eta: float = 1.0
    conormal: float = 1.0
    # corner orientation on the complement of a horoball: "outward" uses the
    # outward normal of the complement, "horospherical" the horoball's own
    complement_corner: str = "outward"

    def flipped(self, which: str) -> "NormalConventions":
        return replace(self, **{which: -getattr(self, which)})


OUTWARD = NormalConventions()


def sign_audit(rule, n: int, conventions: NormalConventions = OUTWARD, tol: float = 1e-12) -> dict[str, float]:
    """Check that the normals stored in a quadrature rule, after applying the
    convention signs, point out of the regions they bound.

    Returns the worst (most negative) orientation margin for each normal; all
    must be positive for a consistent convention.
    """
    from .quadrature import outward_tests

    margins = outward_tests(rule, n, conventions)
    return {k: float(np.min(v)) if np.size(v) else np.inf for k, v in margins.items()}


def audit_passes(margins: dict[str, float]) -> bool:
    return all(v > 0 for v in margins.values())
