"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

from typing import Optional

LINES: list[str] = []


def _passes(value: float, bound: Optional[float]) -> bool:
    return value == 0.0 if bound is None else value < bound


def record(number: int, title: str, checks: list[tuple[str, float, Optional[float]]]) -> bool:
    """``checks`` holds ``(name, value, bound)``: a check passes when ``value < bound``,
    or when ``value`` is exactly zero for ``bound=None``."""
    failed = [c for c in checks if not _passes(c[1], c[2])]
    shown = failed or checks
    detail = "; ".join(f"{name} {value:.3e} ({'exact' if bound is None else f'< {bound:.1e}'})"
                       for name, value, bound in shown)
    line = f"{'FAIL' if failed else 'PASS'} criterion {number}: {title}: {detail}"
    LINES.append(line)
    print(line)
    return not failed
