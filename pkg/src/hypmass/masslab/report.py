"""Deterministic CSV/JSON artifacts.

Floats are written with ``repr`` so identical numbers always give identical
bytes; nothing time- or host-dependent enters the files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np


@dataclass(frozen=True)
class Check:
    """One invariant: ``residual <= tolerance`` passes."""

    suite: str
    name: str
    anchor: str
    residual: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(math.isfinite(self.residual) and self.residual <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} [{self.anchor}] {self.suite}/{self.name}: residual {self.residual:.3e} (tol {self.tolerance:.1e})"


def _cell(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


@dataclass
class Report:
    command: str
    config: dict
    checks: list[Check] = field(default_factory=list)
    tables: dict[str, list[dict]] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)

    def add_checks(self, checks) -> None:
        self.checks.extend(checks)

    def add_row(self, table: str, row: dict) -> None:
        self.tables.setdefault(table, []).append(row)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def table_csv(self, name: str) -> str:
        rows = self.tables[name]
        header = list(rows[0].keys()) if rows else []
        for r in rows:
            for k in r:
                if k not in header:
                    header.append(k)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(r.get(k)) for k in header])
        return buf.getvalue()

    def checks_table(self) -> list[dict]:
        return [{"suite": c.suite, "name": c.name, "anchor": c.anchor, "residual": c.residual,
                 "tolerance": c.tolerance, "passed": c.passed, "detail": c.detail} for c in self.checks]

    def to_json(self, include_tables: bool) -> str:
        doc = {
            "command": self.command,
            "passed": self.passed and not self.errors,
            "config": self.config,
            "checks": self.checks_table(),
            "summary": self.summary,
            "errors": self.errors,
        }
        if include_tables:
            doc["tables"] = self.tables
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"

    def write(self, out_dir: str | Path, fmt: str = "csv") -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if fmt == "csv":
            if self.checks:
                self.tables.setdefault("checks", self.checks_table())
            for name in sorted(self.tables):
                path = out / f"{self.command}-{name}.csv"
                path.write_text(self.table_csv(name))
                written.append(path)
        path = out / f"{self.command}-summary.json"
        path.write_text(self.to_json(include_tables=(fmt == "json")))
        written.append(path)
        return written

    def text(self, limit: Optional[int] = None) -> str:
        lines = [c.line() for c in self.checks[:limit]]
        lines += [f"ERROR {e}" for e in self.errors]
        return "\n".join(lines)
