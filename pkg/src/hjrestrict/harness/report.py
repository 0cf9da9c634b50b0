"""Machine-readable experiment reports."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

STATUS_PASS = "pass"
STATUS_FAIL = "fail"
STATUS_HYPOTHESIS = "hypothesis_violated"


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "tolist"):
        return _clean(x.tolist())
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


@dataclass
class Check:
    """measured <= tolerance (or >= for lower bounds such as convergence orders)."""

    name: str
    measured: float
    tolerance: float
    comparison: str = "<="

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.measured):
            return False
        if self.comparison == "<=":
            return self.measured <= self.tolerance
        if self.comparison == ">=":
            return self.measured >= self.tolerance
        raise ValueError(f"unknown comparison {self.comparison!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": float(self.measured),
            "tolerance": float(self.tolerance),
            "comparison": self.comparison,
            "passed": self.passed,
        }


@dataclass
class Report:
    scenario: dict
    experiment: str
    checks: list[Check] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    status_override: Optional[str] = None
    message: str = ""
    artifacts: dict = field(default_factory=dict, repr=False)  # grid snapshots, not serialized

    def add(self, name: str, measured: float, tolerance: float, comparison: str = "<=") -> Check:
        c = Check(name, float(measured), float(tolerance), comparison)
        self.checks.append(c)
        return c

    @property
    def passed(self) -> bool:
        return self.status_override is None and all(c.passed for c in self.checks)

    @property
    def status(self) -> str:
        if self.status_override:
            return self.status_override
        return STATUS_PASS if self.passed else STATUS_FAIL

    @property
    def exit_code(self) -> int:
        return {STATUS_PASS: 0, STATUS_FAIL: 1, STATUS_HYPOTHESIS: 2}[self.status]

    def to_dict(self, timing: bool = True) -> dict:
        out: dict[str, Any] = {
            "scenario": self.scenario,
            "experiment": self.experiment,
            "status": self.status,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "diagnostics": self.diagnostics,
            "message": self.message,
        }
        if timing:
            out["timing"] = self.timing
        return _clean(out)

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "measured", "tolerance", "comparison", "passed"])
        for c in self.checks:
            w.writerow([c.name, repr(c.measured), repr(c.tolerance), c.comparison, c.passed])
        return buf.getvalue()

    def summary_lines(self) -> list[str]:
        lines = [f"{self.scenario.get('name', self.experiment)}: {self.status}"]
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            lines.append(f"  [{mark}] {c.name}: {c.measured:.6g} {c.comparison} {c.tolerance:.6g}")
        if self.message:
            lines.append(f"  {self.message}")
        return lines
