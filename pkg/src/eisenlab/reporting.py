"""The universal check record and its serializations (text/json/csv)."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

__all__ = ["MomentReport", "make_report", "reports_to_json", "reports_to_csv", "reports_to_text"]

SCHEMA_VERSION = 1


@dataclass
class MomentReport:
    check_name: str
    lhs: complex
    rhs: complex
    abs_err: float
    rel_err: float
    tolerance: float
    passed: bool
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": self.check_name,
            "lhs_re": self.lhs.real,
            "lhs_im": self.lhs.imag,
            "rhs_re": self.rhs.real,
            "rhs_im": self.rhs.imag,
            "abs_err": self.abs_err,
            "rel_err": self.rel_err,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "metadata": {k: _plain(v) for k, v in sorted(self.metadata.items())},
        }


def _plain(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in sorted(v.items())}
    if hasattr(v, "item"):
        return v.item()
    return v


def make_report(name: str, lhs, rhs, tolerance: float, metadata: dict | None = None,
                policy: str = "abs_or_rel") -> MomentReport:
    """pass iff abs_err <= tol or rel_err <= tol (the recorded policy)."""
    lhs = complex(lhs)
    rhs = complex(rhs)
    abs_err = abs(lhs - rhs)
    rel_err = abs_err / abs(rhs) if rhs != 0 else float("inf")
    if policy == "abs_or_rel":
        ok = abs_err <= tolerance or rel_err <= tolerance
    elif policy == "abs":
        ok = abs_err <= tolerance
    elif policy == "rel":
        ok = rel_err <= tolerance
    else:
        raise ValueError(f"unknown pass policy {policy!r}")
    md = dict(metadata or {})
    md["policy"] = policy
    return MomentReport(name, lhs, rhs, abs_err, rel_err, tolerance, ok, md)


def reports_to_json(reports: list[MomentReport], timestamp: str = "") -> str:
    doc = {
        "schema": SCHEMA_VERSION,
        "timestamp": timestamp,
        "reports": [r.to_dict() for r in reports],
        "all_pass": all(r.passed for r in reports),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def reports_to_csv(reports: list[MomentReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["check", "lhs_re", "lhs_im", "rhs_re", "rhs_im",
                "abs_err", "rel_err", "tolerance", "pass"])
    for r in reports:
        w.writerow([r.check_name, repr(r.lhs.real), repr(r.lhs.imag), repr(r.rhs.real),
                    repr(r.rhs.imag), repr(r.abs_err), repr(r.rel_err),
                    repr(r.tolerance), r.passed])
    return buf.getvalue()


def reports_to_text(reports: list[MomentReport]) -> str:
    lines = []
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        lines.append(
            f"[{status}] {r.check_name}: lhs={r.lhs:.12g} rhs={r.rhs:.12g} "
            f"abs={r.abs_err:.3e} rel={r.rel_err:.3e} tol={r.tolerance:.1e}"
        )
    return "\n".join(lines)
