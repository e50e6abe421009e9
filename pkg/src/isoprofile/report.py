"""Per-point verdict reports shared by the verification routines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

PASS = "pass"
VACUOUS = "vacuous"
VIOLATION = "violation"


@dataclass
class PointVerdict:
    beta: float
    verdict: str
    residual: float | None = None
    witness: dict[str, Any] | None = None

    def to_dict(self) -> dict[str, Any]:
        row: dict[str, Any] = {"beta": float(self.beta), "verdict": self.verdict}
        if self.residual is not None:
            row["residual"] = float(self.residual)
        if self.witness is not None:
            row["witness"] = self.witness
        return row


@dataclass
class VerificationReport:
    """Verdicts in grid order; the run passes iff no point is a violation."""

    check: str
    verdicts: list[PointVerdict]
    tolerances: dict[str, float]
    notes: list[str] = field(default_factory=list)

    @property
    def global_pass(self) -> bool:
        return not any(v.verdict == VIOLATION for v in self.verdicts)

    @property
    def violations(self) -> list[PointVerdict]:
        return [v for v in self.verdicts if v.verdict == VIOLATION]

    def worst(self) -> PointVerdict | None:
        scored = [v for v in self.verdicts if v.residual is not None]
        return min(scored, key=lambda v: v.residual) if scored else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "check": self.check,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "global_pass": self.global_pass,
            "tolerances": dict(self.tolerances),
            "notes": list(self.notes),
        }


class VerificationFailure(AssertionError):
    """Raised by strict checks; carries the full report."""

    def __init__(self, report: VerificationReport):
        worst = report.violations[0]
        super().__init__(f"{report.check}: {len(report.violations)} violation(s), first at beta={worst.beta:.6g} "
                         f"({worst.witness})")
        self.report = report
