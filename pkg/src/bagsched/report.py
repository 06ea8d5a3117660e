"""Constraint-scan bookkeeping shared by the certificate builders.

A CheckRecord tracks one named constraint family scanned exhaustively over
its index set: how many comparisons ran, which failed (with witnesses), and
the minimum slack seen. Certificates bundle the records plus the dual
variable totals; feasibility means no non-diagnostic record has violations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .numutil import json_number, leq


class AnalysisError(ValueError):
    """A certificate or classification precondition does not hold."""


@dataclass(frozen=True)
class Violation:
    check: str
    witness: tuple
    lhs: float
    rhs: float


# keep at most this many explicit violations per record
VIOLATION_CAP = 50


@dataclass
class CheckRecord:
    name: str
    diagnostic: bool = False  # diagnostics never affect feasibility
    rel: float = 1e-9
    checked: int = 0
    violation_count: int = 0
    violations: list = field(default_factory=list)
    min_slack: float = math.inf
    min_witness: tuple = ()
    _decades: dict = field(default_factory=dict)

    def require_leq(self, lhs, rhs, witness):
        """Record the comparison lhs <= rhs (with relative tolerance)."""
        self.checked += 1
        slack = float(rhs) - float(lhs)
        self._decades[_decade(slack)] = self._decades.get(_decade(slack), 0) + 1
        if slack < self.min_slack:
            self.min_slack = slack
            self.min_witness = witness
        if not leq(lhs, rhs, rel=self.rel):
            self.violation_count += 1
            if len(self.violations) < VIOLATION_CAP:
                self.violations.append(
                    Violation(check=self.name, witness=witness,
                              lhs=float(lhs), rhs=float(rhs))
                )
            return False
        return True

    def require(self, cond: bool, witness, lhs=0.0, rhs=0.0):
        """Record a plain boolean condition (slack bookkeeping skipped)."""
        self.checked += 1
        if not cond:
            self.violation_count += 1
            if len(self.violations) < VIOLATION_CAP:
                self.violations.append(
                    Violation(check=self.name, witness=witness,
                              lhs=float(lhs), rhs=float(rhs))
                )
        return bool(cond)

    @property
    def ok(self) -> bool:
        return self.violation_count == 0

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "diagnostic": self.diagnostic,
            "checked": self.checked,
            "violations": self.violation_count,
            "slack_histogram": dict(sorted(self._decades.items())),
        }
        if self.checked and math.isfinite(self.min_slack):
            d["min_slack"] = self.min_slack
            d["min_slack_witness"] = [_plain(x) for x in self.min_witness]
        if self.violations:
            d["violation_sample"] = [
                {"witness": [_plain(x) for x in v.witness], "lhs": v.lhs, "rhs": v.rhs}
                for v in self.violations[:5]
            ]
        return d


def _decade(slack: float) -> str:
    if slack <= 0:
        return "<=0"
    e = math.floor(math.log10(slack))
    e = max(-15, min(15, e))
    return f"1e{e:+d}"


def _plain(x):
    if isinstance(x, (int, str, bool)) or x is None:
        return x
    return float(x)


@dataclass
class DualCertificate:
    family: str           # weaker | single_job | general
    gamma: object
    gamma_required: float
    gamma_ok: bool
    alpha_total: object
    beta_total: object
    checks: list
    flags: dict = field(default_factory=dict)

    @property
    def objective(self):
        return self.alpha_total - self.beta_total

    @property
    def feasible(self) -> bool:
        return all(r.ok for r in self.checks if not r.diagnostic)

    def violations(self):
        out = []
        for r in self.checks:
            if not r.diagnostic:
                out.extend(r.violations)
        return out

    def check(self, name: str) -> CheckRecord:
        for r in self.checks:
            if r.name == name:
                return r
        raise KeyError(name)

    def min_slack_table(self):
        return [
            (r.name, r.min_slack if r.checked else None, r.min_witness)
            for r in self.checks
        ]

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "gamma": json_number(self.gamma),
            "gamma_required": self.gamma_required,
            "gamma_ok": self.gamma_ok,
            "feasible": self.feasible,
            "alpha_total": json_number(self.alpha_total),
            "beta_total": json_number(self.beta_total),
            "objective": json_number(self.objective),
            "flags": dict(self.flags),
            "checks": [r.to_dict() for r in self.checks],
        }


def certified_ratio(certificate: DualCertificate, trace):
    """Machine-checked competitive-ratio upper bound C * gamma_total / dual.

    gamma_total folds in the capacity-assumption preprocessing loss (a factor
    of the class count) for the families that require that assumption. Raises
    on infeasible certificates or non-positive dual objectives, where the
    dual value is not a usable lower bound.
    """
    if not certificate.feasible:
        raise AnalysisError("certificate is infeasible; no ratio can be certified")
    obj = certificate.objective
    if not obj > 0:
        raise AnalysisError(f"dual objective {float(obj)} is not positive")
    k = len(trace.instance.classes)
    preprocessing = k if certificate.family in ("single_job", "general") else 1
    return trace.objective * certificate.gamma * preprocessing / obj
