"""Statistical verdicts: Kolmogorov-Smirnov tests against Gaussian targets,
two-sample KS for route equivalence, and the report structures emitted by the
verification scenarios."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps


class StatError(ValueError):
    """Raised for degenerate sample sets."""


def ks_critical(level: float, n: int, m: int | None = None) -> float:
    """Asymptotic two-sided KS critical value c(level)/sqrt(n_eff) with
    c = sqrt(-ln(level/2)/2)."""
    c = np.sqrt(-0.5 * np.log(level / 2.0))
    n_eff = n if m is None else n * m / (n + m)
    return float(c / np.sqrt(n_eff))


@dataclass(frozen=True)
class KSResult:
    statistic: float
    critical: float
    level: float
    n: int
    passed: bool


def ks_normal_test(samples, sigma2: float, level: float = 0.01) -> KSResult:
    """Two-sided KS of the samples against N(0, sigma2)."""
    x = np.asarray(samples, dtype=float)
    x = x[np.isfinite(x)]
    if len(x) < 100:
        raise StatError("need at least 100 samples")
    if np.std(x) == 0.0:
        raise StatError("degenerate samples (zero variance)")
    if sigma2 <= 0:
        raise StatError("sigma2 must be positive")
    stat = float(sps.kstest(x, "norm", args=(0.0, np.sqrt(sigma2))).statistic)
    crit = ks_critical(level, len(x))
    return KSResult(stat, crit, level, len(x), stat < crit)


def ks_two_sample(a, b, level: float = 0.01) -> KSResult:
    x = np.asarray(a, dtype=float); x = x[np.isfinite(x)]
    y = np.asarray(b, dtype=float); y = y[np.isfinite(y)]
    if min(len(x), len(y)) < 100:
        raise StatError("need at least 100 samples on each side")
    stat = float(sps.ks_2samp(x, y, method="asymp").statistic)
    crit = ks_critical(level, len(x), len(y))
    return KSResult(stat, crit, level, min(len(x), len(y)), stat < crit)


def mean_se(samples) -> tuple[float, float]:
    x = np.asarray(samples, dtype=float)
    x = x[np.isfinite(x)]
    if len(x) < 2:
        raise StatError("need at least 2 samples")
    return float(np.mean(x)), float(np.std(x, ddof=1) / np.sqrt(len(x)))


@dataclass
class Criterion:
    name: str
    target: float
    estimate: float
    tolerance: float
    verdict: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "target": self.target, "estimate": self.estimate,
                "tolerance": self.tolerance, "verdict": "pass" if self.verdict else "fail"}


@dataclass
class StatReport:
    config: dict
    seed: int
    criteria: list[Criterion] = field(default_factory=list)
    runtime_seconds: float = 0.0

    def add(self, name: str, target: float, estimate: float, tolerance: float,
            verdict: bool) -> Criterion:
        c = Criterion(name, float(target), float(estimate), float(tolerance), bool(verdict))
        self.criteria.append(c)
        return c

    @property
    def all_pass(self) -> bool:
        return all(c.verdict for c in self.criteria)

    def to_dict(self, include_runtime: bool = True) -> dict:
        out = {
            "config": self.config,
            "criteria": [c.to_dict() for c in self.criteria],
            "seed": self.seed,
        }
        if include_runtime:
            out["runtime_seconds"] = self.runtime_seconds
        return out

    def to_json(self, include_runtime: bool = True) -> str:
        return json.dumps(self.to_dict(include_runtime), indent=2, sort_keys=True)

    def summary_lines(self) -> list[str]:
        lines = []
        for c in self.criteria:
            status = "PASS" if c.verdict else "FAIL"
            lines.append(f"{status}  {c.name}: estimate {c.estimate:.6g} "
                         f"(target {c.target:.6g}, tolerance {c.tolerance:.3g})")
        return lines
