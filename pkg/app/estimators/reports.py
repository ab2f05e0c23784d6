"""Point estimates with confidence intervals, and log-linear tail fits."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from ..errors import InconclusiveFit

MIN_FIT_POINTS = 4


def z_value(confidence: float) -> float:
    """Two-sided normal quantile for a central interval of mass `confidence`."""
    return float(stats.norm.ppf(confidence + (1.0 - confidence) / 2.0))


@dataclass
class EstimateReport:
    """Mean of per-replica samples with a normal-approximation interval.

    `data` names the replicas.csv column the samples came from.  The wall
    time is kept off the serialized form so report files stay bit-identical.
    """

    estimate: float
    stderr: float
    replicas: int
    ci: tuple[float, float]
    level: float = 0.95
    data: str | None = None
    streams: list[str] = field(default_factory=list)
    wall_seconds: float | None = None

    @classmethod
    def from_samples(
        cls,
        samples: Sequence[float] | np.ndarray,
        confidence: float = 0.95,
        data: str | None = None,
    ) -> EstimateReport:
        values = np.asarray(samples, dtype=np.float64)
        n = int(values.size)
        if n == 0:
            return cls(math.nan, math.nan, 0, (math.nan, math.nan), confidence, data)
        mean = float(values.mean())
        se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        half = z_value(confidence) * se
        return cls(mean, se, n, (mean - half, mean + half), confidence, data)

    @classmethod
    def from_proportion(
        cls,
        successes: int,
        n: int,
        confidence: float = 0.95,
        data: str | None = None,
    ) -> EstimateReport:
        """Binomial proportion with a Wilson score interval."""
        if n == 0:
            return cls(math.nan, math.nan, 0, (math.nan, math.nan), confidence, data)
        p = successes / n
        z = z_value(confidence)
        denom = 1.0 + z * z / n
        centre = (p + z * z / (2 * n)) / denom
        half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
        lo, hi = max(0.0, centre - half), min(1.0, centre + half)
        return cls(p, math.sqrt(p * (1 - p) / n), n, (min(lo, p), max(hi, p)), confidence, data)

    def excludes(self, value: float) -> bool:
        return not self.ci[0] <= value <= self.ci[1]

    def agrees_with(self, other: EstimateReport, k: float = 3.0) -> bool:
        """|difference| within k joint standard errors (independent samples)."""
        return abs(self.estimate - other.estimate) <= k * math.hypot(self.stderr, other.stderr)

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop("wall_seconds")
        data["ci"] = list(self.ci)
        return data


def paired_difference(a: np.ndarray, b: np.ndarray, confidence: float = 0.95, k: float = 3.0) -> dict:
    """Mean of a - b over paired replicas and whether it is within k standard errors of 0."""
    diff = EstimateReport.from_samples(np.asarray(a) - np.asarray(b), confidence)
    agree = bool(diff.replicas > 0 and abs(diff.estimate) <= k * diff.stderr)
    return {"difference": diff.to_dict(), "within_se": k, "agree": agree}


@dataclass
class TailFit:
    """Least-squares line through log p̂(t); zero cells are dropped, never padded."""

    grid: list[float]
    successes: list[int]
    totals: list[int]
    probabilities: list[float]
    log_probabilities: list[float | None]
    slope: float = math.nan
    intercept: float = math.nan
    r_squared: float = math.nan
    slope_stderr: float = math.nan
    slope_ci: tuple[float, float] = (math.nan, math.nan)
    used: int = 0
    degenerate: bool = False
    inconclusive: bool = True
    label: str = ""

    @classmethod
    def from_counts(
        cls,
        grid: Sequence[float],
        successes: Sequence[int],
        totals: Sequence[int],
        confidence: float = 0.95,
        label: str = "",
    ) -> TailFit:
        x = np.asarray(grid, dtype=np.float64)
        k = np.asarray(successes, dtype=np.int64)
        n = np.asarray(totals, dtype=np.int64)
        p = np.divide(k, n, out=np.zeros(x.size), where=n > 0)
        usable = (k > 0) & (n > 0)
        logs = [float(math.log(v)) if ok else None for v, ok in zip(p, usable)]
        fit = cls(
            grid=x.tolist(),
            successes=k.tolist(),
            totals=n.tolist(),
            probabilities=p.tolist(),
            log_probabilities=logs,
            used=int(usable.sum()),
            degenerate=not bool(usable.any()),
            label=label,
        )
        if fit.used >= MIN_FIT_POINTS and np.unique(x[usable]).size >= 2:
            result = stats.linregress(x[usable], np.log(p[usable]))
            half = z_value(confidence) * result.stderr
            fit.slope = float(result.slope)
            fit.intercept = float(result.intercept)
            fit.r_squared = float(result.rvalue**2)
            fit.slope_stderr = float(result.stderr)
            fit.slope_ci = (fit.slope - half, fit.slope + half)
            fit.inconclusive = False
        return fit

    @property
    def decreasing(self) -> bool:
        """Empirical probabilities strictly decreasing along the grid."""
        return all(b < a for a, b in zip(self.probabilities, self.probabilities[1:]))

    def require(self) -> TailFit:
        if self.inconclusive:
            raise InconclusiveFit(
                f"{self.label or 'tail fit'}: {self.used} usable grid points, need {MIN_FIT_POINTS}"
            )
        return self

    def to_dict(self) -> dict:
        data = asdict(self)
        data["slope_ci"] = list(self.slope_ci)
        data["decreasing"] = self.decreasing
        return data
