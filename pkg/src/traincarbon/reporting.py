"""Aggregation, projection, significant-figure formatting and evaluation metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import EmptyAfterTrim, YearOutOfRange
from .ingest import canonical_region
from .records import EmissionEstimate
from .uncertainty import DEFAULT_TIER_UNCERTAINTY, aggregate_uncertainty

_SUPERSCRIPT = str.maketrans("0123456789-", "⁰¹²³⁴⁵⁶⁷⁸⁹⁻")


def format_sigfigs(value: float, n_digits: int = 2) -> str:
    """Scientific string with ``n_digits`` significant digits, ties rounded away from zero.

    >>> format_sigfigs(58234.7, 2)
    '5.8×10⁴'
    """
    if n_digits < 1:
        raise ValueError("n_digits must be >= 1")
    if not math.isfinite(value):
        raise ValueError(f"cannot format {value}")
    if value == 0:
        return "0"
    sign = "-" if value < 0 else ""
    d = Decimal(repr(abs(float(value))))
    exp = d.adjusted()
    mant = d.scaleb(-exp).quantize(Decimal(1).scaleb(1 - n_digits), rounding=ROUND_HALF_UP)
    if mant >= 10:
        exp += 1
        mant = (mant / 10).quantize(Decimal(1).scaleb(1 - n_digits), rounding=ROUND_HALF_UP)
    text = f"{mant:f}"
    if exp == 0:
        return sign + text
    return f"{sign}{text}×10{str(exp).translate(_SUPERSCRIPT)}"


def format_total(total: float, abs_uncertainty: float, unit: str = "tCO₂e") -> str:
    """``5.8×10⁴ ± 2×10⁴ tCO₂e``: two digits for the value, one for the interval."""
    return f"{format_sigfigs(total, 2)} ± {format_sigfigs(abs_uncertainty, 1)} {unit}"


# -- aggregation --------------------------------------------------------------

GROUP_KEYS: dict[str, Callable[[EmissionEstimate], object]] = {
    "region": lambda e: canonical_region(e.region),
    "year": lambda e: e.year,
    "modality": lambda e: e.modality,
    "subtype": lambda e: e.subtype,
    "tier": lambda e: e.tier.value,
    "author": lambda e: e.author,
}


@dataclass(frozen=True)
class GroupStats:
    n: int
    total: float
    mean: float
    mean_atci: float | None
    n_with_flops: int

    def to_dict(self) -> dict:
        return {"n": self.n, "total_t": self.total, "mean_t": self.mean,
                "mean_atci": self.mean_atci, "n_with_flops": self.n_with_flops}


@dataclass(frozen=True)
class AggregateReport:
    key: str
    groups: dict[str, GroupStats]
    total: float
    relative_uncertainty: float
    tier_shares: dict[int, float] = field(default_factory=dict)

    @property
    def absolute_uncertainty(self) -> float:
        return self.total * self.relative_uncertainty

    @property
    def formatted(self) -> str:
        return format_total(self.total, self.absolute_uncertainty)

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "total_t": self.total,
            "relative_uncertainty": self.relative_uncertainty,
            "absolute_uncertainty_t": self.absolute_uncertainty,
            "formatted_total": self.formatted,
            "tier_shares": {str(k): v for k, v in sorted(self.tier_shares.items())},
            "groups": {k: g.to_dict() for k, g in self.groups.items()},
        }


def _group_label(value) -> str:
    return "unknown" if value is None or value == "" else str(value)


def tier_emission_shares(estimates: Sequence[EmissionEstimate]) -> dict[int, float]:
    totals: dict[int, list[float]] = {1: [], 2: [], 3: []}
    for e in estimates:
        if e.tier.level is not None:
            totals[e.tier.level].append(e.emissions)
    grand = math.fsum(v for vs in totals.values() for v in vs)
    if grand <= 0:
        return {}
    return {k: math.fsum(vs) / grand for k, vs in totals.items()}


def aggregate_by(estimates: Sequence[EmissionEstimate], key: str,
                 tier_uncertainty: Mapping[int, float] = DEFAULT_TIER_UNCERTAINTY) -> AggregateReport:
    """Per-group totals, means and mean ATCI (over records with known FLOPs only).

    ``math.fsum`` keeps totals exact up to final rounding, so they do not
    depend on record order.
    """
    if key not in GROUP_KEYS:
        raise ValueError(f"unsupported grouping key {key!r}; choose from {sorted(GROUP_KEYS)}")
    getter = GROUP_KEYS[key]
    buckets: dict[str, list[EmissionEstimate]] = {}
    for e in estimates:
        buckets.setdefault(_group_label(getter(e)), []).append(e)
    groups = {}
    for label in sorted(buckets):
        items = buckets[label]
        em = [e.emissions for e in items]
        atcis = [e.atci for e in items if e.atci is not None]
        total = math.fsum(em)
        groups[label] = GroupStats(
            n=len(items), total=total, mean=total / len(items),
            mean_atci=math.fsum(atcis) / len(atcis) if atcis else None,
            n_with_flops=len(atcis),
        )
    total = math.fsum(e.emissions for e in estimates)
    shares = tier_emission_shares(estimates)
    rel = aggregate_uncertainty(shares, tier_uncertainty) if shares else 0.0
    return AggregateReport(key, groups, total, rel, shares)


# -- projection ---------------------------------------------------------------

DEFAULT_ANCHORS = ((2024, 0.013), (2030, 0.028), (2035, 0.031))


@dataclass(frozen=True)
class ProjectionCurve:
    """Data-centre share of electricity demand, piecewise linear between anchor years."""

    anchors: tuple[tuple[int, float], ...] = DEFAULT_ANCHORS
    base_year: int = 2024

    def __post_init__(self):
        years = [y for y, _ in self.anchors]
        shares = [s for _, s in self.anchors]
        if years != sorted(set(years)) or len(years) < 2:
            raise ValueError("anchor years must be strictly increasing")
        if any(s <= 0 for s in shares) or any(b < a for a, b in zip(shares, shares[1:])):
            raise ValueError("anchor shares must be positive and nondecreasing")
        if not years[0] <= self.base_year <= years[-1]:
            raise YearOutOfRange(f"base year {self.base_year} outside anchors")

    @property
    def year_range(self) -> tuple[int, int]:
        return self.anchors[0][0], self.anchors[-1][0]

    def share(self, year: float) -> float:
        lo, hi = self.year_range
        if not lo <= year <= hi:
            raise YearOutOfRange(f"year {year} outside [{lo}, {hi}]")
        xs, ys = zip(*self.anchors)
        return float(np.interp(year, xs, ys))


DEFAULT_CURVE = ProjectionCurve()


def project_emissions(base_total: float, target_year: float,
                      curve: ProjectionCurve = DEFAULT_CURVE) -> float:
    """Scale the base-year total by the ratio of electricity shares."""
    if base_total < 0:
        raise ValueError("base_total must be nonnegative")
    return base_total * (curve.share(target_year) / curve.share(curve.base_year))


def projection_series(base_total: float, curve: ProjectionCurve = DEFAULT_CURVE) -> dict[int, float]:
    lo, hi = curve.year_range
    return {y: project_emissions(base_total, y, curve) for y in range(max(lo, curve.base_year), hi + 1)}


# -- evaluation against disclosures ------------------------------------------

@dataclass(frozen=True)
class EvaluationMetrics:
    n: int
    n_used: int
    mape: float
    median_re: float
    p90_re: float
    hit_rate_2x: float
    hit_rate_3x: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def relative_errors(estimates: Sequence[float], disclosures: Sequence[float]) -> np.ndarray:
    est = np.asarray(estimates, dtype=float)
    disc = np.asarray(disclosures, dtype=float)
    if est.shape != disc.shape:
        raise ValueError("estimates and disclosures differ in length")
    if np.any(disc <= 0):
        raise ValueError("disclosures must be positive")
    if np.any(est < 0):
        raise ValueError("estimates must be nonnegative")
    return np.abs(est - disc) / disc


def hit_rate(estimates: np.ndarray, disclosures: np.ndarray, k: float) -> float:
    """Fraction of estimates within a factor ``k`` of the disclosure."""
    if len(estimates) == 0:
        return float("nan")
    ok = (estimates >= disclosures / k) & (estimates <= disclosures * k)
    return float(np.mean(ok))


def evaluate_against_disclosed(estimates: Sequence[float], disclosures: Sequence[float],
                               trim_per_tail: float = 0.025) -> EvaluationMetrics:
    """Relative-error metrics after dropping ``floor(n * trim_per_tail)`` pairs per RE tail."""
    if not 0 <= trim_per_tail < 0.25:
        raise ValueError("trim_per_tail must be in [0, 0.25)")
    est = np.asarray(estimates, dtype=float)
    disc = np.asarray(disclosures, dtype=float)
    re = relative_errors(est, disc)
    n = len(re)
    k = int(math.floor(n * trim_per_tail))
    order = np.argsort(re, kind="stable")
    keep = order[k:n - k]
    if len(keep) == 0:
        raise EmptyAfterTrim(f"no pairs left after trimming {k} per tail from {n}")
    r = re[keep]
    return EvaluationMetrics(
        n=n, n_used=len(keep),
        mape=float(np.mean(r)),
        median_re=float(np.median(r)),
        p90_re=float(np.quantile(r, 0.9)),  # linear interpolation (type 7)
        hit_rate_2x=hit_rate(est[keep], disc[keep], 2.0),
        hit_rate_3x=hit_rate(est[keep], disc[keep], 3.0),
    )
