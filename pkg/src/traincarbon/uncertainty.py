"""First-order error propagation, Monte Carlo variance shares and tier-weighted aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import SharesNotNormalized

# Typical relative-error ranges (low, high) per multiplicative factor.
FACTOR_RANGES = {
    "F": (0.05, 0.15),
    "F_proxy": (0.60, 0.80),  # Tier-3 FLOPs from c * N_params
    "P": (0.05, 0.10),
    "theta": (0.10, 0.25),
    "A_time": (0.10, 0.20),
    "EF": (0.10, 0.20),
}

# Per-tier relative uncertainty used for reporting and aggregation.
DEFAULT_TIER_UNCERTAINTY = {1: 0.10, 2: 0.55, 3: 1.20}

MC_FACTORS = ("F", "K_eff", "EF")
MC_PERTURBATIONS = {"F": 0.30, "K_eff": 0.20, "EF": 0.10}


@dataclass(frozen=True)
class UncertaintyBudget:
    entries: Mapping[str, float]
    tier: str | None = None

    def __post_init__(self):
        for k, v in self.entries.items():
            if not v >= 0:
                raise ValueError(f"relative error for {k} must be >= 0, got {v}")

    @classmethod
    def from_table(cls, tier: int, bound: str = "high") -> "UncertaintyBudget":
        """Budget over {F, P, theta, A_time, EF} at the low, mid or high end of each range."""
        pick = {"low": lambda r: r[0], "high": lambda r: r[1], "mid": lambda r: (r[0] + r[1]) / 2}[bound]
        f_key = "F_proxy" if tier == 3 else "F"
        entries = {"F": pick(FACTOR_RANGES[f_key])}
        entries.update({k: pick(FACTOR_RANGES[k]) for k in ("P", "theta", "A_time", "EF")})
        return cls(entries, f"tier{tier}")


def propagate_relative(budget: UncertaintyBudget | Mapping[str, float] | Iterable[float]) -> float:
    """Quadrature sum of relative errors of independent multiplicative factors."""
    if isinstance(budget, UncertaintyBudget):
        values = list(budget.entries.values())
    elif isinstance(budget, Mapping):
        values = list(budget.values())
    else:
        values = list(budget)
    if any(not v >= 0 for v in values):
        raise ValueError("relative errors must be >= 0")
    return math.hypot(*values)


@dataclass(frozen=True)
class VarianceDecomposition:
    shares: dict[str, float]
    variances: dict[str, float]
    n_samples: int
    seed: int
    distribution: str
    base_value: float = field(default=1.0)


def factor_streams(seed: int, n_factors: int) -> list[np.random.Generator]:
    """One independent generator per factor; stream ``i`` depends only on (seed, i)."""
    return [np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,))) for i in range(n_factors)]


def _multipliers(rng: np.random.Generator, a: float, n: int, distribution: str) -> np.ndarray:
    if distribution == "uniform":
        return 1.0 + rng.uniform(-a, a, size=n)
    if distribution == "lognormal":
        # log-sd chosen to match the uniform's relative standard deviation
        return np.exp(rng.normal(0.0, a / math.sqrt(3.0), size=n))
    raise ValueError(f"unknown distribution {distribution!r}")


def mc_variance_decomposition(base: Mapping[str, float] | None = None,
                              perturbations: Mapping[str, float] | None = None,
                              n_samples: int = 1000, seed: int = 0,
                              distribution: str = "uniform") -> VarianceDecomposition:
    """Perturb each factor alone and attribute Var(E) to it.

    ``E`` is the product of the ``base`` factor values. Factor ``i`` draws
    from its own seeded substream, so results do not depend on evaluation order.
    """
    perturbations = dict(MC_PERTURBATIONS if perturbations is None else perturbations)
    base = {k: 1.0 for k in perturbations} if base is None else dict(base)
    if set(base) != set(perturbations):
        raise ValueError("base and perturbations must name the same factors")
    for k, a in perturbations.items():
        if not 0 <= a < 1:
            raise ValueError(f"perturbation for {k} must be in [0, 1), got {a}")
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    names = list(perturbations)
    e0 = math.prod(base.values())
    variances = {}
    for name, rng in zip(names, factor_streams(seed, len(names))):
        e = e0 * _multipliers(rng, perturbations[name], n_samples, distribution)
        variances[name] = float(np.var(e, ddof=1))
    total = math.fsum(variances.values())
    if total <= 0:
        raise ValueError("at least one perturbation must be nonzero")
    shares = {k: v / total for k, v in variances.items()}
    return VarianceDecomposition(shares, variances, n_samples, seed, distribution, e0)


def analytic_uniform_shares(perturbations: Mapping[str, float]) -> dict[str, float]:
    """Closed form for uniform perturbations: shares proportional to a^2."""
    total = sum(a * a for a in perturbations.values())
    return {k: a * a / total for k, a in perturbations.items()}


def aggregate_uncertainty(tier_shares: Mapping | Sequence[float],
                          tier_uncertainties: Mapping | Sequence[float] | None = None,
                          tol: float = 1e-6) -> float:
    """Emission-weighted sum of per-tier relative uncertainties."""
    if tier_uncertainties is None:
        tier_uncertainties = DEFAULT_TIER_UNCERTAINTY
    if isinstance(tier_shares, Mapping):
        keys = list(tier_shares)
        shares = [float(tier_shares[k]) for k in keys]
        if isinstance(tier_uncertainties, Mapping):
            us = [float(tier_uncertainties[k]) for k in keys]
        else:
            us = [float(u) for u in tier_uncertainties]
    else:
        shares = [float(s) for s in tier_shares]
        us = list(tier_uncertainties.values()) if isinstance(tier_uncertainties, Mapping) else list(tier_uncertainties)
    if len(shares) != len(us):
        raise ValueError("tier_shares and tier_uncertainties differ in length")
    if any(s < 0 for s in shares) or abs(math.fsum(shares) - 1.0) > tol:
        raise SharesNotNormalized(f"tier shares must be >= 0 and sum to 1, got {shares}")
    return math.fsum(s * u for s, u in zip(shares, us))
