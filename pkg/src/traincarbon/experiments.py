"""Pseudo-missingness experiment and a synthetic Tier-1 corpus generator."""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .accelerators import DEFAULT_REGISTRY, AcceleratorRegistry, OverheadConfig, hardware_group
from .emissions import estimate_tier1
from .errors import InsufficientTier1
from .ingest import classify_tier
from .records import HoursUnit, ModelRecord, Tier
from .regression import (
    TIER2_MODEL,
    TIER3_MODEL,
    RegressionModel,
    fit_ols_loglog,
    predict_tier2,
    predict_tier3,
    tier2_regressors,
    tier3_regressors,
)


@dataclass(frozen=True)
class PseudoTierMetrics:
    n: int
    mae: float
    median_re: float
    p90_re: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class PseudoMissingnessResult:
    n_tier1: int
    n_sampled: int
    seed: int
    tier2: PseudoTierMetrics
    tier3: PseudoTierMetrics

    def to_dict(self) -> dict:
        return {"n_tier1": self.n_tier1, "n_sampled": self.n_sampled, "seed": self.seed,
                "tier2": self.tier2.to_dict(), "tier3": self.tier3.to_dict()}


def _metrics(pred: Sequence[float], truth: Sequence[float]) -> PseudoTierMetrics:
    p = np.asarray(pred, dtype=float)
    t = np.asarray(truth, dtype=float)
    if len(p) == 0:
        nan = float("nan")
        return PseudoTierMetrics(0, nan, nan, nan)
    ae = np.abs(p - t)
    re = ae / t
    return PseudoTierMetrics(len(p), float(np.mean(ae)), float(np.median(re)), float(np.quantile(re, 0.9)))


def pseudo_missingness(records: Sequence[ModelRecord], fraction: float = 0.70, seed: int = 0,
                       mask: str = "standard",
                       tier2_model: RegressionModel = TIER2_MODEL,
                       tier3_model: RegressionModel = TIER3_MODEL,
                       refit: bool = False,
                       registry: AcceleratorRegistry = DEFAULT_REGISTRY,
                       overheads: OverheadConfig = OverheadConfig(),
                       min_truth: float = 0.0) -> PseudoMissingnessResult:
    """Mask a seeded sample of Tier-1 records and re-estimate them by regression.

    Pseudo-Tier-2 keeps FLOPs, EF and hardware group; pseudo-Tier-3 keeps the
    parameter count, EF and instruct flag. ``mask="none"`` re-runs the Tier-1
    engine on the unmasked records instead (a self-consistency check). With
    ``refit=True`` the regressions are refitted on the unsampled Tier-1
    records first.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    if mask not in ("standard", "none"):
        raise ValueError("mask must be 'standard' or 'none'")
    truth_pairs = []
    for rec in records:
        if rec.tier.level != 1:
            continue
        truth = estimate_tier1(rec, registry, overheads).emissions
        if truth > min_truth:
            truth_pairs.append((rec, truth))
    n = len(truth_pairs)
    size = int(round(n * fraction))
    if n == 0 or size < 1:
        raise InsufficientTier1(f"need Tier-1 records with positive emissions, got {n}")
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(n, size=size, replace=False))
    sample = [truth_pairs[i] for i in chosen]

    if refit:
        rest = [truth_pairs[i] for i in sorted(set(range(n)) - set(chosen.tolist()))]
        rows2 = [(math.log(t), tier2_regressors(r.total_flops, r.ef_region, hardware_group(r.accelerator)))
                 for r, t in rest if r.total_flops]
        rows3 = [(math.log(t), tier3_regressors(r.params, r.ef_region, r.is_instruct))
                 for r, t in rest if r.params]
        tier2_model = fit_ols_loglog(rows2, terms=list(tier2_model.coefficients))
        tier3_model = fit_ols_loglog(rows3, terms=list(tier3_model.coefficients))

    p2, t2, p3, t3 = [], [], [], []
    for rec, truth in sample:
        if mask == "none":
            est = estimate_tier1(rec, registry, overheads).emissions
            p2.append(est)
            t2.append(truth)
            p3.append(est)
            t3.append(truth)
            continue
        if rec.total_flops:
            p2.append(predict_tier2(rec.total_flops, rec.ef_region, hardware_group(rec.accelerator), tier2_model))
            t2.append(truth)
        if rec.params:
            p3.append(predict_tier3(rec.params, rec.ef_region, rec.is_instruct, tier3_model))
            t3.append(truth)
    return PseudoMissingnessResult(n, size, seed, _metrics(p2, t2), _metrics(p3, t3))


# -- synthetic corpus ---------------------------------------------------------

SYNTHETIC_FAMILIES = ("A100", "A100_80GB", "A800", "H100", "H800", "V100", "TPU_V4", "L4", "MI250X")


def synthetic_tier1_corpus(n: int = 200, seed: int = 0, noise_sigma: float = 0.3,
                           registry: AcceleratorRegistry = DEFAULT_REGISTRY,
                           overheads: OverheadConfig = OverheadConfig()) -> list[ModelRecord]:
    """Tier-1 records whose disclosed emissions are the engine's own estimate times lognormal noise.

    Parameters are log-uniform in [1e8, 1e11], tokens per parameter
    log-uniform in [2, 2000] and FLOPs = 6 * params * tokens.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        family = SYNTHETIC_FAMILIES[int(rng.integers(len(SYNTHETIC_FAMILIES)))]
        params = float(10 ** rng.uniform(8, 11))
        tokens = params * float(10 ** rng.uniform(math.log10(2), math.log10(2000)))
        n_acc = float(2 ** int(rng.integers(3, 10)))
        rec = ModelRecord(
            repo_id=f"synthetic/model-{i:04d}", author="synthetic", downloads=int(rng.integers(5000, 10**6)),
            created_at=dt.date(2021 + int(rng.integers(0, 4)), 1 + int(rng.integers(0, 12)), 1),
            modality="NLP", subtype="instruct" if rng.uniform() < 0.25 else "foundation",
            params=params, tokens=tokens, flops=6.0 * params * tokens,
            hardware=family, accelerator=family, accelerator_imputed=False,
            is_tpu=family.startswith("TPU"), device_count=n_acc, hours_unit=HoursUnit.WALL_CLOCK,
            ef_region=float(rng.uniform(0.05, 0.75)), ef_source="synthetic",
            flops_method="disclosed",
        )
        rec.tier = classify_tier(rec)
        engine = estimate_tier1(rec, registry, overheads).emissions
        noisy = engine * float(np.exp(rng.normal(0.0, noise_sigma)))
        rec = replace(rec, disclosed_emissions=noisy, notes={"synthetic_engine_t": repr(engine)})
        rec.tier = classify_tier(rec)
        assert rec.tier is Tier.TIER1_DIRECT
        out.append(rec)
    return out
