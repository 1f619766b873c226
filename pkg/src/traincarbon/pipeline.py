"""End-to-end batch run: ingest, tier routing, estimation, aggregation, serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

from .accelerators import hardware_group
from .config import PipelineConfig
from .emissions import atci_empirical, estimate_tier1
from .errors import InsufficientMetadata, InsufficientRows, SingularDesign, TrainCarbonError
from .ingest import (
    RegionEFTable,
    apply_field_overrides,
    classify_tier,
    load_field_overrides,
    load_org_overrides,
    load_region_ef_table,
    prepare_records,
    read_snapshot,
)
from .records import ATCI_UNIT, EmissionEstimate, ModelRecord, RawRecord, Tier
from .regression import (
    RegressionModel,
    fit_ols_loglog,
    predict_tier2,
    predict_tier3,
    tier2_regressors,
    tier3_regressors,
)
from .reporting import AggregateReport, aggregate_by


def _fallback_tier(record: ModelRecord) -> Tier:
    if record.total_flops:
        return Tier.TIER2
    if record.params:
        return Tier.TIER3
    return Tier.INSUFFICIENT


def _regression_estimate(record: ModelRecord, tier: Tier, cfg: PipelineConfig,
                         tier2_model: RegressionModel, tier3_model: RegressionModel,
                         notes: dict[str, str]) -> EmissionEstimate:
    ef = record.ef_region
    flops = record.total_flops
    if tier is Tier.TIER2:
        group = hardware_group(record.accelerator)
        emissions = predict_tier2(flops, ef, group, tier2_model)
        notes["path"] = f"tier2_regression[{group.value}]"
        notes["flops"] = record.flops_method or "disclosed"
    else:
        emissions = predict_tier3(record.params, ef, record.is_instruct, tier3_model)
        notes["path"] = "tier3_regression"
        flops = None
    notes["energy"] = "implied"
    notes["ef_region"] = record.ef_source
    return EmissionEstimate(
        repo_id=record.repo_id, tier=tier, emissions=emissions, energy=emissions / ef,
        ef_region=ef, relative_uncertainty=cfg.tier_uncertainty[tier.level], flops=flops,
        atci=atci_empirical(emissions, flops) if flops else None, atci_unit=ATCI_UNIT,
        accelerator=record.accelerator if tier is Tier.TIER2 else None,
        region=record.region, year=record.year, modality=record.modality,
        subtype=record.subtype, author=record.author, notes=notes,
    )


def estimate_record(record: ModelRecord, cfg: PipelineConfig = PipelineConfig(),
                    tier2_model: RegressionModel | None = None,
                    tier3_model: RegressionModel | None = None) -> EmissionEstimate:
    """Route one record to the Tier-1 engine or a regression predictor.

    A Tier-1 record the engine cannot resolve is re-tiered by what remains.
    """
    tier2_model = tier2_model or cfg.tier2_model
    tier3_model = tier3_model or cfg.tier3_model
    notes: dict[str, str] = {}
    tier = record.tier
    if tier.level == 1:
        try:
            est = estimate_tier1(record, cfg.registry, cfg.overheads, cfg.tier_uncertainty[1])
        except InsufficientMetadata:
            tier = _fallback_tier(record)
            notes["retiered"] = f"{record.tier.value}->{tier.value}"
        else:
            if record.quality_flags:
                est.notes["quality_flags"] = ",".join(f.value for f in record.quality_flags)
            return est
    if tier is Tier.INSUFFICIENT:
        raise InsufficientMetadata(f"{record.repo_id}: insufficient metadata for any tier")
    est = _regression_estimate(record, tier, cfg, tier2_model, tier3_model, notes)
    if record.quality_flags:
        est.notes["quality_flags"] = ",".join(f.value for f in record.quality_flags)
    return est


# -- refitting on the Tier-1 calibration set ---------------------------------

def calibration_rows(pairs: Sequence[tuple[ModelRecord, EmissionEstimate]], tier: int) -> list:
    rows = []
    for rec, est in pairs:
        if est.tier.level != 1 or est.emissions <= 0 or not rec.disclosure_trusted:
            continue
        if tier == 2 and rec.total_flops:
            rows.append((math.log(est.emissions),
                         tier2_regressors(rec.total_flops, rec.ef_region, hardware_group(rec.accelerator))))
        elif tier == 3 and rec.params:
            rows.append((math.log(est.emissions),
                         tier3_regressors(rec.params, rec.ef_region, rec.is_instruct)))
    return rows


def refit_models(pairs: Sequence[tuple[ModelRecord, EmissionEstimate]], cfg: PipelineConfig
                 ) -> tuple[RegressionModel, RegressionModel, dict[str, str]]:
    """Refit both regressions on Tier-1 estimates; keep defaults where a fit is impossible."""
    status = {}
    models = {2: cfg.tier2_model, 3: cfg.tier3_model}
    for tier in (2, 3):
        rows = calibration_rows(pairs, tier)
        try:
            models[tier] = fit_ols_loglog(rows, terms=list(models[tier].coefficients))
            status[f"tier{tier}"] = f"refit:n={len(rows)}"
        except (InsufficientRows, SingularDesign) as exc:
            status[f"tier{tier}"] = f"default:{type(exc).__name__}"
    return models[2], models[3], status


# -- batch --------------------------------------------------------------------

@dataclass
class PipelineResult:
    records: list[ModelRecord]
    estimates: list[EmissionEstimate]
    errors: list[tuple[str, str]] = field(default_factory=list)
    report: AggregateReport | None = None
    models: dict[str, dict] = field(default_factory=dict)

    @property
    def partial_failure(self) -> bool:
        return bool(self.errors)

    def to_dict(self) -> dict:
        return {
            "estimates": [e.to_dict() for e in self.estimates],
            "errors": [{"repo_id": r, "error": m} for r, m in self.errors],
            "report": self.report.to_dict() if self.report else None,
            "models": self.models,
        }


def run_records(raws: Sequence[RawRecord], table: RegionEFTable | None = None,
                cfg: PipelineConfig = PipelineConfig(),
                org_overrides: Mapping[str, str] | None = None,
                report_key: str = "tier") -> PipelineResult:
    """Estimate every record, collecting per-record failures instead of aborting."""
    records = prepare_records(raws, table, org_overrides, cfg.registry, cfg.overheads,
                              cfg.mirror_prefix, cfg.low_seconds, cfg.high_multiple)
    tier2_model, tier3_model = cfg.tier2_model, cfg.tier3_model
    models = {}
    if cfg.refit:
        pairs = []
        for rec in records:
            if rec.tier.level == 1:
                try:
                    pairs.append((rec, estimate_tier1(rec, cfg.registry, cfg.overheads)))
                except TrainCarbonError:
                    pass
        tier2_model, tier3_model, status = refit_models(pairs, cfg)
        models["status"] = status
    models["tier2"] = tier2_model.to_dict()
    models["tier3"] = tier3_model.to_dict()

    def attempt(rec):
        try:
            return estimate_record(rec, cfg, tier2_model, tier3_model)
        except (TrainCarbonError, ValueError, KeyError) as exc:
            return rec.repo_id, f"{type(exc).__name__}: {exc}"

    if cfg.workers > 1:
        # map preserves input order, so output does not depend on scheduling
        with ThreadPoolExecutor(cfg.workers) as pool:
            outcomes = list(pool.map(attempt, records))
    else:
        outcomes = [attempt(rec) for rec in records]
    estimates = [o for o in outcomes if isinstance(o, EmissionEstimate)]
    errors = [o for o in outcomes if not isinstance(o, EmissionEstimate)]
    report = aggregate_by(estimates, report_key, cfg.tier_uncertainty)
    return PipelineResult(records, estimates, errors, report, models)


def run_pipeline(snapshot: str | Path, ef_table: str | Path | None = None,
                 cfg: PipelineConfig = PipelineConfig(),
                 org_overrides: str | Path | None = None,
                 field_overrides: str | Path | None = None,
                 report_key: str = "tier") -> PipelineResult:
    """Read a snapshot and run it end to end. Raises SchemaError on invalid input."""
    raws = read_snapshot(snapshot)
    if field_overrides is not None:
        raws = apply_field_overrides(raws, load_field_overrides(field_overrides))
    table = load_region_ef_table(ef_table)
    orgs = load_org_overrides(org_overrides) if org_overrides is not None else None
    return run_records(raws, table, cfg, orgs, report_key)


# -- serialization ------------------------------------------------------------

def to_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


CSV_COLUMNS = ("repo_id", "tier", "emissions_t", "energy_mwh", "ef_region", "relative_uncertainty",
               "flops", "atci", "atci_unit", "runtime_hours", "accelerator", "region", "year",
               "modality", "subtype", "author", "notes")


def estimates_to_csv(estimates: Sequence[EmissionEstimate]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for e in estimates:
        row = e.to_dict()
        row["notes"] = ";".join(f"{k}={v}" for k, v in row["notes"].items())
        writer.writerow({k: "" if row[k] is None else row[k] for k in CSV_COLUMNS})
    return buf.getvalue()


def rows_to_csv(rows: Sequence[Mapping], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: "" if r.get(k) is None else r.get(k) for k in columns})
    return buf.getvalue()


# -- evaluation against disclosures ------------------------------------------

def holdout_pairs(records: Sequence[ModelRecord], cfg: PipelineConfig = PipelineConfig(),
                  tier2_model: RegressionModel | None = None,
                  tier3_model: RegressionModel | None = None
                  ) -> list[tuple[ModelRecord, EmissionEstimate, float]]:
    """Re-estimate each trusted disclosure with its energy/emission fields hidden.

    Returns ``(masked_record, estimate, disclosed_emissions)`` for records that
    remain estimable after masking.
    """
    out = []
    for rec in records:
        if rec.usable_emissions is None or rec.usable_emissions <= 0:
            continue
        masked = replace(rec, disclosed_emissions=None, disclosed_energy=None, quality_flags=[],
                         notes=dict(rec.notes))
        masked.tier = classify_tier(masked)
        try:
            est = estimate_record(masked, cfg, tier2_model, tier3_model)
        except (TrainCarbonError, ValueError):
            continue
        out.append((masked, est, rec.usable_emissions))
    return out
