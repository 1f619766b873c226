"""Run configuration loaded from a JSON file.

Recognized keys (all optional)::

    {
      "registry": {"A100": {"avg_power": 420}, "NEW_CHIP": {"peak_flops": 1e15,
                   "avg_power": 700, "efficiency": 0.4}},
      "overheads": {"pue": 1.1, "time_amplification": 1.2},
      "tier_uncertainty": {"1": 0.10, "2": 0.55, "3": 1.20},
      "mirror_prefix": "unsloth/",
      "trim_per_tail": 0.025,
      "quality": {"low_seconds": 60, "high_multiple": 50},
      "seed": 0,
      "mc": {"samples": 1000, "distribution": "uniform"},
      "regression": "path/to/coefficients.json",
      "refit": false,
      "workers": 1
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .accelerators import DEFAULT_REGISTRY, AcceleratorRegistry, OverheadConfig
from .ingest import DEFAULT_MIRROR_PREFIX, HIGH_ATCI_MULTIPLE, LOW_DEVICE_SECONDS
from .regression import TIER2_MODEL, TIER3_MODEL, RegressionModel, load_coefficients
from .uncertainty import DEFAULT_TIER_UNCERTAINTY


@dataclass(frozen=True)
class PipelineConfig:
    registry: AcceleratorRegistry = DEFAULT_REGISTRY
    overheads: OverheadConfig = OverheadConfig()
    tier_uncertainty: dict[int, float] = field(default_factory=lambda: dict(DEFAULT_TIER_UNCERTAINTY))
    mirror_prefix: str = DEFAULT_MIRROR_PREFIX
    trim_per_tail: float = 0.025
    low_seconds: float = LOW_DEVICE_SECONDS
    high_multiple: float = HIGH_ATCI_MULTIPLE
    seed: int = 0
    mc_samples: int = 1000
    mc_distribution: str = "uniform"
    tier2_model: RegressionModel = TIER2_MODEL
    tier3_model: RegressionModel = TIER3_MODEL
    refit: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def config_from_dict(data: dict, base_dir: Path | None = None) -> PipelineConfig:
    known = {"registry", "overheads", "tier_uncertainty", "mirror_prefix", "trim_per_tail",
             "quality", "seed", "mc", "regression", "refit", "workers"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kw: dict = {}
    if "registry" in data:
        kw["registry"] = DEFAULT_REGISTRY.with_overrides(data["registry"])
    if "overheads" in data:
        valid = {f.name for f in fields(OverheadConfig)}
        bad = set(data["overheads"]) - valid
        if bad:
            raise ValueError(f"unknown overhead keys: {sorted(bad)}")
        kw["overheads"] = OverheadConfig(**data["overheads"])
    if "tier_uncertainty" in data:
        tu = dict(DEFAULT_TIER_UNCERTAINTY)
        tu.update({int(k): float(v) for k, v in data["tier_uncertainty"].items()})
        kw["tier_uncertainty"] = tu
    for key in ("mirror_prefix", "trim_per_tail", "seed", "refit", "workers"):
        if key in data:
            kw[key] = data[key]
    quality = data.get("quality", {})
    if "low_seconds" in quality:
        kw["low_seconds"] = float(quality["low_seconds"])
    if "high_multiple" in quality:
        kw["high_multiple"] = float(quality["high_multiple"])
    mc = data.get("mc", {})
    if "samples" in mc:
        kw["mc_samples"] = int(mc["samples"])
    if "distribution" in mc:
        kw["mc_distribution"] = mc["distribution"]
    if "regression" in data:
        reg = data["regression"]
        if isinstance(reg, str):
            path = Path(reg)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            models = load_coefficients(path)
        else:
            models = {k: RegressionModel.from_dict(v) for k, v in reg.items()}
        kw["tier2_model"] = models.get("tier2", TIER2_MODEL)
        kw["tier3_model"] = models.get("tier3", TIER3_MODEL)
    return PipelineConfig(**kw)


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh), path.parent)
