"""Record types shared by ingestion, estimation and reporting."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from enum import Enum
from typing import Any


class Tier(str, Enum):
    TIER1_DIRECT = "Tier1Direct"
    TIER1_FLOPS = "Tier1Flops"
    TIER2 = "Tier2"
    TIER3 = "Tier3"
    INSUFFICIENT = "Insufficient"

    @property
    def level(self) -> int | None:
        return {"Tier1Direct": 1, "Tier1Flops": 1, "Tier2": 2, "Tier3": 3}.get(self.value)


class QualityFlag(str, Enum):
    UNREALISTICALLY_LOW = "unrealistically_low"
    UNREALISTICALLY_HIGH = "unrealistically_high"
    INCONSISTENT_SOURCES = "inconsistent_sources"
    NONE = "none"


class HoursUnit(str, Enum):
    WALL_CLOCK = "wall_clock"
    DEVICE_HOURS = "device_hours"


MODALITIES = ("NLP", "CV", "MM", "Audio")
SUBTYPES = ("foundation", "finetune", "instruct", "individual")

# Free-text numeric columns of a snapshot row.
NUMERIC_FIELDS = (
    "params", "tokens", "flops", "device_count", "node_count", "training_hours",
    "disclosed_ef", "disclosed_energy", "disclosed_emissions", "measured_step_macs",
)


@dataclass
class RawRecord:
    """One snapshot row before numeric parsing."""

    repo_id: str
    author: str
    downloads: int
    created_at: dt.date
    modality: str = "NLP"
    subtype: str = "foundation"
    params: str | None = None
    tokens: str | None = None
    flops: str | None = None
    hardware: str | None = None
    device_count: str | None = None
    node_count: str | None = None
    training_hours: str | None = None
    hours_unit: str | None = None
    region: str | None = None
    disclosed_ef: str | None = None
    disclosed_energy: str | None = None
    disclosed_emissions: str | None = None
    arch_category: str | None = None
    measured_step_macs: str | None = None
    arch: dict[str, Any] = field(default_factory=dict)
    tags: list[str] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass
class ModelRecord:
    """A deduplicated, normalized repository record."""

    repo_id: str
    author: str
    downloads: int
    created_at: dt.date
    modality: str
    subtype: str
    params: float | None = None
    tokens: float | None = None
    flops: float | None = None  # disclosed
    hardware: str | None = None
    accelerator: str = "A100"
    accelerator_imputed: bool = True
    is_tpu: bool = False
    device_count: float | None = None
    node_count: float | None = None
    training_hours: float | None = None
    hours_unit: HoursUnit = HoursUnit.WALL_CLOCK
    region: str | None = None
    disclosed_ef: float | None = None
    disclosed_energy: float | None = None
    disclosed_emissions: float | None = None
    arch_category: str | None = None
    measured_step_macs: float | None = None
    arch: dict[str, Any] = field(default_factory=dict)
    tags: list[str] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)
    ef_region: float = 0.445
    ef_source: str = "global_default"
    flops_estimate: float | None = None
    flops_method: str | None = None
    tier: Tier = Tier.INSUFFICIENT
    quality_flags: list[QualityFlag] = field(default_factory=list)
    notes: dict[str, str] = field(default_factory=dict)

    @property
    def year(self) -> int:
        return self.created_at.year

    @property
    def is_instruct(self) -> bool:
        return self.subtype == "instruct"

    @property
    def disclosure_trusted(self) -> bool:
        """False when quality control rejected the disclosed emission."""
        bad = {QualityFlag.UNREALISTICALLY_LOW, QualityFlag.UNREALISTICALLY_HIGH}
        return not bad.intersection(self.quality_flags)

    @property
    def usable_emissions(self) -> float | None:
        return self.disclosed_emissions if self.disclosure_trusted else None

    @property
    def usable_energy(self) -> float | None:
        return self.disclosed_energy if self.disclosure_trusted else None

    @property
    def total_flops(self) -> float | None:
        return self.flops if self.flops is not None else self.flops_estimate

    @property
    def has_hardware(self) -> bool:
        return bool(self.hardware) and not self.accelerator_imputed


ATCI_UNIT = "tCO2e/1e18FLOP"


@dataclass
class EmissionEstimate:
    repo_id: str
    tier: Tier
    emissions: float  # tCO2e
    energy: float  # MWh
    ef_region: float
    relative_uncertainty: float
    flops: float | None = None
    atci: float | None = None
    atci_unit: str = ATCI_UNIT
    runtime_hours: float | None = None
    accelerator: str | None = None
    region: str | None = None
    year: int | None = None
    modality: str | None = None
    subtype: str | None = None
    author: str | None = None
    notes: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "repo_id": self.repo_id,
            "tier": self.tier.value,
            "emissions_t": self.emissions,
            "energy_mwh": self.energy,
            "ef_region": self.ef_region,
            "relative_uncertainty": self.relative_uncertainty,
            "flops": self.flops,
            "atci": self.atci,
            "atci_unit": self.atci_unit,
            "runtime_hours": self.runtime_hours,
            "accelerator": self.accelerator,
            "region": self.region,
            "year": self.year,
            "modality": self.modality,
            "subtype": self.subtype,
            "author": self.author,
            "notes": dict(sorted(self.notes.items())),
        }
