"""Energy and emissions for Tier-1 records, runtime backsolving and ATCI."""

from __future__ import annotations

import math

from .accelerators import (
    DEFAULT_REGISTRY,
    AcceleratorRegistry,
    AcceleratorSpec,
    OverheadConfig,
)
from .errors import DivisionByZeroFlops, InsufficientMetadata
from .records import ATCI_UNIT, EmissionEstimate, HoursUnit, ModelRecord, Tier

J_PER_MWH = 3.6e9
EFLOP = 1e18
TIER1_UNCERTAINTY = 0.10


def runtime_backsolve(flops: float, spec: AcceleratorSpec, n_acc: float) -> float:
    """Wall-clock hours to execute ``flops`` at ``peak * efficiency`` on ``n_acc`` devices."""
    if n_acc <= 0:
        raise ValueError("n_acc must be positive")
    if flops < 0:
        raise ValueError("flops must be nonnegative")
    seconds = flops / (spec.peak_flops * spec.efficiency * n_acc)
    return seconds / 3600.0


def default_node_count(n_acc: float, overheads: OverheadConfig) -> int:
    return max(1, math.ceil(n_acc / overheads.accelerators_per_node))


def energy_mwh(spec: AcceleratorSpec, n_acc: float, n_nodes: float, hours: float,
               overheads: OverheadConfig = OverheadConfig()) -> float:
    """Facility energy: ``[P*N*T*(1+IT) + nodes*(node+network)*T] * PUE``.

    ``T`` is ``hours`` scaled by the time-amplification factor.
    """
    if hours < 0 or n_acc < 0 or n_nodes < 0:
        raise ValueError("hours, n_acc and n_nodes must be nonnegative")
    t = hours * overheads.time_amplification
    acc_wh = spec.avg_power * n_acc * t * (1.0 + overheads.it_overhead_fraction)
    node_wh = n_nodes * overheads.node_power * t
    return (acc_wh + node_wh) * overheads.pue / 1e6


def emissions_from_energy(mwh: float, ef_region: float) -> float:
    if mwh < 0 or ef_region < 0:
        raise ValueError("energy and emission factor must be nonnegative")
    return mwh * ef_region


def atci_theoretical(spec: AcceleratorSpec, overheads: OverheadConfig, ef_region: float,
                     theta: str = "peak") -> float:
    """Emissions per 1e18 FLOP from power/throughput, PUE, A_time and EF.

    ``theta="peak"`` divides power by peak throughput; ``"effective"`` by
    ``peak * efficiency``.
    """
    if theta == "peak":
        throughput = spec.peak_flops
    elif theta == "effective":
        throughput = spec.peak_flops * spec.efficiency
    else:
        raise ValueError(f"unknown theta convention {theta!r}")
    joules_per_eflop = spec.avg_power / throughput * EFLOP
    return joules_per_eflop / J_PER_MWH * overheads.pue * overheads.time_amplification * ef_region


def atci_empirical(emissions: float, flops: float) -> float:
    if flops <= 0:
        raise DivisionByZeroFlops("ATCI needs positive FLOPs")
    return emissions / (flops / EFLOP)


def _device_count(record: ModelRecord, overheads: OverheadConfig, notes: dict) -> float:
    if record.device_count:
        return float(record.device_count)
    if record.hours_unit == HoursUnit.WALL_CLOCK and record.training_hours is not None:
        notes["device_count"] = "imputed:1"
        return 1.0
    notes["device_count"] = f"imputed:{overheads.accelerators_per_node}"
    return float(overheads.accelerators_per_node)


def estimate_tier1(record: ModelRecord, registry: AcceleratorRegistry = DEFAULT_REGISTRY,
                   overheads: OverheadConfig = OverheadConfig(),
                   uncertainty: float = TIER1_UNCERTAINTY) -> EmissionEstimate:
    """Estimate a Tier-1 record.

    Order: trusted disclosed emissions, disclosed energy, disclosed runtime,
    runtime backsolved from FLOPs. Raises :class:`InsufficientMetadata` when
    none applies.
    """
    notes: dict[str, str] = {}
    ef = record.ef_region
    notes["ef_region"] = record.ef_source
    flops = record.total_flops
    runtime = None

    if record.usable_emissions is not None:
        emissions = record.usable_emissions
        energy = emissions / ef if ef > 0 else 0.0
        notes["path"] = "disclosed_emissions"
        notes["energy"] = "implied"
    elif record.usable_energy is not None:
        energy = record.usable_energy
        emissions = emissions_from_energy(energy, ef)
        notes["path"] = "disclosed_energy"
    else:
        spec = registry.lookup(record.accelerator)
        n_acc = _device_count(record, overheads, notes)
        if record.training_hours is not None:
            hours = record.training_hours
            if record.hours_unit == HoursUnit.DEVICE_HOURS:
                hours = hours / n_acc
                notes["runtime"] = "device_hours/n_acc"
            else:
                notes["runtime"] = "disclosed"
            notes["path"] = "direct_runtime"
        elif flops is not None:
            hours = runtime_backsolve(flops, spec, n_acc)
            notes["runtime"] = "backsolved"
            notes["path"] = "flops_runtime"
        else:
            raise InsufficientMetadata(f"{record.repo_id}: no runtime, FLOPs or disclosure")
        n_nodes = record.node_count or default_node_count(n_acc, overheads)
        if not record.node_count:
            notes["node_count"] = "imputed"
        energy = energy_mwh(spec, n_acc, n_nodes, hours, overheads)
        emissions = emissions_from_energy(energy, ef)
        runtime = hours

    tier = record.tier if record.tier in (Tier.TIER1_DIRECT, Tier.TIER1_FLOPS) else Tier.TIER1_DIRECT
    return EmissionEstimate(
        repo_id=record.repo_id,
        tier=tier,
        emissions=emissions,
        energy=energy,
        ef_region=ef,
        relative_uncertainty=uncertainty,
        flops=flops,
        atci=atci_empirical(emissions, flops) if flops else None,
        atci_unit=ATCI_UNIT,
        runtime_hours=runtime,
        accelerator=record.accelerator,
        region=record.region,
        year=record.year,
        modality=record.modality,
        subtype=record.subtype,
        author=record.author,
        notes=notes,
    )
