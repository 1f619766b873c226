"""Training-emission estimates for model repositories from partial metadata."""

from .accelerators import DEFAULT_REGISTRY, AcceleratorSpec, OverheadConfig, hardware_group, lookup, normalize_accelerator
from .emissions import atci_empirical, atci_theoretical, emissions_from_energy, energy_mwh, estimate_tier1, runtime_backsolve
from .quantities import parse_quantity
from .records import EmissionEstimate, ModelRecord, RawRecord, Tier

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_REGISTRY", "AcceleratorSpec", "OverheadConfig", "hardware_group", "lookup",
    "normalize_accelerator", "atci_empirical", "atci_theoretical", "emissions_from_energy",
    "energy_mwh", "estimate_tier1", "runtime_backsolve", "parse_quantity", "EmissionEstimate",
    "ModelRecord", "RawRecord", "Tier",
]
