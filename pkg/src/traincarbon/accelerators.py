"""Canonical accelerator families, system overheads and hardware-string normalization."""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from types import MappingProxyType
from typing import Mapping

from .errors import UnknownFamily


@dataclass(frozen=True)
class AcceleratorSpec:
    """Peak throughput (FLOP/s), average power draw (W) and utilization efficiency."""

    family: str
    peak_flops: float
    avg_power: float
    efficiency: float

    def __post_init__(self):
        if not self.peak_flops > 0:
            raise ValueError(f"{self.family}: peak_flops must be > 0")
        if not self.avg_power > 0:
            raise ValueError(f"{self.family}: avg_power must be > 0")
        if not 0 < self.efficiency <= 1:
            raise ValueError(f"{self.family}: efficiency must be in (0, 1]")


@dataclass(frozen=True)
class OverheadConfig:
    it_overhead_fraction: float = 0.20
    node_fixed_power: float = 250.0
    node_network_power: float = 100.0
    pue: float = 1.2
    time_amplification: float = 1.0
    accelerators_per_node: int = 8

    def __post_init__(self):
        if self.pue < 1:
            raise ValueError("pue must be >= 1")
        if self.time_amplification < 1:
            raise ValueError("time_amplification must be >= 1")
        if min(self.it_overhead_fraction, self.node_fixed_power, self.node_network_power) < 0:
            raise ValueError("overhead fractions and powers must be >= 0")
        if self.accelerators_per_node < 1:
            raise ValueError("accelerators_per_node must be >= 1")

    @property
    def node_power(self) -> float:
        return self.node_fixed_power + self.node_network_power


_ROWS = [
    # family, peak FLOP/s, avg power W, efficiency
    ("A100", 3.12e14, 400, 0.35),
    ("A100_80GB", 3.12e14, 400, 0.35),
    ("A100_64GB", 3.12e14, 400, 0.35),
    ("A800", 3.12e14, 350, 0.30),
    ("H100", 9.89e14, 600, 0.45),
    ("H200", 1.00e15, 650, 0.45),
    ("H800", 8.00e14, 550, 0.40),
    ("V100", 1.25e14, 300, 0.25),
    ("T4", 6.5e13, 70, 0.20),
    ("L4", 1.20e14, 75, 0.25),
    ("A40", 3.00e14, 300, 0.25),
    ("A30", 1.65e14, 300, 0.25),
    ("RTX_6000_ADA", 1.45e14, 300, 0.25),
    ("MI250X", 3.83e14, 560, 0.30),
    ("MI300X", 1.20e15, 750, 0.40),
    ("TPU_V2", 4.5e13, 120, 0.25),
    ("TPU_V3", 1.23e14, 187, 0.35),
    ("TPU_V4", 2.75e14, 220, 0.45),
    ("TPU_V5E", 8.0e13, 120, 0.35),
    ("TPU_V5P", 2.90e14, 280, 0.45),
]

DEFAULT_GPU_FAMILY = "A100"
DEFAULT_TPU_FAMILY = "TPU_V3"


class AcceleratorRegistry(Mapping):
    """Read-only mapping from family name to :class:`AcceleratorSpec`."""

    def __init__(self, specs: Mapping[str, AcceleratorSpec]):
        self._specs = MappingProxyType(dict(specs))

    def __getitem__(self, family: str) -> AcceleratorSpec:
        return self.lookup(family)

    def __iter__(self):
        return iter(self._specs)

    def __len__(self):
        return len(self._specs)

    def lookup(self, family: str) -> AcceleratorSpec:
        try:
            return self._specs[family]
        except KeyError:
            raise UnknownFamily(family) from None

    def with_overrides(self, rows: Mapping[str, Mapping[str, float]]) -> "AcceleratorRegistry":
        specs = dict(self._specs)
        for family, values in rows.items():
            if family in specs:
                specs[family] = replace(specs[family], **values)
            else:
                specs[family] = AcceleratorSpec(family=family, **values)
        return AcceleratorRegistry(specs)


DEFAULT_REGISTRY = AcceleratorRegistry(
    {name: AcceleratorSpec(name, float(peak), float(power), eff) for name, peak, power, eff in _ROWS}
)


def lookup(family: str, registry: AcceleratorRegistry | None = None) -> AcceleratorSpec:
    return (registry or DEFAULT_REGISTRY).lookup(family)


class HardwareGroup(str, Enum):
    A_FAMILY = "A_family"
    H_FAMILY = "H_family"
    OTHERS = "Others"


_A_GROUP = {"A100", "A100_80GB", "A100_64GB", "A800"}
_H_GROUP = {"H100", "H200", "H800"}


def hardware_group(family: str | None) -> HardwareGroup:
    if family in _A_GROUP:
        return HardwareGroup.A_FAMILY
    if family in _H_GROUP:
        return HardwareGroup.H_FAMILY
    return HardwareGroup.OTHERS


@dataclass(frozen=True)
class NormalizedAccelerator:
    family: str
    count: int | None = None
    imputed: bool = False
    is_tpu: bool = False


# First match wins; more specific patterns precede their prefixes.
_GPU_RULES = [
    (r"a100\W*(?:sxm\w*\W*|pcie\W*)?80\s*g", "A100_80GB"),
    (r"a100\W*(?:sxm\w*\W*|pcie\W*)?64\s*g", "A100_64GB"),
    (r"a100", "A100"),
    (r"a800", "A800"),
    (r"h100", "H100"),
    (r"h200", "H200"),
    (r"h800", "H800"),
    (r"v100", "V100"),
    (r"(?<![a-z0-9])t4(?![0-9])", "T4"),
    (r"(?<![a-z0-9])l4(?![0-9])", "L4"),
    (r"(?<![a-z0-9])a40(?![0-9])", "A40"),
    (r"(?<![a-z0-9])a30(?![0-9])", "A30"),
    (r"6000\W*ada|ada\W*6000", "RTX_6000_ADA"),
    (r"mi\W*250", "MI250X"),
    (r"mi\W*300", "MI300X"),
]

_TPU_POD = re.compile(r"(?<![a-z0-9])(?:tpu\W*)?v([2-5])([ep])?-(\d+)", re.I)
_COUNT_AFTER = re.compile(r"(?<![a-z])(?:x|×|\*)\s*(\d+)\b", re.I)


def _tpu_family(gen: str, variant: str | None) -> str:
    if gen == "5":
        return "TPU_V5P" if (variant or "").lower() == "p" else "TPU_V5E"
    return f"TPU_V{gen}"


def _leading_count(text: str) -> int | None:
    m = re.match(r"^\s*(\d+)\s*(?:x|×|\*)?\s*[a-z]", text, re.I)
    if m:
        return int(m.group(1))
    m = _COUNT_AFTER.search(text)
    if m:
        return int(m.group(1))
    return None


def normalize_accelerator(hardware_text: str | None, is_tpu_hint: bool = False) -> NormalizedAccelerator:
    """Map a free-text hardware descriptor to a canonical family.

    Never raises. Unresolvable GPU text falls back to ``A100`` and unresolvable
    TPU text to ``TPU_V3``, both with ``imputed=True``.
    """
    text = (hardware_text or "").strip()
    if not text:
        family = DEFAULT_TPU_FAMILY if is_tpu_hint else DEFAULT_GPU_FAMILY
        return NormalizedAccelerator(family, None, imputed=True, is_tpu=is_tpu_hint)

    lowered = text.lower()
    pod = _TPU_POD.search(lowered)
    is_tpu = is_tpu_hint or "tpu" in lowered or pod is not None
    if is_tpu:
        if pod:
            return NormalizedAccelerator(_tpu_family(pod.group(1), pod.group(2)), int(pod.group(3)), is_tpu=True)
        m = re.search(r"tpu\W*v\W*([2-5])\s*([ep](?![a-z]))?(?:\s*-\s*(\d+))?", lowered)
        if m:
            count = int(m.group(3)) if m.group(3) else _leading_count(text)
            return NormalizedAccelerator(_tpu_family(m.group(1), m.group(2)), count, is_tpu=True)
        return NormalizedAccelerator(DEFAULT_TPU_FAMILY, _leading_count(text), imputed=True, is_tpu=True)

    for pattern, family in _GPU_RULES:
        if re.search(pattern, lowered):
            return NormalizedAccelerator(family, _leading_count(text))
    return NormalizedAccelerator(DEFAULT_GPU_FAMILY, _leading_count(text), imputed=True)
