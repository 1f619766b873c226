"""Snapshot loading, normalization, deduplication, quality control and tiering.

Snapshot column dictionary (JSON-lines keys or CSV headers):

    repo_id, downloads, created_at        required
    author                                defaults to the id's namespace
    modality, subtype                     NLP|CV|MM|Audio, foundation|finetune|instruct|individual
    params, tokens, flops                 free text, e.g. "7B", "2T", "5x10^21"
    hardware, device_count, node_count    e.g. "A100 80GB", "TPUv4-128"
    training_hours, hours_unit            hours_unit: wall_clock | device_hours
    region                                grid region name (matched against the EF table)
    disclosed_ef                          tCO2/MWh (values in (2, 2000] are read as g/kWh)
    disclosed_energy, disclosed_emissions MWh, tCO2e
    arch_category, measured_step_macs     vit|clip|diffusion|dit|cnn|transformer
    arch                                  JSON object, or flat ``arch.<key>`` columns
    tags                                  list, or ``;``-separated string

Any other column is kept verbatim in ``extra``.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import re
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .accelerators import (
    DEFAULT_REGISTRY,
    AcceleratorRegistry,
    AcceleratorSpec,
    OverheadConfig,
    normalize_accelerator,
)
from .emissions import EFLOP, J_PER_MWH, atci_theoretical
from .errors import MissingDisclosure, SchemaError
from .flops import record_category, resolve_record_flops
from .flops_vision import CategoryMeans
from .quantities import try_parse_quantity
from .records import (
    MODALITIES,
    NUMERIC_FIELDS,
    SUBTYPES,
    HoursUnit,
    ModelRecord,
    QualityFlag,
    RawRecord,
    Tier,
)

GLOBAL_DEFAULT_EF = 0.445
DEFAULT_MIRROR_PREFIX = "unsloth/"
QUANTIZED_PATTERN = re.compile(
    r"(?<![a-z0-9])(gguf|4bit|4-bit|8bit|8-bit|awq|gptq|ptq|nf4|fp8|q4|q5)(?![a-z0-9])", re.I)
DISCREPANCY_EPS = 1e-12
MIRROR_TOLERANCE = 1e-3

REQUIRED_COLUMNS = ("repo_id", "downloads", "created_at")
_RAW_FIELDS = {f.name for f in fields(RawRecord)}


# -- snapshot reading ---------------------------------------------------------

def _blank(value) -> bool:
    return value is None or (isinstance(value, str) and not value.strip())


def _parse_date(value) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    s = str(value).strip()
    if re.fullmatch(r"\d{4}", s):
        return dt.date(int(s), 1, 1)
    return dt.date.fromisoformat(s[:10])


def _arch_value(value):
    if isinstance(value, str):
        parsed = try_parse_quantity(value)
        if parsed is not None:
            return int(parsed) if parsed.is_integer() and abs(parsed) < 2**53 else parsed
        text = value.strip()
        if text[:1] in "[{":
            try:
                return json.loads(text)
            except json.JSONDecodeError:
                pass
        return text
    return value


def raw_from_mapping(row: Mapping[str, Any], row_no: int = 1) -> RawRecord:
    """Build a :class:`RawRecord` from one snapshot row, or raise :class:`SchemaError`."""
    problems = []
    for col in REQUIRED_COLUMNS:
        if _blank(row.get(col)):
            problems.append((row_no, col, "required column missing or empty"))
    if problems:
        raise SchemaError(problems)

    repo_id = str(row["repo_id"]).strip()
    downloads = try_parse_quantity(row["downloads"])
    if downloads is None:
        problems.append((row_no, "downloads", f"not a nonnegative count: {row['downloads']!r}"))
    try:
        created = _parse_date(row["created_at"])
    except (TypeError, ValueError):
        problems.append((row_no, "created_at", f"unparseable date: {row['created_at']!r}"))
    modality = str(row.get("modality") or "NLP").strip()
    if modality not in MODALITIES:
        problems.append((row_no, "modality", f"expected one of {MODALITIES}, got {modality!r}"))
    subtype = str(row.get("subtype") or "foundation").strip().lower()
    if subtype not in SUBTYPES:
        problems.append((row_no, "subtype", f"expected one of {SUBTYPES}, got {subtype!r}"))
    if problems:
        raise SchemaError(problems)

    arch = row.get("arch") or {}
    if isinstance(arch, str):
        try:
            arch = json.loads(arch)
        except json.JSONDecodeError:
            raise SchemaError([(row_no, "arch", "not a JSON object")]) from None
    if not isinstance(arch, dict):
        raise SchemaError([(row_no, "arch", "not a JSON object")])
    arch = {k: _arch_value(v) for k, v in arch.items() if not _blank(v)}

    tags = row.get("tags") or []
    if isinstance(tags, str):
        tags = [t.strip() for t in tags.split(";") if t.strip()]

    kwargs: dict[str, Any] = {}
    extra: dict[str, Any] = {}
    for key, value in row.items():
        if key in REQUIRED_COLUMNS or key in ("arch", "tags", "modality", "subtype"):
            continue
        if key.startswith("arch."):
            if not _blank(value):
                arch[key[5:]] = _arch_value(value)
        elif key in _RAW_FIELDS:
            kwargs[key] = None if _blank(value) else str(value).strip()
        elif not _blank(value):
            extra[key] = value
    kwargs.setdefault("author", None)
    if kwargs["author"] is None:
        kwargs["author"] = repo_id.split("/", 1)[0] if "/" in repo_id else ""
    return RawRecord(repo_id=repo_id, downloads=int(downloads), created_at=created,
                     modality=modality, subtype=subtype, arch=arch, tags=list(tags),
                     extra=extra, **kwargs)


def read_snapshot(path: str | Path) -> list[RawRecord]:
    """Read a JSON-lines (``.jsonl``/``.json``) or CSV snapshot.

    All row problems are collected and raised together as one SchemaError.
    """
    path = Path(path)
    rows: list[tuple[int, Mapping]] = []
    problems = []
    with open(path, encoding="utf-8", newline="") as fh:
        if path.suffix.lower() == ".csv":
            rows = list(enumerate(csv.DictReader(fh), start=1))
        else:
            n = 0
            for line in fh:
                if not line.strip():
                    continue
                n += 1
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    problems.append((n, "<line>", f"invalid JSON: {exc.msg}"))
                    continue
                if not isinstance(obj, dict):
                    problems.append((n, "<line>", "expected a JSON object"))
                    continue
                rows.append((n, obj))
    records = []
    seen: set[str] = set()
    for n, row in rows:
        try:
            rec = raw_from_mapping(row, n)
        except SchemaError as exc:
            problems.extend(exc.problems)
            continue
        if rec.repo_id in seen:
            problems.append((n, "repo_id", f"duplicate repo_id {rec.repo_id!r}"))
            continue
        seen.add(rec.repo_id)
        records.append(rec)
    if problems:
        raise SchemaError(problems)
    return records


# -- manual overrides ---------------------------------------------------------

def load_org_overrides(path: str | Path) -> dict[str, str]:
    """CSV with columns ``org,region``; org matching is case-insensitive."""
    with open(path, encoding="utf-8", newline="") as fh:
        return {row["org"].strip().lower(): row["region"].strip()
                for row in csv.DictReader(fh) if row.get("org") and row.get("region")}


@dataclass(frozen=True)
class FieldOverride:
    repo_id: str
    field: str
    value: str


def load_field_overrides(path: str | Path) -> list[FieldOverride]:
    """CSV with columns ``repo_id,field,value``."""
    with open(path, encoding="utf-8", newline="") as fh:
        return [FieldOverride(r["repo_id"].strip(), r["field"].strip(), r["value"])
                for r in csv.DictReader(fh) if r.get("repo_id") and r.get("field")]


def apply_field_overrides(records: Sequence[RawRecord], overrides: Iterable[FieldOverride]) -> list[RawRecord]:
    """Return copies of ``records`` with manual corrections applied in file order.

    An empty value clears the field. ``arch.<key>`` targets the descriptor map.
    """
    by_id: dict[str, list[FieldOverride]] = {}
    for ov in overrides:
        by_id.setdefault(ov.repo_id, []).append(ov)
    out = []
    for rec in records:
        todo = by_id.get(rec.repo_id)
        if not todo:
            out.append(rec)
            continue
        data = {f.name: getattr(rec, f.name) for f in fields(RawRecord)}
        data["arch"] = dict(rec.arch)
        data["extra"] = dict(rec.extra)
        for ov in todo:
            value = None if _blank(ov.value) else ov.value.strip()
            if ov.field.startswith("arch."):
                key = ov.field[5:]
                if value is None:
                    data["arch"].pop(key, None)
                else:
                    data["arch"][key] = _arch_value(value)
            elif ov.field == "downloads":
                data["downloads"] = int(try_parse_quantity(value) or 0)
            elif ov.field == "created_at":
                data["created_at"] = _parse_date(value)
            elif ov.field == "tags":
                data["tags"] = [t.strip() for t in (value or "").split(";") if t.strip()]
            elif ov.field in _RAW_FIELDS and ov.field != "repo_id":
                data[ov.field] = value
            else:
                data["extra"][ov.field] = value
        out.append(RawRecord(**data))
    return out


# -- deduplication ------------------------------------------------------------

def is_quantized(record: RawRecord) -> bool:
    return any(QUANTIZED_PATTERN.search(s) for s in [record.repo_id, *record.tags])


def _numeric_values(record: RawRecord) -> dict[str, float]:
    out = {}
    for name in NUMERIC_FIELDS:
        v = try_parse_quantity(getattr(record, name))
        if v is not None:
            out[name] = v
    return out


def discrepancy(a: RawRecord, b: RawRecord) -> float | None:
    """Max relative difference over shared numeric fields; ``None`` if none are shared."""
    va, vb = _numeric_values(a), _numeric_values(b)
    shared = sorted(set(va) & set(vb))
    if not shared:
        return None
    return max(abs(va[k] - vb[k]) / max(abs(va[k]), abs(vb[k]), DISCREPANCY_EPS) for k in shared)


def _model_name(repo_id: str) -> str:
    return repo_id.split("/", 1)[-1].lower()


def dedupe(records: Sequence[RawRecord], mirror_prefix: str = DEFAULT_MIRROR_PREFIX,
           tolerance: float = MIRROR_TOLERANCE) -> list[RawRecord]:
    """Drop quantized derivatives and resolve official/mirror pairs.

    A mirror (id starting with ``mirror_prefix``) whose shared numeric fields
    agree with the official record within ``tolerance`` replaces it; otherwise
    the mirror is dropped. A mirror sharing no numeric field with its official
    counterpart is dropped. Input order is preserved.
    """
    kept = [r for r in records if not is_quantized(r)]
    prefix = mirror_prefix.lower()
    mirrors = {_model_name(r.repo_id): r for r in kept if r.repo_id.lower().startswith(prefix)}
    officials: dict[str, RawRecord] = {}
    for r in kept:
        if not r.repo_id.lower().startswith(prefix):
            officials.setdefault(_model_name(r.repo_id), r)
    drop: set[str] = set()
    for name, mirror in mirrors.items():
        official = officials.get(name)
        if official is None:
            continue
        d = discrepancy(official, mirror)
        if d is not None and d <= tolerance:
            drop.add(official.repo_id)
        else:
            drop.add(mirror.repo_id)
    return [r for r in kept if r.repo_id not in drop]


# -- regional emission factors ------------------------------------------------

_REGION_ALIASES = {
    "us": "united states", "usa": "united states", "u.s.": "united states",
    "united states of america": "united states",
    "uk": "united kingdom", "great britain": "united kingdom",
    "prc": "china", "south korea": "south korea", "korea": "south korea",
    "eu": "european union (27)", "european union": "european union (27)",
}


def canonical_region(name: str | None) -> str | None:
    if _blank(name):
        return None
    key = re.sub(r"\s+", " ", str(name).strip().lower())
    return _REGION_ALIASES.get(key, key)


@dataclass
class RegionEFTable:
    """Grid carbon intensity in tCO2/MWh keyed by (region, year)."""

    values: dict[tuple[str, int], float] = field(default_factory=dict)
    default_global: float = GLOBAL_DEFAULT_EF

    def __post_init__(self):
        if not 0 < self.default_global <= 2:
            raise ValueError("default_global must be in (0, 2]")
        clean = {}
        for (region, year), v in self.values.items():
            if not 0 < v <= 2:
                raise ValueError(f"intensity for {region} {year} outside (0, 2]: {v}")
            clean[(canonical_region(region), int(year))] = float(v)
        self.values = clean

    def regions(self) -> set[str]:
        return {r for r, _ in self.values}

    def lookup(self, region: str | None, year: int | None = None) -> float | None:
        """Exact year, else the nearest earlier year, else the nearest later one."""
        key = canonical_region(region)
        if key is None:
            return None
        years = sorted(y for r, y in self.values if r == key)
        if not years:
            return None
        if year is None:
            return self.values[(key, years[-1])]
        earlier = [y for y in years if y <= year]
        return self.values[(key, earlier[-1] if earlier else years[0])]


_INTENSITY_COLUMNS = ("intensity_g_per_kwh", "carbon intensity of electricity - gco2/kwh")


def load_region_ef_table(path: str | Path | None = None,
                         default_global: float = GLOBAL_DEFAULT_EF) -> RegionEFTable:
    """Read ``entity,year,intensity_g_per_kwh`` (g/kWh) and convert to t/MWh.

    The public grid-intensity export layout (``Entity,Code,Year,Carbon
    intensity of electricity - gCO2/kWh``) is accepted as well. With no path
    the bundled sample table is used.
    """
    if path is None:
        text = resources.files("traincarbon.data").joinpath("region_ef_sample.csv").read_text()
    else:
        text = Path(path).read_text(encoding="utf-8")
    reader = csv.DictReader(text.splitlines())
    cols = {c.strip().lower(): c for c in reader.fieldnames or []}
    entity = cols.get("entity")
    year = cols.get("year")
    intensity = next((cols[c] for c in _INTENSITY_COLUMNS if c in cols), None)
    if not (entity and year and intensity):
        raise SchemaError([(0, "<header>", "expected entity, year and intensity_g_per_kwh columns")])
    values = {}
    problems = []
    for n, row in enumerate(reader, start=1):
        g = try_parse_quantity(row.get(intensity))
        try:
            y = int(str(row.get(year)).strip())
        except ValueError:
            problems.append((n, year, f"bad year {row.get(year)!r}"))
            continue
        if g is None or not 0 < g / 1000.0 <= 2:
            problems.append((n, intensity, f"intensity must be in (0, 2000] g/kWh, got {row.get(intensity)!r}"))
            continue
        values[(row[entity], y)] = g / 1000.0
    if problems:
        raise SchemaError(problems)
    return RegionEFTable(values, default_global)


def resolve_region_ef(record: ModelRecord, table: RegionEFTable,
                      overrides: Mapping[str, str] | None = None) -> tuple[float, str]:
    """Return ``(ef, source)`` by priority: disclosed, region table, org override, global default."""
    if record.disclosed_ef is not None and 0 < record.disclosed_ef <= 2:
        return record.disclosed_ef, "disclosed"
    ef = table.lookup(record.region, record.year)
    if ef is not None:
        return ef, f"region_table:{canonical_region(record.region)}"
    if overrides:
        region = overrides.get((record.author or "").lower())
        ef = table.lookup(region, record.year)
        if ef is not None:
            return ef, f"org_override:{canonical_region(region)}"
    return table.default_global, "global_default"


# -- normalization ------------------------------------------------------------

_DEVICE_HOURS = re.compile(r"(device|gpu|tpu|chip|accelerator)[\s_-]*h", re.I)


def parse_hours_unit(text: str | None) -> HoursUnit:
    if text and (_DEVICE_HOURS.search(text) or text.strip().lower() == HoursUnit.DEVICE_HOURS.value):
        return HoursUnit.DEVICE_HOURS
    return HoursUnit.WALL_CLOCK


def normalize_record(raw: RawRecord) -> ModelRecord:
    """Resolve numerics and the accelerator family. Unparseable numerics become missing."""
    notes: dict[str, str] = {}
    nums: dict[str, float | None] = {}
    for name in NUMERIC_FIELDS:
        text = getattr(raw, name)
        value = try_parse_quantity(text)
        if value is None and not _blank(text):
            notes[name] = f"unparseable:{text}"
        nums[name] = value

    ef = nums["disclosed_ef"]
    if ef is not None:
        if ef == 0 or ef > 2000:
            notes["disclosed_ef"] = f"rejected:{ef}"
            nums["disclosed_ef"] = None
        elif ef > 2:
            notes["disclosed_ef"] = "converted_from_g_per_kwh"
            nums["disclosed_ef"] = ef / 1000.0

    tpu_hint = any("tpu" in t.lower() for t in raw.tags)
    acc = normalize_accelerator(raw.hardware, tpu_hint)
    if nums["device_count"] is None and acc.count is not None:
        nums["device_count"] = float(acc.count)
        notes["device_count"] = "from_hardware_text"
    if acc.imputed:
        notes["accelerator"] = f"imputed:{acc.family}"

    return ModelRecord(
        repo_id=raw.repo_id, author=raw.author, downloads=raw.downloads,
        created_at=raw.created_at, modality=raw.modality, subtype=raw.subtype,
        hardware=raw.hardware, accelerator=acc.family, accelerator_imputed=acc.imputed,
        is_tpu=acc.is_tpu, hours_unit=parse_hours_unit(raw.hours_unit), region=raw.region,
        arch_category=(raw.arch_category or None) and raw.arch_category.strip().lower(),
        arch=dict(raw.arch), tags=list(raw.tags), extra=dict(raw.extra), notes=notes,
        **nums,
    )


# -- quality control ----------------------------------------------------------

LOW_DEVICE_SECONDS = 60.0
HIGH_ATCI_MULTIPLE = 50.0
INCONSISTENCY_TOLERANCE = 0.5


def quality_filter(record: ModelRecord, spec: AcceleratorSpec,
                   overheads: OverheadConfig = OverheadConfig(),
                   low_seconds: float = LOW_DEVICE_SECONDS,
                   high_multiple: float = HIGH_ATCI_MULTIPLE,
                   inconsistency: float = INCONSISTENCY_TOLERANCE) -> list[QualityFlag]:
    """Cross-check a disclosed emission value against physical plausibility.

    Low: the implied energy, spent at the accelerator's average power, lasts
    under ``low_seconds`` of device time. High: emissions per 1e18 FLOP exceed
    ``high_multiple`` times the accelerator's peak-throughput ATCI bound.
    Inconsistent: disclosed energy times EF misses the disclosed emission by
    more than ``inconsistency`` (relative).
    """
    em = record.disclosed_emissions
    if em is None:
        raise MissingDisclosure(f"{record.repo_id}: no disclosed emissions")
    flags = []
    ef = record.ef_region
    device_seconds = em / ef * J_PER_MWH / spec.avg_power
    if device_seconds < low_seconds:
        flags.append(QualityFlag.UNREALISTICALLY_LOW)
    flops = record.total_flops
    if flops:
        bound = atci_theoretical(spec, overheads, ef, theta="peak")
        if em / (flops / EFLOP) > high_multiple * bound:
            flags.append(QualityFlag.UNREALISTICALLY_HIGH)
    if record.disclosed_energy is not None and em > 0:
        if abs(em - record.disclosed_energy * ef) / em > inconsistency:
            flags.append(QualityFlag.INCONSISTENT_SOURCES)
    return flags


# -- tiering ------------------------------------------------------------------

def classify_tier(record: ModelRecord) -> Tier:
    """Tier1Direct > Tier1Flops > Tier2 > Tier3 > Insufficient, by field presence."""
    if record.usable_emissions is not None or record.usable_energy is not None:
        return Tier.TIER1_DIRECT
    if record.has_hardware and record.training_hours is not None:
        return Tier.TIER1_DIRECT
    if record.flops and record.has_hardware:
        return Tier.TIER1_FLOPS
    if record.total_flops:
        return Tier.TIER2
    if record.params:
        return Tier.TIER3
    return Tier.INSUFFICIENT


# -- full ingest pass ---------------------------------------------------------

def prepare_records(raws: Sequence[RawRecord], table: RegionEFTable | None = None,
                    org_overrides: Mapping[str, str] | None = None,
                    registry: AcceleratorRegistry = DEFAULT_REGISTRY,
                    overheads: OverheadConfig = OverheadConfig(),
                    mirror_prefix: str = DEFAULT_MIRROR_PREFIX,
                    low_seconds: float = LOW_DEVICE_SECONDS,
                    high_multiple: float = HIGH_ATCI_MULTIPLE,
                    prototypes: Mapping | None = None) -> list[ModelRecord]:
    """dedupe -> normalize -> EF -> FLOPs (two-pass for category means) -> QC -> tier."""
    table = table if table is not None else RegionEFTable()
    records = [normalize_record(r) for r in dedupe(raws, mirror_prefix)]
    for rec in records:
        rec.ef_region, rec.ef_source = resolve_region_ef(rec, table, org_overrides)

    means = CategoryMeans()
    pending = []
    for rec in records:
        try:
            flops, method = resolve_record_flops(rec, prototypes)
        except (ValueError, KeyError) as exc:
            rec.notes["flops"] = f"error:{exc}"
            continue
        if method == "disclosed":
            rec.flops_method = method
            cat = record_category(rec)
            if cat is not None:
                means.add(cat.value, flops)
            continue
        if flops is None:
            if record_category(rec) is not None:
                pending.append(rec)
            continue
        rec.flops_estimate, rec.flops_method = flops, method
        cat = record_category(rec)
        if cat is not None:
            means.add(cat.value, flops)
    for rec in pending:
        flops, method = resolve_record_flops(rec, prototypes, means)
        rec.flops_estimate, rec.flops_method = flops, method

    for rec in records:
        if rec.disclosed_emissions is not None:
            spec = registry.lookup(rec.accelerator)
            rec.quality_flags = quality_filter(rec, spec, overheads, low_seconds, high_multiple)
        rec.tier = classify_tier(rec)
    return records
