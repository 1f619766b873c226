"""Resolve total training FLOPs for a normalized record.

Priority: disclosed value, architecture formula (with prototype fill for
vision configs), category-mean imputation.
"""

from __future__ import annotations

from typing import Mapping

from .flops_nlp import MoeConfig, NlpArch, NlpTrainingConfig, PeftConfig, StepGeometry, estimate_nlp_flops
from .flops_vision import (
    CLIP_TEXT_FACTOR,
    CategoryMeans,
    VisionCategory,
    cnn_train_flops,
    diffusion_train_flops,
    impute_from_prototype,
    load_prototypes,
    unet_layers_from_list,
    vit_config_from_map,
    vit_step_macs,
    vit_train_flops,
)
from .records import ModelRecord

_ALIASES = {"hidden_size": "hidden_dim", "num_layers": "layers"}

VISION_KEYS = {
    VisionCategory.VIT: ("image_size", "image_height", "image_width", "patch_size", "channels",
                         "hidden_dim", "layers", "mlp_ratio", "epochs", "images_per_epoch"),
    VisionCategory.DIFFUSION: ("unet_layers", "measured_step_macs", "epochs", "images_per_epoch",
                               "steps_per_image"),
    VisionCategory.CNN: ("measured_step_macs", "epochs", "images_per_epoch"),
}
VISION_KEYS[VisionCategory.CLIP] = VISION_KEYS[VisionCategory.VIT]
VISION_KEYS[VisionCategory.DIT] = VISION_KEYS[VisionCategory.VIT] + ("cross_attn_macs_per_block",)

_PROTOTYPES: dict | None = None


def _prototypes() -> dict:
    global _PROTOTYPES
    if _PROTOTYPES is None:
        _PROTOTYPES = load_prototypes()
    return _PROTOTYPES


def record_category(record: ModelRecord) -> VisionCategory | None:
    """Vision category, or ``None`` for token-based (NLP-style) estimation."""
    if record.arch_category:
        cat = VisionCategory(record.arch_category.lower())
        return None if cat is VisionCategory.TRANSFORMER else cat
    return None


def _num(arch: Mapping, key: str, cast=float):
    v = arch.get(key)
    return None if v is None else cast(v)


def nlp_config(record: ModelRecord) -> NlpTrainingConfig:
    a = record.arch
    peft = None
    if a.get("peft_n_trainable") is not None:
        peft = PeftConfig(
            n_frozen=float(a.get("peft_n_frozen", 0.0)),
            n_trainable=float(a["peft_n_trainable"]),
            alpha_frozen=float(a.get("alpha_frozen", 0.35)),
        )
    moe = None
    if a.get("moe_active_params") is not None or a.get("moe_experts_per_layer") is not None:
        moe = MoeConfig(
            n_dense=float(a.get("moe_n_dense", 0.0)),
            top_k=int(a.get("moe_top_k", 0)),
            experts_per_layer=int(a.get("moe_experts_per_layer", 1)),
            total_experts=int(a.get("moe_total_experts", 0)),
            per_expert_params=float(a.get("moe_per_expert_params", 0.0)),
            alpha_route=float(a.get("alpha_route", 1.4)),
            active_params=_num(a, "moe_active_params"),
        )
    geometry = None
    geo_keys = ("steps", "world_size", "grad_accum", "seq_len", "per_device_batch")
    if all(a.get(k) is not None for k in geo_keys):
        geometry = StepGeometry(*(int(a[k]) for k in geo_keys))
    arch = a.get("nlp_arch")
    return NlpTrainingConfig(
        n_params=record.params,
        n_tokens=record.tokens,
        arch=NlpArch(arch) if arch else NlpArch.DECODER_ONLY,
        c_arch=_num(a, "c_arch"),
        peft=peft,
        moe=moe,
        step_geometry=geometry,
        tokens_per_epoch=_num(a, "tokens_per_epoch"),
        epochs=_num(a, "epochs"),
    )


def _vision_partial(record: ModelRecord, category: VisionCategory) -> dict:
    keys = VISION_KEYS[category]
    arch = {_ALIASES.get(k, k): v for k, v in record.arch.items()}
    partial = {k: arch[k] for k in keys if arch.get(k) is not None}
    if "measured_step_macs" in keys and record.measured_step_macs is not None:
        partial["measured_step_macs"] = record.measured_step_macs
    return partial


def _vision_flops(category: VisionCategory, cfg: Mapping) -> float:
    epochs = float(cfg["epochs"])
    images = float(cfg["images_per_epoch"])
    if category in (VisionCategory.VIT, VisionCategory.CLIP, VisionCategory.DIT):
        vit = vit_config_from_map(cfg)
        ca = float(cfg.get("cross_attn_macs_per_block", 0.0)) if category is VisionCategory.DIT else 0.0
        flops = vit_train_flops(vit_step_macs(vit, ca), epochs, images)
        return CLIP_TEXT_FACTOR * flops if category is VisionCategory.CLIP else flops
    if category is VisionCategory.DIFFUSION:
        steps = float(cfg.get("steps_per_image", 1.0))
        if cfg.get("unet_layers"):
            return diffusion_train_flops(unet_layers_from_list(cfg["unet_layers"]), epochs, images, steps)
        return cnn_train_flops(float(cfg["measured_step_macs"]), epochs, images) * steps
    return cnn_train_flops(float(cfg["measured_step_macs"]), epochs, images)


def resolve_record_flops(record: ModelRecord, prototypes: Mapping | None = None,
                         means: CategoryMeans | None = None) -> tuple[float | None, str | None]:
    """Return ``(flops, method)``; ``(None, None)`` when nothing is computable."""
    if record.flops is not None:
        return record.flops, "disclosed"
    category = record_category(record)
    if category is None:
        if record.params is None and not record.arch:
            return None, None
        flops, method = estimate_nlp_flops(nlp_config(record))
        return (flops, f"architectural:{method}") if flops is not None else (None, None)

    prototypes = _prototypes() if prototypes is None else prototypes
    partial = _vision_partial(record, category)
    # training-set size alone is not an architecture config
    if not set(partial) - {"epochs", "images_per_epoch", "steps_per_image"}:
        if means is not None and means.count(category.value):
            return means.mean(category.value), "category_mean"
        return None, None
    result = impute_from_prototype(partial, category.value, prototypes)
    flops = _vision_flops(category, result.config)
    filled = [k for k in result.filled if not k.startswith("_")]
    if filled:
        return flops, "prototype:" + ",".join(filled)
    return flops, "architectural"
