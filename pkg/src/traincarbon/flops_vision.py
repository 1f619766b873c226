"""Training-compute estimates for vision and multimodal architectures.

Per-step costs are counted in multiply-accumulates (MACs); training FLOPs use
``6 * epochs * images * MACs`` (3x for forward+backward, 2x MAC->FLOP).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from enum import Enum
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .errors import EmptyCategory, PatchMismatch

TRAIN_MULTIPLIER = 6.0
CLIP_TEXT_FACTOR = 1.1


class VisionCategory(str, Enum):
    VIT = "vit"
    CLIP = "clip"
    DIFFUSION = "diffusion"
    DIT = "dit"
    CNN = "cnn"
    TRANSFORMER = "transformer"


@dataclass(frozen=True)
class VitConfig:
    image_height: int
    image_width: int
    patch_size: int
    channels: int
    hidden_dim: int
    layers: int
    mlp_ratio: float
    epochs: float | None = None
    images_per_epoch: float | None = None

    @property
    def n_tokens(self) -> int:
        """Patch tokens plus one class token."""
        return self.image_height * self.image_width // (self.patch_size ** 2) + 1


@dataclass(frozen=True)
class UNetLayerSpec:
    conv_macs: float = 0.0
    self_attn_macs: float = 0.0
    cross_attn_macs: float = 0.0

    def __post_init__(self):
        if min(self.conv_macs, self.self_attn_macs, self.cross_attn_macs) < 0:
            raise ValueError("MAC contributions must be >= 0")

    @property
    def total(self) -> float:
        return self.conv_macs + self.self_attn_macs + self.cross_attn_macs


def conv2d_macs(out_h: int, out_w: int, in_channels: int, out_channels: int, kernel: int) -> float:
    return float(out_h) * out_w * out_channels * in_channels * kernel * kernel


def self_attention_macs(n_tokens: int, dim: int) -> float:
    """Q/K/V/output projections plus the two N x N products."""
    return 4.0 * n_tokens * dim * dim + 2.0 * n_tokens * n_tokens * dim


def cross_attention_macs(n_query: int, n_context: int, dim: int, context_dim: int | None = None) -> float:
    context_dim = dim if context_dim is None else context_dim
    return (2.0 * n_query * dim * dim            # Q and output projections
            + 2.0 * n_context * context_dim * dim  # K and V projections of the context
            + 2.0 * n_query * n_context * dim)


def _check_vit(cfg: VitConfig) -> None:
    for f in ("image_height", "image_width", "patch_size", "channels", "hidden_dim"):
        if getattr(cfg, f) <= 0:
            raise ValueError(f"{f} must be positive")
    if cfg.layers < 0 or cfg.mlp_ratio <= 0:
        raise ValueError("layers must be >= 0 and mlp_ratio > 0")
    if cfg.image_height % cfg.patch_size or cfg.image_width % cfg.patch_size:
        raise PatchMismatch(
            f"patch size {cfg.patch_size} does not divide {cfg.image_height}x{cfg.image_width}")


def vit_step_macs(config: VitConfig, cross_attn_macs_per_block: float = 0.0) -> float:
    """Single forward-pass MACs: ``HWCd + L[(4+2r)Nd^2 + 2N^2 d (+ CA)]``."""
    _check_vit(config)
    h, w, c, d = config.image_height, config.image_width, config.channels, config.hidden_dim
    n = config.n_tokens
    embed = h * w * c * d
    block = (4 + 2 * config.mlp_ratio) * n * d * d + 2 * n * n * d + cross_attn_macs_per_block
    return float(embed + config.layers * block)


def vit_train_flops(macs: float, epochs: float, images: float) -> float:
    if min(macs, epochs, images) < 0:
        raise ValueError("inputs must be nonnegative")
    return TRAIN_MULTIPLIER * epochs * images * macs


def clip_train_flops(vit_flops: float) -> float:
    """Adds a text branch costing 10% of the vision branch."""
    if vit_flops < 0:
        raise ValueError("vit_flops must be nonnegative")
    return CLIP_TEXT_FACTOR * vit_flops


def diffusion_train_flops(layers: Sequence[UNetLayerSpec], epochs: float, images: float,
                          steps_per_image: float = 1.0) -> float:
    step = sum(layer.total for layer in layers)
    return TRAIN_MULTIPLIER * epochs * images * steps_per_image * step


def dit_train_flops(config: VitConfig, epochs: float, images: float,
                    cross_attn_macs_per_block: float = 0.0) -> float:
    return TRAIN_MULTIPLIER * epochs * images * vit_step_macs(config, cross_attn_macs_per_block)


def mm_transformer_flops(n_params: float, n_tokens: float) -> float:
    if n_params <= 0 or n_tokens <= 0:
        raise ValueError("n_params and n_tokens must be positive")
    return 6.0 * n_params * n_tokens


def cnn_train_flops(measured_step_macs: float, epochs: float, images: float) -> float:
    """CNN records carry a measured single-step MAC count; only 6*E*I is applied."""
    if measured_step_macs < 0:
        raise ValueError("measured_step_macs must be nonnegative")
    return vit_train_flops(measured_step_macs, epochs, images)


# -- prototype imputation ----------------------------------------------------

def load_prototypes(path=None) -> dict[str, dict]:
    """Load per-category prototype configs (JSON object keyed by category)."""
    if path is None:
        text = resources.files("traincarbon.data").joinpath("prototypes.json").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    data = json.loads(text)
    return {k: v for k, v in data.items() if not k.startswith("_")}


class CategoryMeans:
    """Running mean of completed-model FLOPs per category.

    Fill in a first pass over records with computable FLOPs, then query in a
    second pass.
    """

    def __init__(self):
        self._sum: dict[str, float] = {}
        self._n: dict[str, int] = {}

    def add(self, category: str, flops: float) -> None:
        category = str(VisionCategory(category).value)
        self._sum[category] = self._sum.get(category, 0.0) + float(flops)
        self._n[category] = self._n.get(category, 0) + 1

    def extend(self, items: Iterable[tuple[str, float]]) -> None:
        for category, flops in items:
            self.add(category, flops)

    def mean(self, category: str) -> float:
        category = str(VisionCategory(category).value)
        n = self._n.get(category, 0)
        if n == 0:
            raise EmptyCategory(f"no completed models in category {category!r}")
        return self._sum[category] / n

    def count(self, category: str) -> int:
        return self._n.get(str(VisionCategory(category).value), 0)


@dataclass(frozen=True)
class ImputationResult:
    config: dict | None
    flops: float | None
    filled: tuple[str, ...]
    method: str  # "complete", "prototype", "category_mean"


def impute_from_prototype(partial: Mapping | None, category: str,
                          prototypes: Mapping[str, Mapping] | None = None,
                          means: CategoryMeans | None = None) -> ImputationResult:
    """Fill missing architecture fields from the category prototype.

    With no recoverable config at all (``partial`` empty or ``None``) the
    category mean FLOPs from ``means`` is returned instead.
    """
    category = str(VisionCategory(category).value)
    prototypes = load_prototypes() if prototypes is None else prototypes
    partial = {k: v for k, v in (partial or {}).items() if v is not None}
    if not partial:
        if means is None:
            raise EmptyCategory(f"no category means available for {category!r}")
        return ImputationResult(None, means.mean(category), (), "category_mean")
    proto = prototypes.get(category, {})
    filled = tuple(sorted(k for k in proto if k not in partial))
    config = {**proto, **partial}
    return ImputationResult(config, None, filled, "prototype" if filled else "complete")


VIT_KEYS = {f.name for f in fields(VitConfig)}


def vit_config_from_map(arch: Mapping) -> VitConfig:
    """Build a :class:`VitConfig` from a descriptor map (``image_size`` sets both sides)."""
    data = dict(arch)
    if "image_size" in data:
        data.setdefault("image_height", data["image_size"])
        data.setdefault("image_width", data["image_size"])
    if "hidden_size" in data:
        data.setdefault("hidden_dim", data["hidden_size"])
    if "num_layers" in data:
        data.setdefault("layers", data["num_layers"])
    kwargs = {k: data[k] for k in VIT_KEYS if k in data}
    for k in ("image_height", "image_width", "patch_size", "channels", "hidden_dim", "layers"):
        if k in kwargs:
            kwargs[k] = int(kwargs[k])
    return VitConfig(**kwargs)


def unet_layers_from_list(items: Iterable[Mapping]) -> list[UNetLayerSpec]:
    return [UNetLayerSpec(**{k: float(v) for k, v in item.items()}) for item in items]


def with_training(config: VitConfig, epochs: float, images: float) -> VitConfig:
    return replace(config, epochs=epochs, images_per_epoch=images)
