"""Training-compute estimates for transformer language models.

All estimators follow ``FLOPs ~ c * N_params * N_tokens`` with adjustments
for parameter-efficient fine-tuning and mixture-of-experts routing.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import InvalidMoEGeometry


class NlpArch(str, Enum):
    ENCODER_ONLY = "encoder_only"
    DECODER_ONLY = "decoder_only"
    ENCODER_DECODER = "encoder_decoder"


DEFAULT_C_ARCH = {
    NlpArch.ENCODER_ONLY: 6.0,
    NlpArch.DECODER_ONLY: 6.0,
    NlpArch.ENCODER_DECODER: 7.0,
}
C_ARCH_RANGE = (5.0, 12.0)
ALPHA_FROZEN_RANGE = (0.2, 0.5)
ALPHA_FROZEN_DEFAULT = 0.35
ALPHA_ROUTE_RANGE = (1.4, 2.0)
ALPHA_ROUTE_DEFAULT = 1.4


def _check_range(name, value, bounds):
    lo, hi = bounds
    if not lo <= value <= hi:
        raise ValueError(f"{name}={value} outside [{lo}, {hi}]")


@dataclass(frozen=True)
class PeftConfig:
    n_frozen: float
    n_trainable: float
    alpha_frozen: float = ALPHA_FROZEN_DEFAULT


@dataclass(frozen=True)
class MoeConfig:
    n_dense: float
    top_k: int
    experts_per_layer: int
    total_experts: int
    per_expert_params: float
    alpha_route: float = ALPHA_ROUTE_DEFAULT
    active_params: float | None = None  # disclosed directly; skips the geometry formula


@dataclass(frozen=True)
class StepGeometry:
    steps: int
    world_size: int
    grad_accum: int
    seq_len: int
    per_device_batch: int


@dataclass(frozen=True)
class NlpTrainingConfig:
    n_params: float | None = None
    n_tokens: float | None = None
    arch: NlpArch = NlpArch.DECODER_ONLY
    c_arch: float | None = None
    peft: PeftConfig | None = None
    moe: MoeConfig | None = None
    step_geometry: StepGeometry | None = None
    tokens_per_epoch: float | None = None
    epochs: float | None = None

    @property
    def c(self) -> float:
        return self.c_arch if self.c_arch is not None else DEFAULT_C_ARCH[NlpArch(self.arch)]


def tokens_from_steps(steps: int, world_size: int, grad_accum: int, seq_len: int, per_device_batch: int) -> float:
    """Tokens processed: ``S * (W * A * L * B)``."""
    for name, v in (("steps", steps), ("world_size", world_size), ("grad_accum", grad_accum),
                    ("seq_len", seq_len), ("per_device_batch", per_device_batch)):
        if v <= 0:
            raise ValueError(f"{name} must be positive")
    return float(steps) * (float(world_size) * grad_accum * seq_len * per_device_batch)


def resolve_tokens(config: NlpTrainingConfig) -> tuple[float | None, str | None]:
    """Pick the token count by priority: explicit, dataset x epochs, step geometry."""
    if config.n_tokens is not None:
        return float(config.n_tokens), "disclosed"
    if config.tokens_per_epoch is not None and config.epochs is not None:
        return float(config.tokens_per_epoch) * float(config.epochs), "dataset_epochs"
    g = config.step_geometry
    if g is not None:
        return tokens_from_steps(g.steps, g.world_size, g.grad_accum, g.seq_len, g.per_device_batch), "step_geometry"
    return None, None


def nlp_train_flops(n_params: float, n_tokens: float, c_arch: float = 6.0) -> float:
    _check_range("c_arch", c_arch, C_ARCH_RANGE)
    if n_params <= 0 or n_tokens <= 0:
        raise ValueError("n_params and n_tokens must be positive")
    return c_arch * n_params * n_tokens


def peft_train_flops(n_frozen: float, n_trainable: float, n_tokens: float, c_arch: float = 6.0,
                     alpha_frozen: float = ALPHA_FROZEN_DEFAULT) -> float:
    """Frozen weights contribute ``alpha_frozen`` of their full-training cost."""
    _check_range("alpha_frozen", alpha_frozen, ALPHA_FROZEN_RANGE)
    _check_range("c_arch", c_arch, C_ARCH_RANGE)
    if min(n_frozen, n_trainable, n_tokens) < 0:
        raise ValueError("counts must be nonnegative")
    return c_arch * (alpha_frozen * n_frozen + n_trainable) * n_tokens


def moe_active_params(n_dense: float, top_k: int, experts_per_layer: int, total_experts: int,
                      per_expert_params: float) -> float:
    """Active parameters per token.

    ``total_experts / experts_per_layer`` is read as the number of MoE layers.
    """
    if experts_per_layer == 0:
        raise InvalidMoEGeometry("experts_per_layer must be > 0")
    if min(n_dense, top_k, experts_per_layer, total_experts, per_expert_params) < 0:
        raise InvalidMoEGeometry("MoE geometry must be nonnegative")
    return n_dense + top_k * (total_experts / experts_per_layer) * per_expert_params


def moe_train_flops(active_params: float, n_tokens: float, c_arch: float = 6.0,
                    alpha_route: float = ALPHA_ROUTE_DEFAULT) -> float:
    _check_range("alpha_route", alpha_route, ALPHA_ROUTE_RANGE)
    _check_range("c_arch", c_arch, C_ARCH_RANGE)
    return alpha_route * c_arch * active_params * n_tokens


def estimate_nlp_flops(config: NlpTrainingConfig) -> tuple[float | None, str]:
    """Dispatch to the dense, PEFT or MoE estimator.

    Returns ``(flops, method)``; ``flops`` is ``None`` when no token count or
    parameter count can be resolved.
    """
    tokens, token_source = resolve_tokens(config)
    if tokens is None:
        return None, "no_tokens"
    c = config.c
    if config.moe is not None:
        moe = config.moe
        active = moe.active_params
        if active is None:
            active = moe_active_params(moe.n_dense, moe.top_k, moe.experts_per_layer,
                                       moe.total_experts, moe.per_expert_params)
        return moe_train_flops(active, tokens, c, moe.alpha_route), f"moe[{token_source}]"
    if config.peft is not None:
        p = config.peft
        return peft_train_flops(p.n_frozen, p.n_trainable, tokens, c, p.alpha_frozen), f"peft[{token_source}]"
    if config.n_params is None:
        return None, "no_params"
    return nlp_train_flops(config.n_params, tokens, c), f"dense[{token_source}]"
