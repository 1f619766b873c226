"""Vision FLOPs, prototype imputation and the record-level resolver."""

import datetime as dt

import pytest
from hypothesis import given, strategies as st

import oracles as O
from traincarbon.errors import EmptyCategory, PatchMismatch
from traincarbon.flops import resolve_record_flops
from traincarbon.flops_vision import (
    CategoryMeans,
    UNetLayerSpec,
    VitConfig,
    clip_train_flops,
    cnn_train_flops,
    conv2d_macs,
    cross_attention_macs,
    diffusion_train_flops,
    impute_from_prototype,
    load_prototypes,
    mm_transformer_flops,
    self_attention_macs,
    vit_config_from_map,
    vit_step_macs,
    vit_train_flops,
)
from traincarbon.records import ModelRecord

VIT_B = VitConfig(224, 224, 16, 3, 768, 12, 4)


def test_vit_base_exact():
    assert vit_step_macs(VIT_B) == 17_563_060_224


def test_vit_base_training():
    # 300 epochs of ImageNet-1k
    assert vit_train_flops(vit_step_macs(VIT_B), 300, 1_281_167) == pytest.approx(
        6 * 300 * 1_281_167 * 17_563_060_224, rel=1e-15)


@given(st.sampled_from([1, 2, 4, 8, 16]), st.integers(1, 6), st.integers(1, 6), st.integers(1, 4),
       st.integers(1, 32), st.integers(0, 6), st.sampled_from([1.0, 2.0, 4.0]))
def test_vit_matches_matmul_sum(p, a, b, c, d, layers, r):
    cfg = VitConfig(p * a, p * b, p, c, d, layers, r)
    assert vit_step_macs(cfg) == float(O.vit_macs(p * a, p * b, p, c, d, layers, r))


@given(st.integers(1, 64), st.integers(1, 64))
def test_attention_parts(n, d):
    assert self_attention_macs(n, d) == float(4 * O.matmul(n, d, d) + O.matmul(n, d, n) + O.matmul(n, n, d))


def test_cross_attention_context_dim():
    assert cross_attention_macs(4, 77, 8, 16) == 2 * 4 * 8 * 8 + 2 * 77 * 16 * 8 + 2 * 4 * 77 * 8


def test_conv2d():
    assert conv2d_macs(64, 64, 320, 320, 3) == 64 * 64 * 320 * 320 * 9


def test_patch_mismatch():
    with pytest.raises(PatchMismatch):
        vit_step_macs(VitConfig(225, 224, 16, 3, 768, 12, 4))


@pytest.mark.parametrize("fn,args", [
    (vit_train_flops, (-1, 1, 1)),
    (clip_train_flops, (-1,)),
    (cnn_train_flops, (-1, 1, 1)),
    (mm_transformer_flops, (0, 1)),
])
def test_negative_inputs(fn, args):
    with pytest.raises(ValueError):
        fn(*args)


def test_clip_factor():
    assert clip_train_flops(1e20) == pytest.approx(1.1e20)


def test_diffusion_sum():
    layers = [UNetLayerSpec(10, 20, 30), UNetLayerSpec(conv_macs=5)]
    assert diffusion_train_flops(layers, 2, 3) == 6 * 2 * 3 * 65
    assert diffusion_train_flops(layers, 2, 3, steps_per_image=4) == 4 * 6 * 2 * 3 * 65


def test_unet_layer_negative():
    with pytest.raises(ValueError):
        UNetLayerSpec(-1)


def test_cnn_resnet50():
    assert cnn_train_flops(4.1e9, 90, 1_281_167) == pytest.approx(6 * 4.1e9 * 90 * 1_281_167)


def test_config_from_map_aliases():
    cfg = vit_config_from_map({"image_size": 224, "patch_size": 16, "channels": 3, "hidden_size": 768,
                               "num_layers": 12, "mlp_ratio": 4})
    assert cfg == VIT_B


# -- prototypes and category means -------------------------------------------

def test_prototypes_cover_categories():
    protos = load_prototypes()
    assert {"vit", "clip", "dit", "diffusion", "cnn"} <= set(protos)
    assert not any(k.startswith("_") for k in protos)


def test_impute_fills_missing_keys():
    res = impute_from_prototype({"hidden_dim": 384, "layers": 12}, "vit")
    assert res.method == "prototype"
    assert res.config["hidden_dim"] == 384 and "patch_size" in res.filled


def test_impute_complete():
    proto = load_prototypes()["cnn"]
    res = impute_from_prototype(dict(proto), "cnn")
    assert res.method == "complete" and res.filled == ()


def test_impute_category_mean():
    means = CategoryMeans()
    means.extend([("vit", 1e20), ("vit", 3e20)])
    res = impute_from_prototype(None, "vit", means=means)
    assert (res.method, res.flops) == ("category_mean", 2e20)


def test_impute_empty_category():
    with pytest.raises(EmptyCategory):
        impute_from_prototype({}, "dit", means=CategoryMeans())
    with pytest.raises(EmptyCategory):
        impute_from_prototype({}, "dit")


# -- record-level resolution -------------------------------------------------

def _rec(**kw):
    base = dict(repo_id="o/m", author="o", downloads=1, created_at=dt.date(2023, 1, 1),
                modality="CV", subtype="foundation")
    base.update(kw)
    return ModelRecord(**base)


def test_resolve_disclosed_wins():
    assert resolve_record_flops(_rec(flops=1e21, params=1e9, tokens=1e9)) == (1e21, "disclosed")


def test_resolve_nlp():
    flops, method = resolve_record_flops(_rec(modality="NLP", params=1e9, tokens=1e10))
    assert (flops, method) == (6e19, "architectural:dense[disclosed]")


def test_resolve_nlp_missing():
    assert resolve_record_flops(_rec(modality="NLP", params=1e9)) == (None, None)
    assert resolve_record_flops(_rec(modality="NLP")) == (None, None)


def test_resolve_full_vit():
    arch = {"image_size": 224, "patch_size": 16, "channels": 3, "hidden_size": 768, "layers": 12,
            "mlp_ratio": 4, "epochs": 300, "images_per_epoch": 1_281_167}
    flops, method = resolve_record_flops(_rec(arch_category="vit", arch=arch))
    assert method == "architectural"
    assert flops == pytest.approx(6 * 300 * 1_281_167 * 17_563_060_224, rel=1e-15)


def test_resolve_partial_vit_uses_prototype():
    flops, method = resolve_record_flops(_rec(arch_category="vit", arch={"hidden_size": 384, "layers": 12}))
    assert method.startswith("prototype:") and "hidden_dim" not in method
    assert flops > 0


def test_resolve_clip_scales_vit():
    arch = dict(image_size=224, patch_size=16, channels=3, hidden_dim=768, layers=12, mlp_ratio=4,
                epochs=1, images_per_epoch=10)
    vit, _ = resolve_record_flops(_rec(arch_category="vit", arch=arch))
    clip, _ = resolve_record_flops(_rec(arch_category="clip", arch=arch))
    assert clip == pytest.approx(1.1 * vit)


def test_resolve_config_free_uses_mean():
    means = CategoryMeans()
    means.add("vit", 5e20)
    rec = _rec(arch_category="vit", arch={"epochs": 300})
    assert resolve_record_flops(rec, means=means) == (5e20, "category_mean")
    assert resolve_record_flops(rec) == (None, None)


def test_resolve_cnn_measured():
    rec = _rec(arch_category="cnn", measured_step_macs=4.1e9, arch={"epochs": 90, "images_per_epoch": 1e6})
    flops, method = resolve_record_flops(rec)
    assert method == "architectural" and flops == pytest.approx(6 * 4.1e9 * 90 * 1e6)


def test_transformer_category_is_token_based():
    flops, method = resolve_record_flops(_rec(arch_category="transformer", params=1e9, tokens=1e9))
    assert method.startswith("architectural:dense")
