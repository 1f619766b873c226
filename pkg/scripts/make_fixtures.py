"""Regenerate the JSON-lines fixtures under tests/fixtures/.

    python scripts/make_fixtures.py [--out tests/fixtures]
"""

import argparse
import json
from pathlib import Path

import numpy as np

# Public model-card metadata. Emission disclosures are deliberately left out
# so the pipeline has to estimate them; the reference values ride along in
# expected_t (published estimate) and disclosed_t (card disclosure).
GOLDEN = [
    dict(repo_id="meta-llama/Llama-2-7b-hf", downloads=1500000, created_at="2023-07-18",
         params="7B", tokens="2T", hardware="A100-80GB", training_hours="184,320",
         hours_unit="device_hours", region="United States", expected_t=33, disclosed_t=31.22),
    dict(repo_id="meta-llama/Llama-2-13b-hf", downloads=400000, created_at="2023-07-18",
         params="13B", tokens="2T", hardware="A100-80GB", training_hours="368,640",
         hours_unit="device_hours", region="United States", expected_t=52, disclosed_t=62.44),
    dict(repo_id="meta-llama/Llama-2-70b-hf", downloads=300000, created_at="2023-07-18",
         params="70B", tokens="2T", hardware="A100-80GB", training_hours="1,720,320",
         hours_unit="device_hours", region="United States", expected_t=327, disclosed_t=291.42),
    dict(repo_id="bigscience/bloom", downloads=50000, created_at="2022-07-11",
         params="176B", tokens="366B", hardware="384 x A100 80GB", training_hours="1,082,990",
         hours_unit="device_hours", region="France", disclosed_energy="433.196",
         disclosed_ef="0.057", expected_t=24.7, disclosed_t=24.7),
    dict(repo_id="CompVis/stable-diffusion-v1-4", downloads=800000, created_at="2022-08-22",
         modality="CV", hardware="A100 PCIe 40GB", device_count="256", training_hours="150000",
         hours_unit="device_hours", region="United States", arch_category="diffusion",
         expected_t=13.3, disclosed_t=11.25),
    dict(repo_id="runwayml/stable-diffusion-v1-5", downloads=2000000, created_at="2022-10-20",
         modality="CV", hardware="A100 PCIe 40GB", device_count="256", training_hours="150000",
         hours_unit="device_hours", region="United States", arch_category="diffusion",
         expected_t=13.5, disclosed_t=11.25),
    dict(repo_id="stabilityai/stable-diffusion-2", downloads=300000, created_at="2022-11-23",
         modality="CV", hardware="A100 PCIe 40GB", device_count="256", training_hours="200000",
         hours_unit="device_hours", region="United States", arch_category="diffusion",
         expected_t=17, disclosed_t=15),
    dict(repo_id="facebook/sam-vit-base", downloads=500000, created_at="2023-04-12",
         modality="CV", hardware="256 x A100", training_hours="68", hours_unit="wall_clock",
         disclosed_energy="6.963", region="United States", arch_category="vit",
         expected_t=2.7, disclosed_t=2.8),
]

GPU_TEXT = ["A100", "A100 80GB", "8x H100", "H800", "V100", "TPUv4-128", "A800", "L4", "MI250X", "T4"]
VISION = ["vit", "clip", "dit", "cnn"]


def mixed(n=50, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        kind = i % 10
        org = ["acme", "lab", "uni", "corp", "meta-like"][i % 5]
        row = dict(repo_id=f"{org}/model-{i:02d}", downloads=int(rng.integers(5000, 10**6)),
                   created_at=f"{2020 + i % 5}-{1 + i % 12:02d}-15",
                   region=["United States", "France", "China", "", "Germany"][i % 5])
        params = float(10 ** rng.uniform(7.5, 10.5))
        if kind == 0:  # full hardware and runtime
            row.update(params=f"{params / 1e9:.2f}B", hardware=GPU_TEXT[i % len(GPU_TEXT)],
                       device_count=str(int(2 ** rng.integers(3, 8))),
                       training_hours=f"{rng.uniform(10, 2000):.1f}")
        elif kind == 1:  # disclosed emissions near 2e-4 t per 1e18 FLOP
            flops = 6 * params * params * 20
            row.update(params=f"{params:.3e}", tokens=f"{params * 20:.3e}", hardware="A100",
                       disclosed_emissions=f"{flops / 1e18 * 2e-4 * rng.uniform(0.5, 2):.4g}")
        elif kind == 2:  # disclosed FLOPs and hardware
            row.update(flops=f"{rng.uniform(1, 9):.2f}x10^{int(rng.integers(19, 23))}",
                       hardware=GPU_TEXT[(i + 3) % len(GPU_TEXT)])
        elif kind == 3:  # FLOPs only
            row.update(flops=f"{rng.uniform(1, 9):.1f}e{int(rng.integers(18, 23))}")
        elif kind == 4:  # params and tokens
            row.update(params=f"{params / 1e6:.0f}M", tokens=f"{rng.uniform(0.1, 3):.2f}T",
                       subtype="finetune")
        elif kind == 5:  # vision architectures, some partial
            cat = VISION[(i // 10) % len(VISION)]
            row.update(modality="CV", arch_category=cat)
            if cat == "cnn":
                row.update(measured_step_macs="4.1e9", arch={"epochs": 90, "images_per_epoch": 1281167})
            elif i % 20 == 5:
                row.update(arch={"hidden_size": 384, "layers": 12, "epochs": 300})
            else:
                row.update(arch={"image_size": 224, "patch_size": 16, "hidden_size": 768,
                                 "layers": 12, "mlp_ratio": 4, "channels": 3,
                                 "epochs": 30, "images_per_epoch": 1.4e7})
        elif kind == 6:  # params only, instruct
            row.update(params=f"{params / 1e9:.1f}B", subtype="instruct")
        elif kind == 7:  # MoE or PEFT descriptors
            if i % 20 == 7:
                row.update(params="47B", tokens="1T", arch={"moe_active_params": 1.3e10})
            else:
                row.update(params="7B", tokens="50M", subtype="finetune",
                           arch={"peft_n_frozen": 7e9, "peft_n_trainable": 4e6})
        elif kind == 8:  # derivative and duplicate cases
            if i % 20 == 8:
                row["repo_id"] = f"{org}/model-{i:02d}-GGUF"
                row["params"] = "7B"
            else:
                row.update(params="1.2B", tokens="300B")
        else:  # config-free vision record or insufficient metadata
            if i % 20 == 9:
                row.update(modality="CV", arch_category="vit")
            else:
                row.update(modality="Audio", params="not stated")
        rows.append(row)
    # a mirror pair that agrees and one that does not
    rows.append(dict(repo_id="upstream/llama-mini", downloads=90000, created_at="2024-02-01",
                     params="1.1B", tokens="3T", region="United States"))
    rows.append(dict(repo_id="unsloth/llama-mini", downloads=60000, created_at="2024-02-03",
                     params="1.1005B", tokens="3T"))
    rows.append(dict(repo_id="upstream/qwen-mini", downloads=90000, created_at="2024-03-01",
                     params="0.5B", tokens="2T"))
    rows.append(dict(repo_id="unsloth/qwen-mini", downloads=50000, created_at="2024-03-02",
                     params="0.6B", tokens="2T", tags=["4bit"]))
    # quality-control cases
    rows.append(dict(repo_id="tiny/encoder-0.04g", downloads=12000, created_at="2022-05-01",
                     params="110M", disclosed_emissions="4.0e-8", hardware="V100"))
    rows.append(dict(repo_id="big/overclaimed", downloads=20000, created_at="2023-05-01",
                     flops="3.26e21", disclosed_emissions="5380", hardware="A100"))
    return rows


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests" / "fixtures"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(out / "table2_golden.jsonl", GOLDEN)
    rows = mixed(44)
    write_jsonl(out / "mixed_50.jsonl", rows)
    print(f"wrote {len(GOLDEN)} golden rows and {len(rows)} mixed rows to {out}")


if __name__ == "__main__":
    main()
