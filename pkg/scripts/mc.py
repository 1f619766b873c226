"""Monte Carlo variance shares of F, K_eff and EF, next to the uniform closed form.

    python scripts/mc.py --samples 100000 --seed 1 --distribution lognormal
"""

import argparse

from traincarbon.uncertainty import MC_PERTURBATIONS, analytic_uniform_shares, mc_variance_decomposition


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--distribution", choices=("uniform", "lognormal"), default="uniform")
    args = ap.parse_args()
    res = mc_variance_decomposition(None, MC_PERTURBATIONS, args.samples, args.seed, args.distribution)
    analytic = analytic_uniform_shares(MC_PERTURBATIONS)
    print(f"{'factor':8} {'a':>5} {'mc share':>9} {'closed form':>12}")
    for k, share in res.shares.items():
        print(f"{k:8} {MC_PERTURBATIONS[k]:5.2f} {share:9.4f} {analytic[k]:12.4f}")


if __name__ == "__main__":
    main()
