"""Pseudo-missingness sweep over seeds on a snapshot or a synthetic Tier-1 corpus.

    python scripts/pseudo_missingness.py --seeds 0 1 2 3 4
    python scripts/pseudo_missingness.py snapshot.jsonl --refit
"""

import argparse

import numpy as np

from traincarbon.experiments import pseudo_missingness, synthetic_tier1_corpus
from traincarbon.ingest import load_region_ef_table, prepare_records, read_snapshot


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("snapshot", nargs="?")
    ap.add_argument("--fraction", type=float, default=0.70)
    ap.add_argument("--seeds", type=int, nargs="+", default=[42])
    ap.add_argument("--corpus-seed", type=int, default=7)
    ap.add_argument("--n", type=int, default=200, help="synthetic corpus size")
    ap.add_argument("--refit", action="store_true")
    args = ap.parse_args()
    if args.snapshot:
        records = prepare_records(read_snapshot(args.snapshot), load_region_ef_table())
    else:
        records = synthetic_tier1_corpus(args.n, args.corpus_seed)
    t2, t3 = [], []
    for seed in args.seeds:
        r = pseudo_missingness(records, args.fraction, seed, refit=args.refit)
        t2.append(r.tier2.median_re)
        t3.append(r.tier3.median_re)
        print(f"seed {seed:>5}: n={r.n_sampled:4d}  tier2 median RE {r.tier2.median_re:.3f}  "
              f"p90 {r.tier2.p90_re:.3f} | tier3 median RE {r.tier3.median_re:.3f}  p90 {r.tier3.p90_re:.3f}")
    if len(args.seeds) > 1:
        print(f"mean over seeds: tier2 {np.mean(t2):.3f}  tier3 {np.mean(t3):.3f}")


if __name__ == "__main__":
    main()
