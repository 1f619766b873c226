"""Command-line entry point.

Exit codes: 0 success, 2 schema error, 3 some records failed (results still written).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import PipelineConfig, load_config
from .errors import SchemaError, TrainCarbonError
from .experiments import pseudo_missingness, synthetic_tier1_corpus
from .ingest import (
    apply_field_overrides,
    load_field_overrides,
    load_org_overrides,
    load_region_ef_table,
    prepare_records,
    read_snapshot,
)
from .pipeline import (
    estimates_to_csv,
    holdout_pairs,
    rows_to_csv,
    run_pipeline,
    to_json,
)
from .reporting import (
    GROUP_KEYS,
    ProjectionCurve,
    evaluate_against_disclosed,
    format_sigfigs,
    project_emissions,
    projection_series,
)
from .uncertainty import analytic_uniform_shares, mc_variance_decomposition

EXIT_OK, EXIT_SCHEMA, EXIT_PARTIAL = 0, 2, 3


def _load_records(args, cfg: PipelineConfig):
    raws = read_snapshot(args.snapshot)
    if args.overrides:
        raws = apply_field_overrides(raws, load_field_overrides(args.overrides))
    orgs = load_org_overrides(args.org_regions) if args.org_regions else None
    return prepare_records(raws, load_region_ef_table(args.ef_table), orgs, cfg.registry,
                           cfg.overheads, cfg.mirror_prefix, cfg.low_seconds, cfg.high_multiple)


def cmd_ingest(args, cfg):
    records = _load_records(args, cfg)
    rows = [{
        "repo_id": r.repo_id, "tier": r.tier.value, "accelerator": r.accelerator,
        "accelerator_imputed": r.accelerator_imputed, "ef_region": r.ef_region,
        "ef_source": r.ef_source, "params": r.params, "flops": r.total_flops,
        "flops_method": r.flops_method,
        "quality_flags": ",".join(f.value for f in r.quality_flags) or "none",
    } for r in records]
    if args.output == "csv":
        return rows_to_csv(rows, list(rows[0]) if rows else ["repo_id"]), EXIT_OK
    return to_json({"records": rows}), EXIT_OK


def _run(args, cfg, key="tier"):
    return run_pipeline(args.snapshot, args.ef_table, cfg, args.org_regions, args.overrides, key)


def cmd_estimate(args, cfg):
    result = _run(args, cfg)
    code = EXIT_PARTIAL if result.partial_failure else EXIT_OK
    for repo_id, msg in result.errors:
        print(f"warning: {repo_id}: {msg}", file=sys.stderr)
    if args.output == "csv":
        return estimates_to_csv(result.estimates), code
    return to_json(result.to_dict()), code


def _plot_data(args, rows, columns):
    if args.plot_data:
        Path(args.plot_data).write_text(rows_to_csv(rows, columns), encoding="utf-8")


def cmd_aggregate(args, cfg):
    result = _run(args, cfg, args.by)
    report = result.report
    code = EXIT_PARTIAL if result.partial_failure else EXIT_OK
    _plot_data(args, [{"group": k, "total_t": g.total} for k, g in report.groups.items()], ["group", "total_t"])
    if args.output == "csv":
        rows = [{"group": k, **g.to_dict()} for k, g in report.groups.items()]
        return rows_to_csv(rows, ["group", "n", "total_t", "mean_t", "mean_atci", "n_with_flops"]), code
    return to_json(report.to_dict()), code


def cmd_project(args, cfg):
    curve = ProjectionCurve(base_year=args.base_year)
    if args.year is None:
        series = projection_series(args.base, curve)
        rows = [{"year": y, "emissions_t": v, "formatted": format_sigfigs(v, 2)} for y, v in series.items()]
    else:
        v = project_emissions(args.base, args.year, curve)
        rows = [{"year": args.year, "emissions_t": v, "formatted": format_sigfigs(v, 2)}]
    _plot_data(args, rows, ["year", "emissions_t"])
    if args.output == "csv":
        return rows_to_csv(rows, ["year", "emissions_t", "formatted"]), EXIT_OK
    return to_json({"base_year": args.base_year, "base_t": args.base, "projection": rows}), EXIT_OK


def cmd_evaluate(args, cfg):
    records = _load_records(args, cfg)
    pairs = holdout_pairs(records, cfg)
    trim = cfg.trim_per_tail if args.trim is None else args.trim
    rows = [{"repo_id": m.repo_id, "tier": e.tier.value, "estimate_t": e.emissions, "disclosed_t": d,
             "relative_error": abs(e.emissions - d) / d} for m, e, d in pairs]
    if args.output == "csv":
        return rows_to_csv(rows, ["repo_id", "tier", "estimate_t", "disclosed_t", "relative_error"]), EXIT_OK
    metrics = evaluate_against_disclosed([r["estimate_t"] for r in rows], [r["disclosed_t"] for r in rows], trim)
    return to_json({"trim_per_tail": trim, "metrics": metrics.to_dict(), "pairs": rows}), EXIT_OK


def cmd_pseudo(args, cfg):
    seed = cfg.seed if args.seed is None else args.seed
    if args.snapshot:
        records = _load_records(args, cfg)
    else:
        records = synthetic_tier1_corpus(args.synthetic, seed, registry=cfg.registry, overheads=cfg.overheads)
    result = pseudo_missingness(records, args.fraction, seed, args.mask, cfg.tier2_model,
                                cfg.tier3_model, args.refit or cfg.refit, cfg.registry, cfg.overheads)
    if args.output == "csv":
        rows = [{"pseudo_tier": name, **m.to_dict()} for name, m in (("Tier2", result.tier2), ("Tier3", result.tier3))]
        return rows_to_csv(rows, ["pseudo_tier", "n", "mae", "median_re", "p90_re"]), EXIT_OK
    return to_json(result.to_dict()), EXIT_OK


def _perturbation(text: str):
    name, _, value = text.partition("=")
    if not value:
        raise argparse.ArgumentTypeError(f"expected NAME=FRACTION, got {text!r}")
    return name, float(value)


def cmd_mc(args, cfg):
    seed = cfg.seed if args.seed is None else args.seed
    n = cfg.mc_samples if args.samples is None else args.samples
    pert = dict(args.perturbation) if args.perturbation else None
    res = mc_variance_decomposition(None, pert, n, seed, args.distribution or cfg.mc_distribution)
    analytic = analytic_uniform_shares(pert or {"F": 0.30, "K_eff": 0.20, "EF": 0.10})
    rows = [{"factor": k, "share": v, "analytic_uniform_share": analytic[k]} for k, v in res.shares.items()]
    if args.output == "csv":
        return rows_to_csv(rows, ["factor", "share", "analytic_uniform_share"]), EXIT_OK
    return to_json({"n_samples": n, "seed": seed, "distribution": res.distribution, "shares": rows}), EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--ef-table", help="grid intensity CSV (entity, year, intensity_g_per_kwh)")
    common.add_argument("--overrides", help="CSV of manual field corrections (repo_id, field, value)")
    common.add_argument("--org-regions", help="CSV mapping organizations to regions (org, region)")
    common.add_argument("--output", choices=("json", "csv"), default="json")
    common.add_argument("-o", "--out", help="write to this file instead of stdout")
    common.add_argument("--workers", type=int, help="threads for per-record estimation")

    p = argparse.ArgumentParser(prog="traincarbon", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", parents=[common], help="normalize, dedupe and tier a snapshot")
    s.add_argument("snapshot")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("estimate", parents=[common], help="per-record emission estimates")
    s.add_argument("snapshot")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("aggregate", parents=[common], help="grouped totals")
    s.add_argument("snapshot")
    s.add_argument("--by", choices=sorted(GROUP_KEYS), default="region")
    s.add_argument("--plot-data", help="also write group,total_t CSV here")
    s.set_defaults(func=cmd_aggregate)

    s = sub.add_parser("project", parents=[common], help="scale a base-year total by electricity share")
    s.add_argument("--base", type=float, required=True, help="base-year total, tCO2e")
    s.add_argument("--base-year", type=int, default=2024)
    s.add_argument("--year", type=int, help="target year (default: every year to 2035)")
    s.add_argument("--plot-data", help="also write year,emissions_t CSV here")
    s.set_defaults(func=cmd_project)

    s = sub.add_parser("evaluate", parents=[common], help="hold out disclosures and score estimates")
    s.add_argument("snapshot")
    s.add_argument("--trim", type=float, help="fraction trimmed from each RE tail")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("pseudo-missingness", parents=[common], help="mask Tier-1 metadata and re-estimate")
    s.add_argument("snapshot", nargs="?", help="snapshot (omit to use a synthetic corpus)")
    s.add_argument("--fraction", type=float, default=0.70)
    s.add_argument("--seed", type=int)
    s.add_argument("--mask", choices=("standard", "none"), default="standard")
    s.add_argument("--refit", action="store_true", help="refit regressions on unsampled records")
    s.add_argument("--synthetic", type=int, default=200, help="synthetic corpus size")
    s.set_defaults(func=cmd_pseudo)

    s = sub.add_parser("mc", parents=[common], help="Monte Carlo variance decomposition")
    s.add_argument("--samples", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--distribution", choices=("uniform", "lognormal"))
    s.add_argument("--perturbation", type=_perturbation, action="append",
                   help="NAME=FRACTION, repeatable (default F=0.3 K_eff=0.2 EF=0.1)")
    s.set_defaults(func=cmd_mc)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.workers is not None:
            cfg = replace(cfg, workers=args.workers)
        text, code = args.func(args, cfg)
    except SchemaError as exc:
        for row, col, msg in exc.problems:
            print(f"schema error: row {row}, column {col}: {msg}", file=sys.stderr)
        return EXIT_SCHEMA
    except (TrainCarbonError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
