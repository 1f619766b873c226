"""Print the projected annual total for every year from the base year to 2035.

    python scripts/projection.py --base 41000
"""

import argparse

from traincarbon.reporting import ProjectionCurve, format_sigfigs, projection_series


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--base", type=float, required=True, help="base-year total, tCO2e")
    ap.add_argument("--base-year", type=int, default=2024)
    args = ap.parse_args()
    curve = ProjectionCurve(base_year=args.base_year)
    for year, total in projection_series(args.base, curve).items():
        print(f"{year}  share={curve.share(year):.4f}  {format_sigfigs(total, 2)} tCO2e")


if __name__ == "__main__":
    main()
