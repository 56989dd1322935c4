#!/usr/bin/env python3
"""Check a sweep CSV against the figure gates and exit non-zero on failure."""

import sys
from pathlib import Path

# Add repository root to path
sys.path.insert(0, str(Path(__file__).resolve().parents[2]))

from icnlab.experiments.gates import check_figure_gates
from icnlab.experiments.sweep import read_sweep_csv


def print_results(rows: list[dict], *, passed: bool, failures: list[str]):
    """Print formatted results table."""
    gammas = sorted({row["gamma"] for row in rows})
    costs = sorted({row["cO"] for row in rows})
    print("\n" + "=" * 60)
    print("SWEEP FIGURE GATES")
    print("=" * 60)
    print(f"Rows:        {len(rows)}")
    if gammas:
        print(f"Gamma range: {gammas[0]:g} .. {gammas[-1]:g} ({len(gammas)} values)")
    print(f"Provider cO: {', '.join(f'{c:g}' for c in costs)}")

    print("=" * 60)
    if passed:
        print("ALL GATES PASSED")
    else:
        print("GATES FAILED:")
        for failure in failures:
            print(f"  - {failure}")
    print("=" * 60)


def main():
    """Main entry point."""
    import argparse

    parser = argparse.ArgumentParser(description="Check sweep CSV figure gates")
    parser.add_argument("sweep_csv", help="CSV written by `icnlab sweep`")
    args = parser.parse_args()

    rows = read_sweep_csv(args.sweep_csv)
    passed, failures = check_figure_gates(rows)
    print_results(rows, passed=passed, failures=failures)

    sys.exit(0 if passed else 1)


if __name__ == "__main__":
    main()
