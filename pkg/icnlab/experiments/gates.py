"""Figure Gates

Pass/fail checks of the qualitative sweep claims: with a cheap provider the
transit ICN only forwards (Th_C = Th), Th_C never drops as c_O grows, and the
transit and storage prices rise with gamma.
"""

import logging
from collections import defaultdict
from collections.abc import Mapping, Sequence
from itertools import pairwise

logger = logging.getLogger(__name__)

GATE_RATIO = 0.7
FORWARDING_CO = 40.0
PRICE_CO = 60.0
DECREASE_TOLERANCE = 1e-9
DECREASE_ALLOWANCE = 0.05

Record = Mapping[str, float]


def _select(rows: Sequence[Record], r: float) -> list[Record]:
    return [row for row in rows if abs(row["R"] - r) < 1e-12]


def check_threshold_gates(
    rows: Sequence[Record],
    *,
    r: float = GATE_RATIO,
    forwarding_co: float = FORWARDING_CO,
) -> list[str]:
    """Th_C = Th at the cheapest-provider cost, Th_C nondecreasing in c_O at every gamma."""
    failures = []
    by_gamma: dict[float, list[Record]] = defaultdict(list)
    for row in _select(rows, r):
        by_gamma[row["gamma"]].append(row)
        if abs(row["cO"] - forwarding_co) < 1e-12 and row["ThC"] != row["Th"]:
            failures.append(
                f"gamma={row['gamma']:g} cO={row['cO']:g}: ThC={row['ThC']:g} != Th={row['Th']:g}",
            )

    for gamma in sorted(by_gamma):
        ordered = sorted(by_gamma[gamma], key=lambda row: row["cO"])
        for low, high in pairwise(ordered):
            if high["ThC"] < low["ThC"]:
                failures.append(
                    f"gamma={gamma:g}: ThC drops from {low['ThC']:g} (cO={low['cO']:g}) "
                    f"to {high['ThC']:g} (cO={high['cO']:g})",
                )
    return failures


def check_price_gates(
    rows: Sequence[Record],
    *,
    r: float = GATE_RATIO,
    co: float = PRICE_CO,
    allowance: float = DECREASE_ALLOWANCE,
) -> list[str]:
    """P_C and P_O^(s) nondecreasing in gamma, up to `allowance` of the steps."""
    failures = []
    series = sorted(
        (row for row in _select(rows, r) if abs(row["cO"] - co) < 1e-12),
        key=lambda row: row["gamma"],
    )
    steps = len(series) - 1
    if steps < 1:
        return failures

    for column in ("P_C", "P_O_s"):
        drops = [
            (low["gamma"], high["gamma"], low[column] - high[column])
            for low, high in pairwise(series)
            if high[column] < low[column] - DECREASE_TOLERANCE
        ]
        if len(drops) > allowance * steps:
            for g_low, g_high, size in drops:
                logger.info("%s drops by %.6g between gamma=%g and %g", column, size, g_low, g_high)
            at = ", ".join(f"{g_high:g}" for _, g_high, _ in drops)
            failures.append(
                f"{column} decreases on {len(drops)} of {steps} gamma steps "
                f"(allowance {allowance:.0%}) at gamma {at}",
            )
    return failures


def check_figure_gates(rows: Sequence[Record]) -> tuple[bool, list[str]]:
    """Run all figure gates; returns (passed, failures)."""
    failures = check_threshold_gates(rows) + check_price_gates(rows)
    return len(failures) == 0, failures
