"""Parameter Sweeps

Solves the symmetric game over a (gamma, c_O, R) grid and writes the results
as deterministic CSV. Rows always come out gamma-major, then c_O, then R,
whatever order parallel workers finish in.
"""

import csv
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import astuple, dataclass, field
from pathlib import Path

from joblib import Parallel, delayed

from icnlab.errors import InvalidParameterError
from icnlab.experiments.config import SweepSettings
from icnlab.game.symmetric import DEFAULT_EPSILON, build_config, solve_equilibrium
from icnlab.model.economics import caching_costs
from icnlab.model.popularity import new_popularity

logger = logging.getLogger(__name__)

MAX_GRID_POINTS = 1_000_000

SWEEP_HEADER = (
    "gamma",
    "M",
    "K",
    "R",
    "c0",
    "cO",
    "rho",
    "rho0",
    "beta",
    "Th",
    "ThC",
    "P_C",
    "P_O_s",
    "P_A",
    "P_O_c",
    "sigma",
    "U_A",
    "U_C",
    "U_O",
)
COSTS_HEADER = ("gamma", "i", "cost")


def gamma_count(start: float, stop: float, step: float) -> int:
    if not step > 0:
        raise InvalidParameterError("gamma_step", "must be > 0")
    if not stop >= start:
        raise InvalidParameterError("gamma_to", "must be >= gamma_from")
    return math.floor((stop - start) / step + 1e-9) + 1


def gamma_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive gamma range, values rounded to 12 decimals."""
    return [round(start + n * step, 12) for n in range(gamma_count(start, stop, step))]


@dataclass(frozen=True)
class SweepSpec:
    gamma_from: float
    gamma_to: float
    gamma_step: float
    co_list: tuple[float, ...]
    r_list: tuple[float, ...]
    m: int = 100
    k: int = 2
    rho: float = 0.1
    rho0: float = 0.1
    beta: float = 10.0
    c0: float = 1.0
    epsilon: float = DEFAULT_EPSILON
    gammas: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.co_list:
            raise InvalidParameterError("co_list", "must not be empty")
        if not self.r_list:
            raise InvalidParameterError("r_list", "must not be empty")
        count = gamma_count(self.gamma_from, self.gamma_to, self.gamma_step)
        size = count * len(self.co_list) * len(self.r_list)
        if size > MAX_GRID_POINTS:
            msg = f"has {size} points, limit is {MAX_GRID_POINTS}"
            raise InvalidParameterError("grid", msg)
        gammas = gamma_grid(self.gamma_from, self.gamma_to, self.gamma_step)
        object.__setattr__(self, "gammas", tuple(gammas))

    @classmethod
    def from_settings(cls, settings: SweepSettings) -> "SweepSpec":
        values = settings.model_dump()
        values["co_list"] = tuple(values["co_list"])
        values["r_list"] = tuple(values["r_list"])
        return cls(**values)

    def points(self) -> list[tuple[float, float, float]]:
        """(gamma, c_O, R) in output order."""
        return [(g, co, r) for g in self.gammas for co in self.co_list for r in self.r_list]


@dataclass(frozen=True)
class SweepRow:
    """One solved grid point; field order matches SWEEP_HEADER."""

    gamma: float
    m: int
    k: int
    r: float
    c0: float
    co: float
    rho: float
    rho0: float
    beta: float
    th: int
    thc: int
    pc: float
    pos: float
    pa: float
    poc: float
    sigma: float
    ua: float
    uc: float
    uo: float

    def as_record(self) -> dict[str, float | int]:
        return dict(zip(SWEEP_HEADER, astuple(self), strict=True))


def solve_point(spec: SweepSpec, gamma: float, co: float, r: float) -> SweepRow:
    cfg = build_config(
        m=spec.m,
        gamma=gamma,
        r=r,
        co=co,
        c0=spec.c0,
        k=spec.k,
        rho=spec.rho,
        rho0=spec.rho0,
        beta=spec.beta,
        epsilon=spec.epsilon,
    )
    eq = solve_equilibrium(cfg)
    return SweepRow(
        gamma=gamma,
        m=spec.m,
        k=spec.k,
        r=r,
        c0=spec.c0,
        co=co,
        rho=spec.rho,
        rho0=spec.rho0,
        beta=spec.beta,
        th=eq.th,
        thc=eq.thc,
        pc=eq.pc,
        pos=eq.pos,
        pa=eq.pa,
        poc=eq.poc,
        sigma=eq.sigma,
        ua=eq.ua,
        uc=eq.uc,
        uo=eq.uo,
    )


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """Solve every grid point; joblib keeps results in submission order."""
    points = spec.points()
    logger.info("Sweeping %d grid points with %d worker(s)", len(points), workers)
    rows = Parallel(n_jobs=workers)(delayed(solve_point)(spec, g, co, r) for g, co, r in points)
    return list(rows)


def format_value(value: float | int | str) -> str:
    if isinstance(value, str | int):
        return str(value)
    return format(float(value), ".17g")


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Write a header plus rows with LF endings; returns the number of data rows."""
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.info("Wrote %d rows to %s", count, path)
    return count


def write_sweep_csv(path: str | Path, rows: Sequence[SweepRow]) -> int:
    return write_csv(path, SWEEP_HEADER, (astuple(row) for row in rows))


def cost_table(gammas: Sequence[float], m: int, c0: float) -> list[tuple[float, int, float]]:
    """(gamma, i, c0 / q(i)) for every gamma and content index."""
    table = []
    for gamma in gammas:
        costs = caching_costs(float(c0), new_popularity(m, gamma))
        table.extend((gamma, i, float(cost)) for i, cost in enumerate(costs, start=1))
    return table


def read_sweep_csv(path: str | Path) -> list[dict[str, float]]:
    """Load a sweep CSV written by `write_sweep_csv` with numeric values."""
    with open(path, newline="", encoding="utf-8") as f:
        return [{k: float(v) for k, v in record.items()} for record in csv.DictReader(f)]
