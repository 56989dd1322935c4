"""icnlab command line

Subcommands:
    solve   closed-form symmetric equilibrium for one configuration
    sweep   equilibria over a (gamma, c_O, R) grid as CSV
    costs   caching cost versus content index as CSV
    verify  run a named verification suite
    asym    best-response dynamics in the two-access-ICN game

Exit codes: 0 success, 1 usage or configuration error, 2 verification
failure, 3 infeasible configuration (reserved).
"""

import argparse
import json
import logging
import os
import sys
import time
from typing import Any

from dotenv import load_dotenv

from icnlab.errors import IcnLabError
from icnlab.experiments.config import (
    AsymmetricSettings,
    SweepSettings,
    SymmetricSettings,
    load_settings_file,
    merge_settings,
    parse_settings,
)
from icnlab.experiments.sweep import (
    COSTS_HEADER,
    SweepSpec,
    cost_table,
    run_sweep,
    write_csv,
    write_sweep_csv,
)
from icnlab.game.asymmetric import (
    StrategyProfile,
    anchored_grid,
    default_price_grid,
    demands,
    equilibrium_profile,
    iterate_best_response,
    resolve_profile,
)
from icnlab.game.grid import PriceGrid
from icnlab.game.symmetric import SymmetricConfig, SymmetricEquilibrium, solve_equilibrium
from icnlab.model.economics import Source
from icnlab.obs.audit import AuditLogger, audit_logger_from_env
from icnlab.verify.suites import SUITES, run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFICATION = 2
EXIT_INFEASIBLE = 3

TRACE_HEADER = (
    "sweep",
    "player",
    "pa",
    "pb",
    "pc",
    "pos",
    "poc",
    "sigma_a",
    "sigma_b",
    *(f"{source.name.lower()}_{stream}" for source in Source for stream in ("a", "b")),
)


class IcnArgumentParser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_symmetric_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="YAML or `key = value` file with the flag keys")
    parser.add_argument("--m", type=int, help="Number of content types M")
    parser.add_argument("--k", type=int, help="Number of access ICNs K (default 2)")
    parser.add_argument("--gamma", type=float, help="Zipf exponent in [0, 1]")
    parser.add_argument("--rho", type=float, help="Own-price sensitivity (default 0.1)")
    parser.add_argument("--rho0", type=float, help="Content-price sensitivity (default 0.1)")
    parser.add_argument("--beta", type=float, help="Network/storage price ratio (default 10)")
    parser.add_argument("--c0", type=float, help="Access base caching cost (default 1)")
    parser.add_argument("--r", type=float, help="Transit/access cost ratio R")
    parser.add_argument("--co", type=float, help="Provider unit cost c_O")
    parser.add_argument("--epsilon", type=float, help="Reported-price offset (default 1e-9)")


def _flag_values(args: argparse.Namespace, names: tuple[str, ...]) -> dict[str, Any]:
    return {name: getattr(args, name, None) for name in names}


def build_parser() -> IcnArgumentParser:
    parser = IcnArgumentParser(
        prog="icnlab",
        description="Joint caching and pricing equilibria for hierarchical ICNs",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    solve = subparsers.add_parser("solve", help="Solve one symmetric game")
    _add_symmetric_flags(solve)
    solve.add_argument("--json", action="store_true", help="Print the report as JSON")
    solve.add_argument("--out", help="Also write the JSON report to this path")
    solve.set_defaults(handler=cmd_solve)

    sweep = subparsers.add_parser("sweep", help="Solve a parameter grid into CSV")
    sweep.add_argument("--config", help="YAML or `key = value` sweep file")
    sweep.add_argument("--gamma-from", dest="gamma_from", type=float)
    sweep.add_argument("--gamma-to", dest="gamma_to", type=float)
    sweep.add_argument("--gamma-step", dest="gamma_step", type=float)
    sweep.add_argument("--co", dest="co_list", type=float, nargs="+", help="Provider costs")
    sweep.add_argument("--r", dest="r_list", type=float, nargs="+", help="Cost ratios")
    for name, kind in (("m", int), ("k", int), ("rho", float), ("rho0", float)):
        sweep.add_argument(f"--{name}", type=kind)
    for name in ("beta", "c0", "epsilon"):
        sweep.add_argument(f"--{name}", type=float)
    sweep.add_argument("--workers", type=int, default=1, help="Parallel worker processes")
    sweep.add_argument("--out", required=True, help="CSV output path")
    sweep.set_defaults(handler=cmd_sweep)

    costs = subparsers.add_parser("costs", help="Caching cost versus content index")
    costs.add_argument("--gamma", type=float, nargs="+", required=True)
    costs.add_argument("--m", type=int, required=True)
    costs.add_argument("--c0", type=float, default=1.0)
    costs.add_argument("--out", required=True, help="CSV output path")
    costs.set_defaults(handler=cmd_costs)

    verify = subparsers.add_parser("verify", help="Run a verification suite")
    verify.add_argument("suite", choices=list(SUITES))
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--trials", type=int, help="Random configurations (suite default)")
    verify.set_defaults(handler=cmd_verify)

    asym = subparsers.add_parser("asym", help="Best-response run in the two-ICN game")
    asym.add_argument("--config", help="YAML or `key = value` file with the asymmetric keys")
    for name, kind in (("m", int), ("gamma", float), ("co", float), ("rho0", float)):
        asym.add_argument(f"--{name}", type=kind)
    for name in ("rho_a", "rho_b", "beta_a", "beta_b", "c_a0", "c_b0", "c_c0"):
        asym.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    asym.add_argument("--max-iter", dest="max_iter", type=int, default=50)
    asym.add_argument("--tol", type=float, default=1e-6)
    asym.add_argument("--grid-step", dest="grid_step", type=float, help="Price grid spacing")
    asym.add_argument("--seed", type=int, help="Shuffle the player order with this seed")
    asym.add_argument("--out", help="CSV path for the per-step trace")
    asym.set_defaults(handler=cmd_asym)

    return parser


def format_report(cfg: SymmetricConfig, eq: SymmetricEquilibrium) -> str:
    lines = [
        f"Symmetric equilibrium (M={cfg.num_contents}, K={cfg.dp.num_access}, "
        f"gamma={cfg.pm.gamma:g}, R={cfg.cm.cost_ratio:g}, cO={cfg.cm.provider_unit_cost:g})",
        f"  Th     = {eq.th}",
        f"  ThC    = {eq.thc}",
        f"  P_C    = {eq.pc:.12g} (reported {eq.reported_pc:.12g})",
        f"  P_O_s  = {eq.pos:.12g} (reported {eq.reported_pos:.12g})",
        f"  P_A    = {eq.pa:.12g}",
        f"  P_O_c  = {eq.poc:.12g}",
        f"  sigma  = {eq.sigma:.12g}",
        f"  U_A    = {eq.ua:.12g}",
        f"  U_C    = {eq.uc:.12g}",
        f"  U_O    = {eq.uo:.12g}",
    ]
    lines.extend(f"  warning: {w}" for w in eq.warnings)
    return "\n".join(lines)


def cmd_solve(args: argparse.Namespace, audit: AuditLogger, start: float) -> int:
    names = ("m", "k", "gamma", "rho", "rho0", "beta", "c0", "r", "co", "epsilon")
    raw = merge_settings(load_settings_file(args.config), _flag_values(args, names))
    settings = parse_settings(SymmetricSettings, raw)
    cfg = settings.to_config()
    eq = solve_equilibrium(cfg)

    report = eq.as_dict()
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(format_report(cfg, eq))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2)

    run_id = audit.log_run("solve", settings.model_dump(), report, start)
    for warning in eq.warnings:
        audit.log_warning(run_id, "solve", warning, settings.model_dump())
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, audit: AuditLogger, start: float) -> int:
    names = ("gamma_from", "gamma_to", "gamma_step", "co_list", "r_list")
    names += ("m", "k", "rho", "rho0", "beta", "c0", "epsilon")
    raw = merge_settings(load_settings_file(args.config), _flag_values(args, names))
    settings = parse_settings(SweepSettings, raw)
    spec = SweepSpec.from_settings(settings)

    rows = run_sweep(spec, workers=args.workers)
    count = write_sweep_csv(args.out, rows)
    print(f"Wrote {count} rows to {args.out}")
    audit.log_run("sweep", settings.model_dump(), {"rows": count, "out": args.out}, start)
    return EXIT_OK


def cmd_costs(args: argparse.Namespace, audit: AuditLogger, start: float) -> int:
    table = cost_table(args.gamma, args.m, args.c0)
    count = write_csv(args.out, COSTS_HEADER, table)
    print(f"Wrote {count} rows to {args.out}")
    inputs = {"gamma": args.gamma, "m": args.m, "c0": args.c0}
    audit.log_run("costs", inputs, {"rows": count, "out": args.out}, start)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, audit: AuditLogger, start: float) -> int:
    result = run_suite(args.suite, seed=args.seed, trials=args.trials)
    inputs = {"suite": args.suite, "seed": args.seed, "trials": args.trials}
    outputs = {"passed": result.passed, "checked": result.checked}

    if result.passed:
        print(f"PASS {result.name}: {result.checked} checks")
        audit.log_run("verify", inputs, outputs, start)
        return EXIT_OK

    print(f"FAIL {result.name} after {result.checked} checks: {'; '.join(result.messages)}")
    print("First failing configuration:")
    print(json.dumps(result.failure, indent=2, default=str))
    audit.log_run("verify", inputs, {**outputs, "failure": result.failure}, start)
    return EXIT_VERIFICATION


def _initial_profile(settings: AsymmetricSettings) -> StrategyProfile:
    asym = settings.to_config()
    if settings.init is not None:
        return resolve_profile(asym, settings.init.to_prices())
    reference = settings.reference_config()
    _, profile = equilibrium_profile(reference, solve_equilibrium(reference))
    return resolve_profile(asym, profile.prices)


def _trace_row(sweep: int, player: str, profile: StrategyProfile, sigmas) -> list:
    p = profile.prices
    counts = [c for source in Source for c in profile.caching.count(source)]
    return [sweep, player, p.pa, p.pb, p.pc, p.pos, p.poc, *sigmas, *counts]


def cmd_asym(args: argparse.Namespace, audit: AuditLogger, start: float) -> int:
    names = ("m", "gamma", "co", "rho0", "rho_a", "rho_b", "beta_a", "beta_b")
    names += ("c_a0", "c_b0", "c_c0")
    raw = merge_settings(load_settings_file(args.config), _flag_values(args, names))
    settings = parse_settings(AsymmetricSettings, raw)
    cfg = settings.to_config()
    init = _initial_profile(settings)

    grid = default_price_grid(cfg)
    if args.grid_step is not None:
        grid = PriceGrid(low=grid.low, high=grid.high, step=args.grid_step)
    grid = anchored_grid(grid, init)

    run = iterate_best_response(cfg, init, grid, args.max_iter, args.tol, seed=args.seed)

    rows = [_trace_row(0, "init", init, demands(cfg, init.prices))]
    rows += [
        _trace_row(step.sweep, step.player.value, step.profile, demands(cfg, step.profile.prices))
        for step in run.trace
    ]
    if args.out:
        write_csv(args.out, TRACE_HEADER, rows)

    final = run.final.prices
    sigma_a, sigma_b = demands(cfg, final)
    print(
        f"pa={final.pa:.9g} pb={final.pb:.9g} pc={final.pc:.9g} "
        f"pos={final.pos:.9g} poc={final.poc:.9g} sigma_a={sigma_a:.6g} sigma_b={sigma_b:.6g}",
    )
    print(f"status={run.status.value} sweeps={run.sweeps}")

    outputs = {"status": run.status.value, "sweeps": run.sweeps, "final": run.final.as_dict()}
    run_id = audit.log_run("asym", settings.model_dump(), outputs, start)
    for name, sigma in (("sigma_a", sigma_a), ("sigma_b", sigma_b)):
        if sigma < 0:
            message = f"negative demand {name}={sigma:.6g}"
            logger.warning("Final profile has %s", message)
            audit.log_warning(run_id, "asym", message, run.final.as_dict())
    return EXIT_OK


def configure_logging():
    level = os.getenv("ICNLAB_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    audit = audit_logger_from_env()
    start = time.time()

    try:
        return args.handler(args, audit, start)
    except (IcnLabError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        audit.log_run(args.command, {"argv": argv or sys.argv[1:]}, {}, start, error=str(e))
        return EXIT_USAGE


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
