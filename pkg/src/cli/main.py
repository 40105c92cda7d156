"""cellmeta: coverage, moments and meta-distribution tables as CSV.

Usage:
    cellmeta coverage --lambda 1e-4 --height 10 --theta-db 0
    cellmeta meta --method gil-pelaez --x-grid 0.1:0.9:0.1
    cellmeta sweep --axis h --grid 1:100:1 --out height.csv
    cellmeta simulate --n 100000 --seed 7 --report meta

Exit status: 0 on success, 1 on bad input, 2 when a numerical routine fails.
"""

import argparse
import logging
import sys
from pathlib import Path

from dotenv import load_dotenv

from src.capacity.optimize import optimize_capacity, optimize_height, optimize_height_density
from src.capacity.spatial import spatial_capacity
from src.capacity.sweep import SWEEP_COLUMNS, meta_surface, sweep
from src.cli.config import COMMANDS, RunConfig, parse_config
from src.cli.report import TOOL_VERSION, CsvReport, format_cell
from src.coverage.models import NetworkConfig, RateThreshold, SirThreshold
from src.coverage.probability import coverage_probability, rate_coverage_probability, sir_threshold
from src.metadist.models import Method
from src.metadist.recovery import GIL_PELAEZ_SPEC, meta_curve
from src.moments.moments import central_variance, hausdorff_margin, kernel_for, moment_sequence
from src.propagation.pathloss import clamp_warning
from src.simulator.estimators import empirical_coverage_fading, empirical_meta, ks_critical
from src.utils.errors import ConfigError, NumericalError

logger = logging.getLogger(__name__)

AXIS_UNITS = {"lambda": "1/m^2", "h": "m", "n_s": "", "theta": "1", "r_o": "bit/s", "x": "1"}
COLUMN_UNITS = {"scc": "1/m^2", "src": "1/m^2"}
META_COLUMNS = [("x", "1"), ("ccdf", "1"), ("method", ""), ("mu", ""), ("diagnostics", "")]
SIMULATION_METHOD = "monte-carlo"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    add = common.add_argument
    add("--config", type=Path, help="key=value config file")
    add("--deployment", choices=["umi", "uma"])
    add("--los-a", dest="a", type=float, help="LoS-probability parameter a")
    add("--los-b", dest="b", type=float, help="LoS-probability parameter b")
    add("--lambda", dest="lambda", type=float, help="BS density [1/m^2]")
    add("--height", dest="h", type=float, help="BS height [m]")
    add("--n-a", dest="n_a", type=int)
    add("--n-s", dest="n_s", type=int)
    add("--bandwidth", dest="w", type=float, help="[Hz]")
    add("--carrier", dest="f", type=float, help="[GHz]")
    add("--full-load", dest="full_load", action="store_const", const=True)
    add("--theta-db", dest="theta_db", type=float, help="SIR threshold [dB]")
    add("--r-o", dest="r_o", type=float, help="rate threshold [bit/s]")
    add("--method", choices=[m.value for m in Method])
    add("--mu", type=int)
    add("--t-max", dest="t_max", type=float)
    add("--rel-tol", dest="rel_tol", type=float)
    add("--abs-tol", dest="abs_tol", type=float)
    add("--n", type=int, help="Monte Carlo realizations")
    add("--seed", type=int)
    add("--window-factor", dest="window_factor", type=float, help="interference radius floor in units of 1/sqrt(pi lambda)")
    add("--tail-fraction", dest="tail_fraction", type=float, help="NLoS interference share allowed beyond the radius")
    add("--report", choices=["meta", "coverage", "moments"])
    add("--block-size", dest="block_size", type=int)
    add("--workers", type=int)
    add("--x", type=float, help="reliability for scc/src/sweep/optimize")
    add("--x-grid", dest="x_grid", help="reliabilities, start:stop:step or a,b,c")
    add("--axis", help="sweep axis")
    add("--grid", help="sweep values; theta in dB")
    add("--heights", help="surface heights [m]")
    add("--target", choices=["height", "height-density", "capacity"])
    add("--h-bracket", dest="h_bracket", help="lo,hi [m]")
    add("--lambda-grid", dest="lambda_grid")
    add("--h-grid", dest="h_grid")
    add("--n-s-grid", dest="n_s_grid")
    add("--out", type=Path, help="CSV path (default stdout)")
    add("-v", "--verbose", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cellmeta", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)
    common = _common_flags()
    for name in COMMANDS:
        commands.add_parser(name, parents=[common])
    return parser


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _threshold_cells(run: RunConfig, cfg: NetworkConfig) -> tuple[list[tuple[str, str]], list, str]:
    """Threshold columns, their cells and the name of the coverage column."""
    if isinstance(run.metric, RateThreshold):
        return [("r_o", "bit/s"), ("theta_eff", "1")], [run.r_o, sir_threshold(cfg, run.metric)], "rate_coverage"
    return [("theta_db", "dB"), ("theta", "1")], [run.theta_db or 0.0, run.theta], "coverage"


def _note_clamp(report: CsvReport, cfg: NetworkConfig) -> None:
    clamped = clamp_warning(cfg.h)
    if clamped:
        report.note("warning", clamped)


def _coverage(run: RunConfig, cfg: NetworkConfig) -> CsvReport:
    columns, cells, name = _threshold_cells(run, cfg)
    report = CsvReport([*columns, (name, "1")])
    report.add_row([*cells, coverage_probability(cfg, run.theta, run.quadrature_spec())])
    _note_clamp(report, cfg)
    return report


def _rate(run: RunConfig, cfg: NetworkConfig) -> CsvReport:
    columns, cells, name = _threshold_cells(run, cfg)
    report = CsvReport([*columns, (name, "1")])
    report.add_row([*cells, rate_coverage_probability(cfg, run.r_o, run.quadrature_spec())])
    _note_clamp(report, cfg)
    return report


def _diagnostics_cell(record: dict[str, float]) -> str:
    return ";".join(f"{key}={format_cell(value)}" for key, value in record.items())


def _moments(run: RunConfig, cfg: NetworkConfig) -> CsvReport:
    seq = moment_sequence(cfg, run.metric, run.mu, kernel=kernel_for(cfg, run.metric, workers=run.workers))
    report = CsvReport([("order", ""), ("moment", "1")])
    report.add_rows([m, value] for m, value in enumerate(seq.values))
    if run.mu >= 2:
        report.note("variance", central_variance(seq[1], seq[2]))
    report.note("hausdorff_margin", hausdorff_margin(seq))
    _note_clamp(report, cfg)
    return report


def _meta(run: RunConfig, cfg: NetworkConfig) -> CsvReport:
    curve = meta_curve(
        cfg,
        run.metric,
        run.x_grid,
        run.method,
        run.mu,
        spec=run.quadrature_spec() or GIL_PELAEZ_SPEC,
        t_max=run.t_max,
        workers=run.workers,
    )
    report = CsvReport(META_COLUMNS)
    report.add_rows(
        [x, value, curve.method.value, curve.mu, _diagnostics_cell(record)]
        for x, value, record in zip(curve.x_grid, curve.ccdf, curve.diagnostics)
    )
    for warning in curve.warnings:
        report.note("warning", warning)
    return report


def _capacity(run: RunConfig, cfg: NetworkConfig) -> CsvReport:
    name = run.command
    report = CsvReport([("x", "1"), ("ccdf", "1"), (name, "1/m^2")])
    for x in run.x_grid:
        point = spatial_capacity(cfg, run.metric, x, run.mu)
        report.add_row([x, point.ccdf, point.value])
    return report


def _optimize(run: RunConfig, cfg: NetworkConfig) -> CsvReport:
    if run.target == "height":
        result = optimize_height(cfg, run.metric, tuple(run.h_bracket))
    elif run.target == "height-density":
        result = optimize_height_density(cfg, run.metric, tuple(run.h_bracket), run.lambda_grid)
    else:
        result = optimize_capacity(
            cfg,
            run.metric,
            run.x,
            lambda_grid=run.lambda_grid,
            h_grid=run.h_grid,
            n_s_values=[int(v) for v in run.n_s_grid],
            mu=run.mu,
            workers=run.workers,
        )
    value_unit = "1/m^2" if run.target == "capacity" else "1"
    report = CsvReport([*((n, AXIS_UNITS[n]) for n in result.arg_names), ("value", value_unit)])
    report.add_row([*result.argmax, result.value])
    report.note("objective", result.objective)
    report.note("evaluations", len(result.trace))
    for warning in result.warnings:
        report.note("warning", warning)
    return report


def _sweep(run: RunConfig, cfg: NetworkConfig) -> CsvReport:
    grid = run.grid
    if run.axis == "theta":
        grid = tuple(SirThreshold.from_db(v).theta for v in grid)
    rows = sweep(
        cfg,
        run.axis,
        grid,
        theta=run.theta,
        r_o=8e6 if run.r_o is None else run.r_o,
        x=run.x,
        mu=run.mu,
        workers=run.workers,
    )
    columns = [(run.axis, AXIS_UNITS[run.axis])] + [(c, COLUMN_UNITS.get(c, "1")) for c in SWEEP_COLUMNS]
    report = CsvReport(columns)
    report.add_rows([row[name] for name, _ in columns] for row in rows)
    return report


def _simulate(run: RunConfig, cfg: NetworkConfig) -> CsvReport:
    """Empirical counterparts of coverage, moments and meta, with standard-error columns."""
    options = dict(workers=run.workers, block_size=run.block_size)
    k_moments = run.mu if run.report == "moments" else 3
    summary = empirical_meta(cfg, run.metric, run.n, run.seed, run.x_grid, k_moments=k_moments, **options)
    if run.report == "coverage":
        fading = empirical_coverage_fading(cfg, run.metric, run.n, run.seed, **options)
        columns, cells, name = _threshold_cells(run, cfg)
        report = CsvReport([*columns, (name, "1"), ("std_error", "1"), (f"fading_{name}", "1"), ("fading_std_error", "1")])
        report.add_row([*cells, summary.mean, summary.std_error, fading.value, fading.std_error])
    elif run.report == "moments":
        report = CsvReport([("order", ""), ("moment", "1"), ("std_error", "1")])
        report.add_row([0, 1.0, 0.0])
        report.add_rows([m, value, error] for m, (value, error) in enumerate(zip(summary.moments, summary.moment_errors), start=1))
    else:
        report = CsvReport([*META_COLUMNS, ("std_error", "1")])
        diagnostics = "degenerate" if summary.degenerate else ""
        report.add_rows(
            [x, value, SIMULATION_METHOD, None, diagnostics, error]
            for x, value, error in zip(summary.x_grid, summary.ccdf, summary.ccdf_std_errors)
        )
        report.note("ks_critical", ks_critical(run.n))
    report.note("window_radius", summary.window_radius)
    report.note("degenerate", summary.degenerate)
    _note_clamp(report, cfg)
    return report


def _surface(run: RunConfig, cfg: NetworkConfig) -> CsvReport:
    rows = meta_surface(cfg, run.metric, run.heights, run.x_grid, run.mu, workers=run.workers)
    report = CsvReport([("h", "m"), ("x", "1"), ("ccdf", "1")])
    report.add_rows([row["h"], row["x"], row["ccdf"]] for row in rows)
    return report


HANDLERS = {
    "coverage": _coverage,
    "rate": _rate,
    "moments": _moments,
    "meta": _meta,
    "scc": _capacity,
    "src": _capacity,
    "optimize": _optimize,
    "sweep": _sweep,
    "simulate": _simulate,
    "surface": _surface,
}


def run(run_cfg: RunConfig) -> CsvReport:
    """Dispatch one subcommand and attach the metadata needed to rerun it."""
    cfg = run_cfg.network()
    logger.info("%s on %s (%s)", run_cfg.command, cfg.digest(), run_cfg.metric.label())
    report = HANDLERS[run_cfg.command](run_cfg, cfg)
    report.note("digest", cfg.digest())
    report.note("version", TOOL_VERSION)
    report.note("seed", run_cfg.seed)
    report.note("command", run_cfg.command)
    for key, value in run_cfg.as_pairs():
        report.note(key, value)
    return report


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"cellmeta: error: {exc}", file=sys.stderr)
        return 1

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    try:
        run_cfg = parse_config(args.command, flags, args.config)
        run(run_cfg).write(run_cfg.out)
    except ValueError as exc:  # ConfigError and pydantic ValidationError included
        logger.error("invalid input: %s", exc)
        return 1
    except NumericalError as exc:
        logger.error("numerical failure: %s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
