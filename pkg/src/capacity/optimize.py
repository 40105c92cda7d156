"""Height, density and partition-count searches.

Coverage objectives use the first moment on the shared moment grid, which
matches coverage_probability to quadrature tolerance at a fraction of the cost.
"""

import logging
from typing import Sequence

import numpy as np

from src.capacity.models import HeightTradeoff, OptimumReport
from src.capacity.spatial import cached_moment_sequence, spatial_capacity
from src.coverage.models import Metric, NetworkConfig
from src.moments.moments import central_variance
from src.numerics.optimize import GridAxis, OptimizerSpec, golden_section_max, grid_refine_max
from src.utils import config
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

HEIGHT_LIMITS = (1.0, 200.0)
HEIGHT_TOL = 0.1  # meters
N_S_RANGE = (1, 30)


def _check_height_bracket(bracket: tuple[float, float]) -> tuple[float, float]:
    lo, hi = float(bracket[0]), float(bracket[1])
    if not HEIGHT_LIMITS[0] <= lo < hi <= HEIGHT_LIMITS[1]:
        raise ConfigError(f"height bracket must satisfy {HEIGHT_LIMITS[0]:g} <= lo < hi <= {HEIGHT_LIMITS[1]:g}, got {bracket}")
    return lo, hi


def mean_success(cfg: NetworkConfig, metric: Metric) -> float:
    """P_theta or P_{R_o}: the first moment of the conditional success probability."""
    return cached_moment_sequence(cfg, metric, 1)[1]


def optimize_height(
    cfg: NetworkConfig,
    metric: Metric,
    bracket: tuple[float, float] = (1.0, 100.0),
    *,
    x_tol: float = HEIGHT_TOL,
    max_evals: int = 100,
) -> OptimumReport:
    """h* maximizing coverage (or rate coverage) by grid scan plus golden section."""
    lo, hi = _check_height_bracket(bracket)
    spec = OptimizerSpec(bracket=(lo, hi), x_tol=x_tol, max_evals=max_evals)
    result = golden_section_max(lambda h: mean_success(cfg.with_(h=h), metric), spec)
    for message in result.warnings:
        logger.warning("optimize_height: %s", message)
    logger.info("optimize_height %s: h*=%.2f m, P=%.6f (%d evaluations)", metric.label(), result.x, result.value, result.evaluations)
    return OptimumReport(
        objective=f"coverage[{metric.label()}]",
        arg_names=("h",),
        argmax=(result.x,),
        value=result.value,
        ranges=((lo, hi),),
        trace=tuple(((x,), y) for x, y in result.trace),
        warnings=tuple(result.warnings),
    )


def height_profile(
    cfg: NetworkConfig,
    metric: Metric,
    lambdas: Sequence[float],
    bracket: tuple[float, float] = (1.0, 100.0),
    *,
    x_tol: float = HEIGHT_TOL,
) -> list[OptimumReport]:
    """h*(lambda) for each density."""
    return [optimize_height(cfg.with_(lambda_=lam), metric, bracket, x_tol=x_tol) for lam in lambdas]


def optimize_height_density(
    cfg: NetworkConfig,
    metric: Metric,
    h_bracket: tuple[float, float],
    lambda_grid: Sequence[float],
    *,
    x_tol: float = HEIGHT_TOL,
) -> OptimumReport:
    """Joint argmax over (lambda, h): golden section in h for every lambda on the grid."""
    lambdas = sorted(set(float(v) for v in lambda_grid))
    if not lambdas:
        raise ConfigError("lambda_grid is empty")
    profile = height_profile(cfg, metric, lambdas, h_bracket, x_tol=x_tol)
    best = 0
    for k in range(1, len(profile)):
        if profile[k].value > profile[best].value:
            best = k
    trace = tuple(((lam, args[0]), value) for lam, report in zip(lambdas, profile) for args, value in report.trace)
    warnings = [f"lambda={lam:g}: {w}" for lam, report in zip(lambdas, profile) for w in report.warnings]
    if len(lambdas) > 1 and best in (0, len(lambdas) - 1):
        warnings.append(f"boundary: lambda optimum {lambdas[best]:g} at grid edge")
    return OptimumReport(
        objective=profile[best].objective,
        arg_names=("lambda", "h"),
        argmax=(lambdas[best], profile[best].argmax[0]),
        value=profile[best].value,
        ranges=((lambdas[0], lambdas[-1]), profile[best].ranges[0]),
        trace=trace,
        warnings=tuple(warnings),
    )


def optimize_capacity(
    cfg: NetworkConfig,
    metric: Metric,
    x: float,
    *,
    lambda_grid: Sequence[float],
    h_grid: Sequence[float],
    n_s_values: Sequence[int] = tuple(range(N_S_RANGE[0], N_S_RANGE[1] + 1)),
    mu: int = config.MU,
    refine: bool = True,
    workers: int = 1,
) -> OptimumReport:
    """Full-load argmax of SCC/SRC over (lambda, h, n_s).

    n_s is swept exhaustively with n_a = n_s; lambda and h are grid-scanned and
    then refined by golden section unless `refine` is off.
    """
    if not lambda_grid or not h_grid or not n_s_values:
        raise ConfigError("optimize_capacity needs nonempty lambda, h and n_s ranges")
    if min(n_s_values) < 1:
        raise ConfigError(f"n_s values must be >= 1, got {min(n_s_values)}")
    for h in h_grid:
        if not HEIGHT_LIMITS[0] <= h <= HEIGHT_LIMITS[1]:
            raise ConfigError(f"h={h} outside [{HEIGHT_LIMITS[0]:g}, {HEIGHT_LIMITS[1]:g}]")
    base = cfg.with_(full_load=False)

    def objective(lam: float, h: float, n_s: float) -> float:
        n = int(n_s)
        point_cfg = base.with_(lambda_=lam, h=h, n_a=n, n_s=n, full_load=True)
        return spatial_capacity(point_cfg, metric, x, mu).value

    axes = [
        GridAxis("lambda", tuple(float(v) for v in lambda_grid), refine=refine),
        GridAxis("h", tuple(float(v) for v in h_grid), refine=refine, x_tol=HEIGHT_TOL),
        GridAxis("n_s", tuple(float(int(v)) for v in n_s_values), integer=True),
    ]
    result = grid_refine_max(objective, axes, workers=workers)
    kind = "src" if metric.kind == "rate" else "scc"
    return OptimumReport(
        objective=f"{kind}[{metric.label()}, x={x!r}]",
        arg_names=("lambda", "h", "n_s"),
        argmax=tuple(float(v) for v in result.args),
        value=result.value,
        ranges=tuple((min(a.values), max(a.values)) for a in axes),
        trace=tuple((tuple(float(v) for v in args), value) for args, value in result.trace),
        warnings=tuple(result.warnings),
    )


def height_tradeoff(cfg: NetworkConfig, metric: Metric, h_star: float, delta_h: float = 5.0) -> HeightTradeoff:
    """Mean and variance at h* and h* + delta_h."""
    values = []
    for h in (h_star, h_star + delta_h):
        seq = cached_moment_sequence(cfg.with_(h=h), metric, 2)
        values.append((seq[1], central_variance(seq[1], seq[2])))
    (m_star, v_star), (m_shift, v_shift) = values
    return HeightTradeoff(
        h_star=h_star,
        h_shifted=h_star + delta_h,
        mean_star=m_star,
        mean_shifted=m_shift,
        variance_star=v_star,
        variance_shifted=v_shift,
    )


def n_s_profile(cfg: NetworkConfig, metric: Metric, x: float, n_s_values: Sequence[int], mu: int = config.MU) -> np.ndarray:
    """Full-load capacity for each n_s (SCC/SRC against partition count)."""
    base = cfg.with_(full_load=False)
    return np.array([
        spatial_capacity(base.with_(n_a=int(n), n_s=int(n), full_load=True), metric, x, mu).value
        for n in n_s_values
    ])
