"""One-axis sweeps and the height/reliability surface, as flat tables."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

from src.capacity.spatial import cached_moment_sequence, spatial_capacity
from src.coverage.models import Metric, NetworkConfig, RateThreshold, SirThreshold
from src.metadist.recovery import mnatsakanov_curve
from src.moments.moments import central_variance
from src.utils import config
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

SWEEP_AXES = ("lambda", "h", "n_s", "theta", "r_o", "x")
SWEEP_COLUMNS = (
    "coverage",
    "rate_coverage",
    "variance_theta",
    "variance_rate",
    "ccdf_theta",
    "ccdf_rate",
    "scc",
    "src",
)

Row = dict[str, float]


def _row(cfg: NetworkConfig, theta: float, r_o: float, x: float, mu: int) -> Row:
    sir, rate = SirThreshold(theta=theta), RateThreshold(r_o=r_o)
    seq_sir = cached_moment_sequence(cfg, sir, mu)
    seq_rate = cached_moment_sequence(cfg, rate, mu)
    scc_point = spatial_capacity(cfg, sir, x, mu)
    src_point = spatial_capacity(cfg, rate, x, mu)
    return {
        "coverage": seq_sir[1],
        "rate_coverage": seq_rate[1],
        "variance_theta": central_variance(seq_sir[1], seq_sir[2]),
        "variance_rate": central_variance(seq_rate[1], seq_rate[2]),
        "ccdf_theta": scc_point.ccdf,
        "ccdf_rate": src_point.ccdf,
        "scc": scc_point.value,
        "src": src_point.value,
    }


def sweep(
    cfg: NetworkConfig,
    axis: str,
    grid: Sequence[float],
    *,
    theta: float = 1.0,
    r_o: float = 8e6,
    x: float = 0.5,
    mu: int = config.MU,
    workers: int = 1,
) -> list[Row]:
    """One row per grid value of `axis` with every sweep column filled in.

    theta is linear. Changing n_s under full load moves n_a with it.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}")
    values = [float(v) for v in grid]
    if not values:
        raise ConfigError("sweep grid is empty")
    if mu < 2:
        raise ConfigError("sweep needs mu >= 2 for the variance columns")

    def point(value: float) -> Row:
        point_cfg, t, r, xx = cfg, theta, r_o, x
        if axis == "lambda":
            point_cfg = cfg.with_(lambda_=value)
        elif axis == "h":
            point_cfg = cfg.with_(h=value)
        elif axis == "n_s":
            point_cfg = cfg.with_(n_s=int(value))
        elif axis == "theta":
            t = value
        elif axis == "r_o":
            r = value
        else:
            xx = value
        return {axis: value, **_row(point_cfg, t, r, xx, mu)}

    logger.info("sweep over %s: %d points", axis, len(values))
    if workers > 1 and len(values) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(point, values))
    return [point(v) for v in values]


def meta_surface(
    cfg: NetworkConfig,
    metric: Metric,
    heights: Sequence[float],
    x_grid: Sequence[float],
    mu: int = config.MU,
    *,
    workers: int = 1,
) -> list[Row]:
    """CCDF over a (h, x) grid; one row per pair, heights outermost."""
    heights = [float(h) for h in heights]
    if not heights:
        raise ConfigError("meta_surface needs at least one height")

    def curve(h: float):
        point_cfg = cfg.with_(h=h)
        return mnatsakanov_curve(cached_moment_sequence(point_cfg, metric, mu), x_grid, point_cfg.digest())

    if workers > 1 and len(heights) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            curves = list(pool.map(curve, heights))
    else:
        curves = [curve(h) for h in heights]
    return [
        {"h": h, "x": x, "ccdf": value}
        for h, c in zip(heights, curves)
        for x, value in zip(c.x_grid, c.ccdf)
    ]
