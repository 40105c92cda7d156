import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np
from scipy.stats import kstwo

from src.coverage.models import Metric, NetworkConfig
from src.coverage.probability import interference_radius, sir_threshold
from src.metadist.models import MetaCurve
from src.simulator.models import CoverageEstimate, SimulationSummary
from src.simulator.sampler import FADING_STREAM, block_conditional_success, block_fading_coverage, block_rng, sample_block
from src.utils import config
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

MIN_REALIZATIONS = 1000
DEFAULT_X_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))


def _check_n(n: int) -> None:
    if n < MIN_REALIZATIONS:
        raise ConfigError(f"need at least {MIN_REALIZATIONS} realizations, got {n}")


def _run_blocks(n: int, block_size: int, job: Callable[[int, int], np.ndarray], workers: int) -> np.ndarray:
    """Evaluate job(block_index, size) over the fixed block decomposition of n and concatenate in order."""
    sizes = [min(block_size, n - start) for start in range(0, n, block_size)]
    logger.info("simulating %d realizations in %d blocks", n, len(sizes))
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(sizes)), sizes))
    else:
        parts = [job(k, size) for k, size in enumerate(sizes)]
    return np.concatenate(parts)


def conditional_success_samples(
    cfg: NetworkConfig,
    metric: Metric,
    n: int,
    seed: int,
    *,
    workers: int = config.WORKERS,
    block_size: int = config.BLOCK_SIZE,
    window_radius: float | None = None,
) -> np.ndarray:
    theta = sir_threshold(cfg, metric)

    def job(k: int, size: int) -> np.ndarray:
        block = sample_block(cfg, k, seed, size, window_radius)
        return block_conditional_success(block, cfg, theta)

    return _run_blocks(n, block_size, job, workers)


def empirical_moments(values: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Sample means of values**m for m = 1..k and their standard errors."""
    values = np.asarray(values, dtype=float)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    powers = values[None, :] ** np.arange(1, k + 1)[:, None]
    means = powers.mean(axis=1)
    if values.size < 2:
        return means, np.full(k, math.inf)
    return means, powers.std(axis=1, ddof=1) / math.sqrt(values.size)


def empirical_ccdf(values: np.ndarray, x_grid: Sequence[float]) -> np.ndarray:
    """Fraction of values strictly above each x."""
    ordered = np.sort(np.asarray(values, dtype=float))
    above = ordered.size - np.searchsorted(ordered, np.asarray(x_grid, dtype=float), side="right")
    return above / ordered.size


def empirical_meta(
    cfg: NetworkConfig,
    metric: Metric,
    n: int,
    seed: int,
    x_grid: Sequence[float] = DEFAULT_X_GRID,
    *,
    k_moments: int = 3,
    workers: int = config.WORKERS,
    block_size: int = config.BLOCK_SIZE,
    window_scale: float = 1.0,
) -> SimulationSummary:
    """Monte Carlo meta-distribution: coverage, moments and CCDF of P_s.

    `window_scale` stretches the sampling disc beyond the interference radius
    for truncation checks; the radius itself comes from cfg.
    """
    _check_n(n)
    if not window_scale >= 1.0:
        raise ConfigError(f"window_scale must be >= 1, got {window_scale}")
    radius = interference_radius(cfg) * window_scale
    values = conditional_success_samples(
        cfg, metric, n, seed, workers=workers, block_size=block_size, window_radius=radius
    )
    moments, errors = empirical_moments(values, k_moments)
    degenerate = bool(values.min() == values.max())
    if degenerate:
        logger.warning("all %d realizations gave P_s = %.6g; standard errors are zero", n, values[0])
    ccdf = empirical_ccdf(values, x_grid)
    summary = SimulationSummary(
        n=n,
        seed=seed,
        metric=metric,
        cfg_digest=cfg.digest(),
        window_radius=radius,
        block_size=block_size,
        mean=float(moments[0]),
        std_error=float(errors[0]),
        degenerate=degenerate,
        moments=tuple(float(m) for m in moments),
        moment_errors=tuple(float(e) for e in errors),
        x_grid=tuple(float(x) for x in x_grid),
        ccdf=tuple(float(c) for c in ccdf),
    )
    logger.info("empirical mean %.5f +/- %.5f over %d realizations", summary.mean, summary.std_error, n)
    return summary


def empirical_coverage_fading(
    cfg: NetworkConfig,
    metric: Metric,
    n: int,
    seed: int,
    *,
    workers: int = config.WORKERS,
    block_size: int = config.BLOCK_SIZE,
) -> CoverageEstimate:
    """Coverage with sampled Rayleigh gains on the same geometry as empirical_meta."""
    _check_n(n)
    theta = sir_threshold(cfg, metric)

    def job(k: int, size: int) -> np.ndarray:
        block = sample_block(cfg, k, seed, size)
        return block_fading_coverage(block, cfg, theta, block_rng(seed, k, FADING_STREAM))

    covered = _run_blocks(n, block_size, job, workers)
    p = float(covered.mean())
    return CoverageEstimate(n=n, seed=seed, value=p, std_error=math.sqrt(max(p * (1.0 - p), 0.0) / n))


def ks_distance(curve: MetaCurve, summary: SimulationSummary) -> float:
    """Largest CCDF gap between an analytical curve and the simulation on their shared grid."""
    if tuple(curve.x_grid) != tuple(summary.x_grid):
        raise ValueError("analytical and empirical curves use different grids")
    return float(np.max(np.abs(np.subtract(curve.ccdf, summary.ccdf))))


def ks_critical(n: int, alpha: float = 0.05) -> float:
    """Kolmogorov-Smirnov critical distance at level alpha for n samples."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    return float(kstwo.ppf(1.0 - alpha, n))
