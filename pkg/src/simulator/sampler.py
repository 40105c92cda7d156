"""PPP sampling and closed-form conditional success probabilities.

Each block of realizations draws from its own Philox stream keyed by
(seed, block index), so a run is reproducible whatever the worker count.
LoS states and channel occupancy are static per realization; Rayleigh fading
is averaged out in closed form.
"""

import logging
import math

import numpy as np

from src.coverage.models import Metric, NetworkConfig
from src.coverage.probability import interference_radius, log_gains, sir_threshold
from src.propagation.models import LinkType
from src.propagation.pathloss import los_probability
from src.simulator.models import Block, Realization
from src.utils import config

logger = logging.getLogger(__name__)

FADING_STREAM = 1


def block_rng(seed: int, block_index: int, stream: int = 0) -> np.random.Generator:
    key = (block_index,) if stream == 0 else (block_index, stream)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def sample_block(
    cfg: NetworkConfig,
    block_index: int,
    seed: int,
    size: int = config.BLOCK_SIZE,
    window_radius: float | None = None,
) -> Block:
    """Draw `size` realizations on the disc of radius window_radius (default interference_radius)."""
    if size < 1:
        raise ValueError(f"block size must be >= 1, got {size}")
    rng = block_rng(seed, block_index)
    radius = interference_radius(cfg) if window_radius is None else window_radius

    # nearest BS: P[R_1 > r] = exp(-pi lambda r^2)
    u = 1.0 - rng.random(size)
    r_1 = np.sqrt(-np.log(u) / (math.pi * cfg.lambda_))
    serving_los = rng.random(size) < los_probability(cfg.h, r_1, cfg.env)

    area = math.pi * np.maximum(radius * radius - r_1 * r_1, 0.0)
    counts = rng.poisson(cfg.active_density * area)
    offsets = np.concatenate([[0], np.cumsum(counts)])

    inner_sq = np.repeat(r_1 * r_1, counts)
    r = np.sqrt(inner_sq + rng.random(inner_sq.size) * (radius * radius - inner_sq))
    if r.size:
        # rounding must not pull a point inside the exclusion disc
        r = np.maximum(r, np.repeat(r_1, counts))
        los = rng.random(r.size) < los_probability(cfg.h, r, cfg.env)
    else:
        los = np.zeros(0, dtype=bool)
    logger.debug("block %d: %d realizations, %d interferers", block_index, size, r.size)
    return Block(r_1=r_1, serving_los=serving_los, offsets=offsets, r=r, los=los)


def sample_realization(cfg: NetworkConfig, seed: int, index: int = 0) -> Realization:
    """A single draw: realization 0 of a one-element block."""
    return sample_block(cfg, index, seed, size=1).realization(0)


def _row_sums(values: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    counts = np.diff(offsets)
    sums = np.zeros(counts.size)
    nonempty = counts > 0
    if values.size:
        sums[nonempty] = np.add.reduceat(values, offsets[:-1][nonempty])
    return sums


def _link_log_gains(distance_2d: np.ndarray, los: np.ndarray, cfg: NetworkConfig) -> np.ndarray:
    lg_los, lg_nlos = log_gains(np.hypot(cfg.h, distance_2d), cfg)
    return np.where(los, lg_los, lg_nlos)


def block_conditional_success(block: Block, cfg: NetworkConfig, theta: float) -> np.ndarray:
    """prod_i 1 / (1 + theta G_i / G_serv) per realization, in log form."""
    log_s = math.log(theta) - _link_log_gains(block.r_1, block.serving_los, cfg)
    per_interferer = np.logaddexp(0.0, np.repeat(log_s, block.counts) + _link_log_gains(block.r, block.los, cfg))
    return np.exp(-_row_sums(per_interferer, block.offsets))


def block_fading_coverage(block: Block, cfg: NetworkConfig, theta: float, rng: np.random.Generator) -> np.ndarray:
    """SIR > theta per realization with explicit Exp(1) power gains."""
    g_serv = rng.exponential(size=block.size) * np.exp(_link_log_gains(block.r_1, block.serving_los, cfg))
    g_int = rng.exponential(size=block.r.size) * np.exp(_link_log_gains(block.r, block.los, cfg))
    interference = _row_sums(g_int, block.offsets)
    return g_serv > theta * interference


def conditional_success(realization: Realization, cfg: NetworkConfig, metric: Metric) -> float:
    block = Block(
        r_1=np.array([realization.r_1]),
        serving_los=np.array([realization.serving_los is LinkType.LOS]),
        offsets=np.array([0, realization.interferer_r.size]),
        r=np.asarray(realization.interferer_r, dtype=float),
        los=np.asarray(realization.interferer_los, dtype=bool),
    )
    return float(block_conditional_success(block, cfg, sir_threshold(cfg, metric))[0])
