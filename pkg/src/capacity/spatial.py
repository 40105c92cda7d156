"""Spatial coverage and rate capacity.

SCC and SRC count users per m^2 whose conditional success probability exceeds
a reliability x: n_a * lambda * F(x), with F from the Mnatsakanov
reconstruction of the moment sequence.
"""

import logging
from functools import lru_cache

from src.capacity.models import CapacityPoint
from src.coverage.models import Metric, NetworkConfig, RateThreshold, SirThreshold
from src.metadist.recovery import mnatsakanov_cdf
from src.moments.models import MomentSequence
from src.moments.moments import moment_sequence
from src.utils import config
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)


@lru_cache(maxsize=512)
def cached_moment_sequence(cfg: NetworkConfig, metric: Metric, mu: int) -> MomentSequence:
    """Moment sequence memoized on the frozen (cfg, metric, mu) triple."""
    return moment_sequence(cfg, metric, mu)


def spatial_capacity(cfg: NetworkConfig, metric: Metric, x: float, mu: int = config.MU) -> CapacityPoint:
    if not 0.0 < x < 1.0:
        raise ValueError(f"reliability x must be in (0, 1), got {x}")
    if mu > config.MU_CAP:
        raise ConfigError(f"mu={mu} exceeds {config.MU_CAP}")
    seq = cached_moment_sequence(cfg, metric, mu)
    ccdf = min(max(1.0 - mnatsakanov_cdf(seq, x), 0.0), 1.0)
    peak = cfg.n_a * cfg.lambda_
    logger.debug("capacity %s x=%g (%s): ccdf=%.6f", cfg.digest(), x, metric.label(), ccdf)
    return CapacityPoint(
        cfg_digest=cfg.digest(),
        x=x,
        metric=metric,
        value=peak * ccdf,
        ccdf=ccdf,
        peak=peak,
        mu=mu,
    )


def scc(cfg: NetworkConfig, x: float, theta: float, mu: int = config.MU) -> CapacityPoint:
    """Density of users whose SIR success probability exceeds x."""
    return spatial_capacity(cfg, SirThreshold(theta=theta), x, mu)


def src(cfg: NetworkConfig, x: float, r_o: float, mu: int = config.MU) -> CapacityPoint:
    """Density of users whose rate success probability exceeds x."""
    return spatial_capacity(cfg, RateThreshold(r_o=r_o), x, mu)
