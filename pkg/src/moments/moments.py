import logging
from fractions import Fraction

import numpy as np

from src.coverage.models import Metric, NetworkConfig
from src.coverage.probability import sir_threshold
from src.moments.kernel import MomentKernel
from src.moments.models import Imaginary, MomentOrder, MomentSequence, Real
from src.propagation.models import Environment, LinkType
from src.propagation.pathloss import los_probability, path_gain
from src.utils import config
from src.utils.errors import ConsistencyError

logger = logging.getLogger(__name__)

VARIANCE_SLACK = 1e-9


def eta_m(s: float, r, order: MomentOrder, h: float, env: Environment, f: float):
    """P_L (1 + s G_L)^-m + P_NL (1 + s G_NL)^-m; order jt gives exp(-jt ln(1 + sG))."""
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    if np.any(np.asarray(r) <= 0):
        raise ValueError("eta_m requires r > 0")
    p_los = los_probability(h, r, env)
    if isinstance(order, Real) and order.m == 0:
        return np.ones_like(np.asarray(p_los, dtype=float))[()] * 1.0
    if isinstance(order, Imaginary) and order.t == 0:
        return np.ones_like(np.asarray(p_los, dtype=complex))[()] * (1.0 + 0j)
    l_los = np.log1p(s * np.asarray(path_gain(h, r, LinkType.LOS, env, f)))
    l_nlos = np.log1p(s * np.asarray(path_gain(h, r, LinkType.NLOS, env, f)))
    if isinstance(order, Real):
        return p_los * np.exp(-order.m * l_los) + (1.0 - p_los) * np.exp(-order.m * l_nlos)
    return p_los * np.exp(-1j * order.t * l_los) + (1.0 - p_los) * np.exp(-1j * order.t * l_nlos)


def kernel_for(cfg: NetworkConfig, metric: Metric, workers: int = config.WORKERS) -> MomentKernel:
    return MomentKernel(cfg, sir_threshold(cfg, metric), workers=workers)


def moment(cfg: NetworkConfig, metric: Metric, order: MomentOrder, kernel: MomentKernel | None = None):
    """M_m (real order, in [0, 1]) or M_jt (imaginary order, |M_jt| <= 1)."""
    kernel = kernel or kernel_for(cfg, metric)
    if isinstance(order, Real):
        return kernel.real_moment(order.m)
    return kernel.complex_moment(order.t)


def moment_sequence(
    cfg: NetworkConfig,
    metric: Metric,
    mu: int = config.MU,
    kernel: MomentKernel | None = None,
) -> MomentSequence:
    if mu < 1:
        raise ValueError(f"mu must be >= 1, got {mu}")
    kernel = kernel or kernel_for(cfg, metric)
    logger.info("computing %d moments for %s (%s)", mu, cfg.digest(), metric.label())
    values = kernel.real_moments(range(mu + 1))
    # float roundoff must not break monotonicity
    for j in range(1, len(values)):
        values[j] = min(values[j], values[j - 1])
    return MomentSequence(metric=metric, cfg_digest=cfg.digest(), values=tuple(values), mu=mu)


def complex_moments(cfg: NetworkConfig, metric: Metric, t_values, band: float | None = None) -> np.ndarray:
    """Batch M_jt on one grid resolution."""
    return kernel_for(cfg, metric).complex_moments(t_values, band)


def central_variance(m1: float, m2: float) -> float:
    value = m2 - m1 * m1
    if value < -VARIANCE_SLACK:
        raise ConsistencyError(f"negative variance {value:.3g} from M_1={m1!r}, M_2={m2!r}")
    return max(value, 0.0)


def variance(cfg: NetworkConfig, metric: Metric, kernel: MomentKernel | None = None) -> float:
    """Second cumulant M_2 - M_1^2."""
    kernel = kernel or kernel_for(cfg, metric)
    m1, m2 = kernel.real_moments([1, 2])
    return central_variance(m1, m2)


def hausdorff_margin(seq: MomentSequence) -> float:
    """min over k + m <= mu of (-1)^k (Delta^k M)_m, exact on the stored floats."""
    diffs = [Fraction(v) for v in seq.values]
    margin = min(diffs)
    while len(diffs) > 1:
        diffs = [a - b for a, b in zip(diffs[:-1], diffs[1:])]
        margin = min(margin, min(diffs))
    return float(margin)
