"""Coverage and rate coverage of the typical downlink user.

The interfering field is the thinned PPP on the annulus r_1 <= r <= R_out, with
R_out from `interference_radius`. Radial integrals run in log 3-D distance:
inner over tau = ln d (r dr = d dd, so the integrand picks up d^2), outer over
q = ln d_1 with the nearest-BS density folded into the weight.
"""

import logging
import math

import numpy as np
from scipy.special import expit

from src.coverage.models import NetworkConfig, RateThreshold, SirThreshold
from src.numerics.quadrature import QuadratureSpec, integrate_interval
from src.propagation.models import Environment, LinkType
from src.propagation.pathloss import DEG_PER_RAD, log_gain_at_distance, los_probability, los_probability_at_angle, path_gain
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

MAX_RATE_EXPONENT = 1000.0
OUTER_CUTOFF = 1e-12  # outer integral stops where exp(-pi lambda r_1^2) drops below this
D_FLOOR_FACTOR = 1e-4  # lower 3-D distance for h = 0, in units of 1/sqrt(pi lambda)


def rate_to_sir_threshold(r_o: float, n_s: int, w: float) -> float:
    if not (r_o > 0 and n_s > 0 and w > 0):
        raise ConfigError(f"rate threshold needs r_o, n_s, w > 0 (got {r_o}, {n_s}, {w})")
    exponent = r_o * n_s / w
    if exponent > MAX_RATE_EXPONENT:
        raise ConfigError(f"r_o * n_s / w = {exponent:.4g} exceeds {MAX_RATE_EXPONENT:g}; non-physical configuration")
    return math.expm1(exponent * math.log(2.0))


def sir_threshold(cfg: NetworkConfig, metric: SirThreshold | RateThreshold) -> float:
    """Linear SIR threshold the metric imposes under cfg."""
    if isinstance(metric, RateThreshold):
        return rate_to_sir_threshold(metric.r_o, cfg.n_s, cfg.w)
    return metric.theta


def interference_radius(cfg: NetworkConfig) -> float:
    """Outer radius of the interfering field in meters.

    The larger of window_factor / sqrt(pi lambda) and the radius beyond which the
    NLoS mean interference is below tail_fraction of its value from the median
    serving distance on.
    """
    floor = cfg.window_factor / math.sqrt(math.pi * cfg.lambda_)
    excess = cfg.env.nlos.alpha - 2.0
    if excess <= 0:
        logger.warning("NLoS exponent %.3g <= 2: interference radius falls back to the floor", cfg.env.nlos.alpha)
        return floor
    r_med = math.sqrt(math.log(2.0) / (math.pi * cfg.lambda_))
    return max(floor, r_med * cfg.tail_fraction ** (-1.0 / excess))


def serving_range(cfg: NetworkConfig) -> tuple[float, float]:
    """3-D distance limits of the outer (serving-distance) integral."""
    r_max = math.sqrt(-math.log(OUTER_CUTOFF) / (math.pi * cfg.lambda_))
    d_lo = max(cfg.h, D_FLOOR_FACTOR / math.sqrt(math.pi * cfg.lambda_))
    return d_lo, math.hypot(cfg.h, r_max)


def outer_weight(d1, cfg: NetworkConfig):
    """Nearest-BS density per unit ln d_1: 2 pi lambda d_1^2 exp(-pi lambda r_1^2)."""
    d1 = np.asarray(d1, dtype=float)
    r1_sq = np.maximum(d1 * d1 - cfg.h * cfg.h, 0.0)
    return 2.0 * math.pi * cfg.lambda_ * d1 * d1 * np.exp(-math.pi * cfg.lambda_ * r1_sq)


def los_probability_3d(h: float, d, env: Environment):
    """LoS probability written in the 3-D distance d >= h."""
    ratio = np.clip(h / np.asarray(d, dtype=float), 0.0, 1.0)
    return los_probability_at_angle(DEG_PER_RAD * np.arcsin(ratio), env)


def log_gains(d, cfg: NetworkConfig) -> tuple[np.ndarray, np.ndarray]:
    return (
        log_gain_at_distance(d, cfg.env.los, cfg.f),
        log_gain_at_distance(d, cfg.env.nlos, cfg.f),
    )


def eta(s: float, r, h: float, env: Environment, f: float):
    """PGFL kernel: P_L / (1 + s G_L) + P_NL / (1 + s G_NL), in (0, 1]."""
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    if np.any(np.asarray(r) <= 0):
        raise ValueError("eta requires r > 0")
    p_los = los_probability(h, r, env)
    g_los = path_gain(h, r, LinkType.LOS, env, f)
    g_nlos = path_gain(h, r, LinkType.NLOS, env, f)
    return p_los / (1.0 + s * g_los) + (1.0 - p_los) / (1.0 + s * g_nlos)


def one_minus_eta(log_s, d, cfg: NetworkConfig):
    """1 - eta evaluated without cancellation, from ln s and the 3-D distance."""
    p_los = los_probability_3d(cfg.h, d, cfg.env)
    lg_los, lg_nlos = log_gains(d, cfg)
    return p_los * expit(log_s + lg_los) + (1.0 - p_los) * expit(log_s + lg_nlos)


def interference_exponent(log_s: float, d1: float, cfg: NetworkConfig, spec: QuadratureSpec | None = None) -> float:
    """2 pi lambda' * integral of (1 - eta) r dr over [r_1, R_out], in tau = ln d."""
    spec = spec or QuadratureSpec()
    if log_s == -math.inf:
        return 0.0
    d_out = math.hypot(cfg.h, interference_radius(cfg))
    if d1 >= d_out:
        return 0.0
    scale = 2.0 * math.pi * cfg.active_density
    inner = QuadratureSpec(
        rel_tol=spec.rel_tol * 1e-2,
        abs_tol=spec.abs_tol / scale,
        max_subdivisions=spec.max_subdivisions,
        tail_cutoff=spec.tail_cutoff,
    )

    def integrand(tau: np.ndarray) -> np.ndarray:
        d = np.exp(tau)
        return one_minus_eta(log_s, d, cfg) * d * d

    return scale * integrate_interval(integrand, math.log(d1), math.log(d_out), inner).value


def laplace_factor(r_1: float, s: float, cfg: NetworkConfig, spec: QuadratureSpec | None = None) -> float:
    """exp(-2 pi lambda n_a/n_s * integral_{r_1}^{R_out} (1 - eta(s, r)) r dr), in (0, 1]."""
    if not r_1 > 0:
        raise ValueError(f"r_1 must be > 0, got {r_1}")
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    if s == 0:
        return 1.0
    d1 = math.hypot(cfg.h, r_1)
    return math.exp(-interference_exponent(math.log(s), d1, cfg, spec))


def _serving_log_s(log_theta: float, d1: np.ndarray, cfg: NetworkConfig):
    """ln s for a LoS and an NLoS serving link: s = theta * L_link(h, r_1)."""
    lg_los, lg_nlos = log_gains(d1, cfg)
    return log_theta - lg_los, log_theta - lg_nlos


def coverage_probability(cfg: NetworkConfig, theta: float, spec: QuadratureSpec | None = None) -> float:
    """P[SIR > theta] with the serving-link LoS state as a mixture."""
    spec = spec or QuadratureSpec()
    if not theta > 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    log_theta = math.log(theta)

    def integrand(q: np.ndarray) -> np.ndarray:
        d1 = np.exp(q)
        p_los = los_probability_3d(cfg.h, d1, cfg.env)
        s_los, s_nlos = _serving_log_s(log_theta, d1, cfg)
        a = np.array([math.exp(-interference_exponent(s, d, cfg, spec)) for s, d in zip(s_los, d1)])
        b = np.array([math.exp(-interference_exponent(s, d, cfg, spec)) for s, d in zip(s_nlos, d1)])
        return (p_los * a + (1.0 - p_los) * b) * outer_weight(d1, cfg)

    d_lo, d_hi = serving_range(cfg)
    value = integrate_interval(integrand, math.log(d_lo), math.log(d_hi), spec).value
    logger.debug("coverage %s theta=%g -> %.9f", cfg.digest(), theta, value)
    return min(max(value, 0.0), 1.0)


def rate_coverage_probability(cfg: NetworkConfig, r_o: float, spec: QuadratureSpec | None = None) -> float:
    return coverage_probability(cfg, rate_to_sir_threshold(r_o, cfg.n_s, cfg.w), spec)


def metric_coverage(cfg: NetworkConfig, metric: SirThreshold | RateThreshold, spec: QuadratureSpec | None = None) -> float:
    return coverage_probability(cfg, sir_threshold(cfg, metric), spec)
