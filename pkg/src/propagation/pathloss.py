"""ABG large-scale path loss and elevation-angle LoS probability.

Distances in meters, carrier frequency in GHz. Everything here is a pure
function of its arguments and accepts scalars or numpy arrays.
"""

import logging
import math

import numpy as np

from src.propagation.models import AbgParams, Environment, LinkType

logger = logging.getLogger(__name__)

DEG_PER_RAD = 180.0 / math.pi
D_MIN = 1.0  # meters; the ABG fit is not valid below this 3-D distance
LN10_OVER_10 = math.log(10.0) / 10.0


def db_to_linear(x):
    return np.power(10.0, np.asarray(x, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def los_probability_at_angle(angle_deg, env: Environment):
    """LoS probability for an elevation angle given in degrees."""
    angle_deg = np.asarray(angle_deg, dtype=float)
    return 1.0 / (1.0 + env.a * np.exp(-env.b * (angle_deg - env.a)))


def los_probability(h, r, env: Environment):
    h = np.asarray(h, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(h < 0) or np.any(r < 0):
        raise ValueError("los_probability requires h >= 0 and r >= 0")
    if np.any((h == 0) & (r == 0)):
        raise ValueError("los_probability undefined at h = 0, r = 0")
    # arctan2 gives the pi/2 limit for r = 0, h > 0
    result = los_probability_at_angle(DEG_PER_RAD * np.arctan2(h, r), env)
    return float(result) if result.ndim == 0 else result


def nlos_probability(h, r, env: Environment):
    return 1.0 - los_probability(h, r, env)


def distance_3d(h, r):
    return np.hypot(np.asarray(h, dtype=float), np.asarray(r, dtype=float))


def pathloss_db_at_distance(d, params: AbgParams, f: float):
    """ABG path loss in dB for 3-D distance d, clamped silently at D_MIN."""
    d = np.maximum(np.asarray(d, dtype=float), D_MIN)
    return 10.0 * params.alpha * np.log10(d) + params.beta + 10.0 * params.gamma * math.log10(f)


def log_gain_at_distance(d, params: AbgParams, f: float):
    """Natural log of the linear path gain 10^(-PL/10)."""
    return -LN10_OVER_10 * pathloss_db_at_distance(d, params, f)


def clamp_warning(h: float) -> str | None:
    """Diagnostic for links whose 3-D distance can fall below D_MIN, which needs h < D_MIN."""
    if h < D_MIN:
        return f"BS height {h:g} m admits 3-D distances below {D_MIN:g} m; path loss clamped there"
    return None


def pathloss_db(h, r, link: LinkType, env: Environment, f: float):
    if not f > 0:
        raise ValueError(f"carrier frequency must be > 0 GHz, got {f}")
    d = distance_3d(h, r)
    if np.any(d < D_MIN):
        logger.warning("3-D distance below %.1f m clamped (min %.3g m)", D_MIN, float(np.min(d)))
    result = pathloss_db_at_distance(d, env.params(LinkType(link)), f)
    return float(result) if np.ndim(result) == 0 else result


def path_gain(h, r, link: LinkType, env: Environment, f: float):
    """Linear gain 1/L(h, r); strictly decreasing in r for fixed h."""
    result = db_to_linear(-np.asarray(pathloss_db(h, r, link, env, f)))
    return float(result) if np.ndim(result) == 0 else result


def crossover_distance(env: Environment, f: float) -> float | None:
    """3-D distance where the LoS and NLoS path-loss lines intersect.

    Below it the NLoS line predicts the larger gain. None when the lines are
    parallel or meet below D_MIN.
    """
    los, nlos = env.los, env.nlos
    slope = 10.0 * (los.alpha - nlos.alpha)
    if slope == 0:
        return None
    offset = nlos.beta - los.beta + 10.0 * (nlos.gamma - los.gamma) * math.log10(f)
    d0 = 10.0 ** (offset / slope)
    return d0 if d0 >= D_MIN else None
