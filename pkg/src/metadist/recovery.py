"""Meta-distribution recovery from moments.

Two independent routes to F(x) = P[P_s > x]:

- Gil-Pelaez inversion of the imaginary moments M_jt (the exact route, slow).
- Mnatsakanov reconstruction from the real moments M_0..M_mu (the fast route).

The Mnatsakanov double sum evaluates E[P(Binomial(mu, P_s) <= floor(mu x))],
which approximates the CDF of P_s, so the CCDF is 1 minus the sum.
"""

import logging
import math
import threading
from fractions import Fraction
from typing import Callable

import numpy as np

from src.coverage.models import Metric, NetworkConfig
from src.metadist.models import MetaCurve, Method
from src.moments.kernel import MomentKernel, band_for
from src.moments.models import MomentSequence
from src.moments.moments import kernel_for, moment_sequence
from src.numerics.quadrature import GilPelaezResult, QuadratureSpec, gil_pelaez_integral
from src.propagation.pathloss import clamp_warning
from src.utils import config
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

# M(t, t_panel_end) -> M_jt; t_panel_end lets the source pick one resolution per panel
MomentSource = Callable[[np.ndarray, float], np.ndarray]

GIL_PELAEZ_SPEC = QuadratureSpec(rel_tol=1e-5, abs_tol=1e-8)
MONOTONE_SLACK = 1e-6


def _check_reliability(x: float) -> None:
    if not 0.0 < x < 1.0:
        raise ValueError(f"reliability x must be in (0, 1), got {x}")


def _check_grid(x_grid) -> tuple[float, ...]:
    grid = tuple(float(x) for x in x_grid)
    if not grid:
        raise ValueError("x_grid is empty")
    for x in grid:
        _check_reliability(x)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("x_grid must be strictly increasing")
    return grid


def _clamp(value: float) -> float:
    return min(max(value, 0.0), 1.0)


class ImaginaryMoments:
    """Memoized M_jt on band-pinned grids, shared across reliabilities."""

    def __init__(self, kernel: MomentKernel):
        self.kernel = kernel
        self._cache: dict[tuple[float, float], complex] = {}
        self._lock = threading.Lock()

    def __call__(self, t: np.ndarray, t_panel_end: float) -> np.ndarray:
        band = band_for(t_panel_end)
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape, dtype=complex)
        for i, ti in enumerate(t.tolist()):
            key = (ti, band)
            with self._lock:
                value = self._cache.get(key)
            if value is None:
                value = self.kernel.complex_moment(ti, band)
                with self._lock:
                    self._cache[key] = value
            out[i] = value
        return out

    def modulus(self, t: float) -> float:
        return float(abs(self(np.array([t]), t)[0]))

    @property
    def evaluations(self) -> int:
        return len(self._cache)


def _panel_width(x_grid) -> float:
    # common panel edges let the memo serve every x
    largest = max(abs(math.log(x)) for x in x_grid)
    return min(2.0 * math.pi / largest, 2.0 * math.pi)


def gil_pelaez_ccdf(
    moments: MomentSource,
    x: float,
    *,
    modulus: Callable[[float], float] | None = None,
    spec: QuadratureSpec = GIL_PELAEZ_SPEC,
    t_max: float = config.T_MAX,
    t_cap: float | None = None,
    panel_width: float | None = None,
    workers: int = 1,
) -> tuple[float, GilPelaezResult]:
    """1/2 + (1/pi) * integral of Im[exp(-jt ln x) M_jt] / t over t > 0, clamped."""
    _check_reliability(x)
    log_x = math.log(x)

    def panel_integrand(lo: float, hi: float):
        def g(t: np.ndarray) -> np.ndarray:
            m = moments(t, hi)
            return np.imag(np.exp(-1j * t * log_x) * m) / t

        return g

    result = gil_pelaez_integral(
        None,
        spec,
        t_max,
        log_x=log_x,
        modulus=modulus,
        panel_width=panel_width,
        t_cap=t_cap,
        workers=workers,
        panel_integrand=panel_integrand,
    )
    return _clamp(0.5 + result.value / math.pi), result


def meta_ccdf_gil_pelaez(
    cfg: NetworkConfig,
    metric: Metric,
    x: float,
    *,
    spec: QuadratureSpec = GIL_PELAEZ_SPEC,
    t_max: float = config.T_MAX,
    workers: int = config.WORKERS,
) -> float:
    source = ImaginaryMoments(kernel_for(cfg, metric, workers=1))
    value, _ = gil_pelaez_ccdf(source, x, modulus=source.modulus, spec=spec, t_max=t_max, workers=workers)
    return value


def mnatsakanov_weights(mu: int, x: float) -> list[int]:
    """Integer weights w_j with S(x) = sum_j w_j M_j."""
    if mu < 1:
        raise ValueError(f"mu must be >= 1, got {mu}")
    if mu > config.MU_CAP:
        raise ConfigError(f"mu={mu} exceeds {config.MU_CAP}: alternating binomial sum is unsafe in floating point")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    top = math.floor(mu * x)
    return [
        sum(math.comb(mu, j) * math.comb(j, k) * (-1) ** (j - k) for k in range(min(top, j) + 1))
        for j in range(mu + 1)
    ]


def mnatsakanov_terms(moments: MomentSequence, x: float) -> tuple[float, float]:
    """(exact, float) evaluations of the double sum.

    The exact one runs in rational arithmetic on the stored moments and is
    rounded once; the float one is the pairwise-summed alternating series.
    """
    mu = moments.mu
    weights = mnatsakanov_weights(mu, x)
    exact = sum((Fraction(m) * w for m, w in zip(moments.values, weights)), Fraction(0))
    top = math.floor(mu * x)
    terms = np.array([
        float(math.comb(mu, j) * math.comb(j, k) * (-1) ** (j - k)) * moments.values[j]
        for k in range(top + 1)
        for j in range(k, mu + 1)
    ])
    # np.sum reduces contiguous float arrays pairwise
    return float(exact), float(np.sum(terms))


def mnatsakanov_cdf(moments: MomentSequence, x: float) -> float:
    exact, _ = mnatsakanov_terms(moments, x)
    return exact


def meta_ccdf_mnatsakanov(cfg: NetworkConfig, metric: Metric, x: float, mu: int = config.MU) -> float:
    _check_reliability(x)
    if mu > config.MU_CAP:
        raise ConfigError(f"mu={mu} exceeds {config.MU_CAP}")
    return _clamp(1.0 - mnatsakanov_cdf(moment_sequence(cfg, metric, mu), x))


def _monotone_warnings(ccdf: list[float], slack: float) -> list[str]:
    rises = [i for i in range(1, len(ccdf)) if ccdf[i] > ccdf[i - 1] + slack]
    if not rises:
        return []
    message = f"ccdf increases at {len(rises)} grid point(s) beyond slack {slack:g}"
    logger.warning(message)
    return [message]


def mnatsakanov_curve(moments: MomentSequence, x_grid, cfg_digest: str = "") -> MetaCurve:
    grid = _check_grid(x_grid)
    ccdf, diagnostics = [], []
    for x in grid:
        exact, floating = mnatsakanov_terms(moments, x)
        ccdf.append(_clamp(1.0 - exact))
        diagnostics.append({"roundoff": abs(floating - exact)})
    return MetaCurve(
        x_grid=grid,
        ccdf=tuple(ccdf),
        method=Method.MNATSAKANOV,
        mu=moments.mu,
        metric=moments.metric,
        cfg_digest=cfg_digest or moments.cfg_digest,
        diagnostics=tuple(diagnostics),
        warnings=tuple(_monotone_warnings(ccdf, MONOTONE_SLACK)),
    )


def meta_curve(
    cfg: NetworkConfig,
    metric: Metric,
    x_grid,
    method: Method | str = Method.MNATSAKANOV,
    mu: int = config.MU,
    *,
    spec: QuadratureSpec = GIL_PELAEZ_SPEC,
    t_max: float = config.T_MAX,
    t_cap: float | None = None,
    workers: int = config.WORKERS,
    kernel: MomentKernel | None = None,
) -> MetaCurve:
    """Tabulate the meta-distribution on x_grid.

    Mnatsakanov computes the moment sequence once for the whole grid. Gil-Pelaez
    inverts per x but shares one memo of M_jt across the grid.
    """
    grid = _check_grid(x_grid)
    method = Method(method)
    kernel = kernel or kernel_for(cfg, metric, workers=workers)
    logger.info("meta curve %s for %s (%s), %d points", method.value, cfg.digest(), metric.label(), len(grid))

    clamped = clamp_warning(cfg.h)
    if clamped:
        logger.warning(clamped)

    if method is Method.MNATSAKANOV:
        curve = mnatsakanov_curve(moment_sequence(cfg, metric, mu, kernel=kernel), grid, cfg.digest())
        if clamped:
            curve = curve.model_copy(update={"warnings": (*curve.warnings, clamped)})
        return curve

    source = ImaginaryMoments(kernel)
    width = _panel_width(grid)
    ccdf, diagnostics = [], []
    warnings = [clamped] if clamped else []
    for x in grid:
        value, result = gil_pelaez_ccdf(
            source,
            x,
            modulus=source.modulus,
            spec=spec,
            t_max=t_max,
            t_cap=t_cap,
            panel_width=width,
            workers=workers,
        )
        ccdf.append(value)
        diagnostics.append({
            "t_end": result.t_end,
            "modulus": result.modulus_at_end,
            "tail_bound": result.truncation_bound,
        })
        if result.truncation_bound > 1e-3:
            warnings.append(f"x={x!r}: truncated at t={result.t_end:g} with tail bound {result.truncation_bound:.3g}")
    logger.debug("Gil-Pelaez used %d distinct imaginary moments", source.evaluations)
    # truncation error of a few 1e-4 can break strict monotonicity
    warnings.extend(_monotone_warnings(ccdf, 1e-3))
    return MetaCurve(
        x_grid=grid,
        ccdf=tuple(ccdf),
        method=Method.GIL_PELAEZ,
        metric=metric,
        cfg_digest=cfg.digest(),
        diagnostics=tuple(diagnostics),
        warnings=tuple(warnings),
    )
