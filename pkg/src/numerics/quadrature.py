"""Adaptive quadrature for the radial and Gil-Pelaez integrals.

Integrands are vectorized: they take a 1-D float array of abscissae and return
an array of the same length (real or complex). The interval decomposition is
fixed before anything runs in parallel and partial sums are reduced in index
order, so results do not depend on scheduling.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.special import roots_legendre

from src.utils import config
from src.utils.errors import ConvergenceError, NumericalError

logger = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray], np.ndarray]

# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15), positive half.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point node set on [-1, 1], ordered left to right
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_K_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_G_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (x1, x3, x5, x7 and mirrors)
_G_WEIGHTS[[1, 3, 5]] = _WG[:3]
_G_WEIGHTS[7] = _WG[3]
_G_WEIGHTS[[9, 11, 13]] = _WG[:3][::-1]


class QuadratureSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    rel_tol: float = config.REL_TOL
    abs_tol: float = config.ABS_TOL
    max_subdivisions: int = config.MAX_SUBDIVISIONS
    tail_cutoff: float = config.TAIL_CUTOFF

    @model_validator(mode="after")
    def _validate(self) -> "QuadratureSpec":
        config.validate_tolerance(self.rel_tol, "rel_tol")
        if self.abs_tol < 0:
            raise ValueError(f"abs_tol must be >= 0, got {self.abs_tol}")
        if self.max_subdivisions < 1:
            raise ValueError(f"max_subdivisions must be >= 1, got {self.max_subdivisions}")
        if not 0 < self.tail_cutoff < 1:
            raise ValueError(f"tail_cutoff must be in (0, 1), got {self.tail_cutoff}")
        return self

    def tighter(self, factor: float) -> "QuadratureSpec":
        return self.model_copy(update={"rel_tol": self.rel_tol * factor, "abs_tol": self.abs_tol * factor})


@dataclass(frozen=True)
class QuadratureResult:
    value: complex | float
    error: float
    evaluations: int
    subdivisions: int
    truncated_at: float = math.inf


@dataclass(frozen=True)
class GilPelaezResult:
    value: float
    t_end: float
    modulus_at_end: float  # |M_{j t_end}|, nan when no modulus callback given
    truncation_bound: float
    panels: int


def _rule(y: np.ndarray, half: np.ndarray):
    kronrod = half * (y @ _K_WEIGHTS)
    gauss = half * (y @ _G_WEIGHTS)
    return kronrod, gauss


def _kronrod_batch(f: Integrand, a: np.ndarray, b: np.ndarray):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
    y = np.asarray(f(x)).reshape(a.size, 15)
    if not np.all(np.isfinite(y)):
        raise NumericalError("integrand returned non-finite values")
    if np.iscomplexobj(y):
        # real and imaginary parts go through the real rule separately
        k_re, g_re = _rule(np.ascontiguousarray(y.real), half)
        k_im, g_im = _rule(np.ascontiguousarray(y.imag), half)
        return k_re + 1j * k_im, np.hypot(k_re - g_re, k_im - g_im)
    kronrod, gauss = _rule(y, half)
    return kronrod, np.abs(kronrod - gauss)


def _total(values: np.ndarray) -> complex | float:
    if np.iscomplexobj(values):
        return complex(math.fsum(values.real), math.fsum(values.imag))
    return math.fsum(values)


def integrate_interval(f: Integrand, lo: float, hi: float, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """Globally adaptive Gauss-Kronrod bisection on [lo, hi].

    Every pass bisects all intervals whose error exceeds their fair share of the
    target; children are evaluated in a single vectorized call.
    """
    spec = spec or QuadratureSpec()
    if hi == lo:
        return QuadratureResult(0.0, 0.0, 0, 0)
    if hi < lo:
        result = integrate_interval(f, hi, lo, spec)
        return QuadratureResult(-result.value, result.error, result.evaluations, result.subdivisions)

    a = np.array([lo], dtype=float)
    b = np.array([hi], dtype=float)
    vals, errs = _kronrod_batch(f, a, b)
    evaluations = 15
    subdivisions = 0

    while True:
        total = _total(vals)
        error = float(np.sum(errs))
        target = max(spec.abs_tol, spec.rel_tol * abs(total))
        if error <= target:
            break
        if subdivisions >= spec.max_subdivisions:
            raise ConvergenceError("adaptive quadrature did not converge", total, error)

        split = errs > target / a.size
        if not np.any(split):
            split = errs == errs.max()
        n_split = int(np.count_nonzero(split))
        if subdivisions + n_split > spec.max_subdivisions:
            # spend the remaining budget on the worst intervals
            budget = spec.max_subdivisions - subdivisions
            order = np.argsort(-errs, kind="stable")[:max(budget, 1)]
            split = np.zeros_like(split)
            split[order] = True
            n_split = int(np.count_nonzero(split))

        mid = 0.5 * (a[split] + b[split])
        new_a = np.concatenate([a[split], mid])
        new_b = np.concatenate([mid, b[split]])
        new_vals, new_errs = _kronrod_batch(f, new_a, new_b)
        evaluations += 15 * new_a.size
        subdivisions += n_split

        a = np.concatenate([a[~split], new_a])
        b = np.concatenate([b[~split], new_b])
        vals = np.concatenate([vals[~split], new_vals])
        errs = np.concatenate([errs[~split], new_errs])
        order = np.argsort(a, kind="stable")
        a, b, vals, errs = a[order], b[order], vals[order], errs[order]

    value = total
    return QuadratureResult(value, error, evaluations, subdivisions)


def _mapped(f: Integrand, a: float, scale: float) -> Integrand:
    def g(u: np.ndarray) -> np.ndarray:
        r = a + scale * (1.0 - u) / u
        return np.asarray(f(r)) * (scale / (u * u))

    return g


def _tail_cut(g: Integrand, cutoff: float) -> tuple[float, float]:
    """Lower u-limit below which |g| stays under cutoff * peak on the dyadic nodes, and
    the resulting bound on the neglected mass."""
    nodes = 2.0 ** -np.arange(0, 61, dtype=float)
    magnitude = np.abs(np.asarray(g(nodes)))
    if not np.all(np.isfinite(magnitude)):
        raise NumericalError("integrand returned non-finite values while sampling the tail")
    peak = magnitude.max()
    if peak == 0:
        return 1.0, 0.0
    last = np.nonzero(magnitude >= cutoff * peak)[0][-1]
    if last + 1 >= nodes.size:
        return 0.0, 0.0
    u_lo = float(nodes[last + 1])
    return u_lo, u_lo * cutoff * float(peak)


def integrate_semi_infinite(
    f: Integrand,
    a: float,
    spec: QuadratureSpec | None = None,
    scale: float = 1.0,
) -> QuadratureResult:
    """Integrate f over [a, inf) after the change u = 1 / (1 + (r - a) / scale).

    The tail is cut where the mapped integrand falls below `tail_cutoff` times its
    sampled peak; slowly decaying tails keep a nonvanishing mapped integrand and are
    never cut.
    """
    spec = spec or QuadratureSpec()
    if not scale > 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    g = _mapped(f, a, scale)
    u_lo, tail_bound = _tail_cut(g, spec.tail_cutoff)
    if u_lo == 1.0:
        return QuadratureResult(0.0, 0.0, 0, 0, truncated_at=a)
    end = math.inf if u_lo == 0.0 else a + scale * (1.0 - u_lo) / u_lo
    result = integrate_interval(g, u_lo, 1.0, spec)
    return QuadratureResult(
        result.value, result.error + tail_bound, result.evaluations, result.subdivisions, truncated_at=end
    )


def gauss_legendre_panels(lo, hi, n_panels: int, order: int = 10):
    """Composite Gauss-Legendre nodes and weights on [lo, hi].

    `lo` and `hi` may be arrays of equal shape; the rule is then built row-wise
    and the result has shape lo.shape + (n_panels * order,).
    """
    x, w = roots_legendre(order)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    steps = np.linspace(0.0, 1.0, n_panels + 1)
    edges = lo[..., None] + (hi - lo)[..., None] * steps
    half = 0.5 * np.diff(edges, axis=-1)
    mid = 0.5 * (edges[..., 1:] + edges[..., :-1])
    nodes = mid[..., None] + half[..., None] * x
    weights = half[..., None] * w
    shape = lo.shape + (n_panels * order,)
    return nodes.reshape(shape), weights.reshape(shape)


def gil_pelaez_integral(
    g: Integrand | None,
    spec: QuadratureSpec | None = None,
    t_max: float = config.T_MAX,
    *,
    log_x: float,
    modulus: Callable[[float], float] | None = None,
    panel_width: float | None = None,
    t_cap: float | None = None,
    modulus_tol: float = 1e-4,
    tail_tol: float = 1e-3,
    workers: int = 1,
    panel_integrand: Callable[[float, float], Integrand] | None = None,
) -> GilPelaezResult:
    """Integrate g(t) = Im[exp(-jt log x) M_jt] / t over [0, T].

    Panels are one oscillation wavelength 2*pi/|log x| wide (at most 2*pi).
    T starts at t_max and doubles while |M_jT| > modulus_tol and the tail bound
    |M_jT| / (pi T |log x|) > tail_tol, up to t_cap (default 8 * t_max).
    `panel_integrand(lo, hi)`, when given, supplies the integrand of each panel
    in place of g, so resolution can change between panels but never inside one.
    """
    spec = spec or QuadratureSpec()
    if g is None and panel_integrand is None:
        raise ValueError("gil_pelaez_integral needs g or panel_integrand")
    if log_x == 0:
        raise ValueError("gil_pelaez_integral needs log x != 0")
    if not t_max > 0:
        raise ValueError(f"t_max must be > 0, got {t_max}")
    t_cap = 8.0 * t_max if t_cap is None else t_cap
    width = panel_width or min(2.0 * math.pi / abs(log_x), 2.0 * math.pi)

    panel_values: list[float] = []
    t_end = 0.0
    target = t_max
    mod = math.nan
    bound = math.nan
    while True:
        n_new = max(1, math.ceil((target - t_end) / width - 1e-9))
        edges = [t_end + k * width for k in range(n_new)] + [target]
        edges = sorted(set(min(e, target) for e in edges))
        pairs = list(zip(edges[:-1], edges[1:]))
        panel_spec = spec.model_copy(update={"abs_tol": max(spec.abs_tol, spec.rel_tol / max(len(pairs), 1))})

        def _panel(pair):
            f = panel_integrand(*pair) if panel_integrand is not None else g
            return integrate_interval(f, pair[0], pair[1], panel_spec).value

        if workers > 1 and len(pairs) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                values = list(pool.map(_panel, pairs))
        else:
            values = [_panel(p) for p in pairs]
        panel_values.extend(float(np.real(v)) for v in values)
        t_end = target

        if modulus is None:
            break
        mod = float(modulus(t_end))
        bound = mod / (math.pi * t_end * abs(log_x))
        if mod <= modulus_tol or bound <= tail_tol:
            break
        if t_end >= t_cap:
            logger.warning(
                "Gil-Pelaez truncated at t=%.0f with |M|=%.3g (tail bound %.3g)", t_end, mod, bound
            )
            break
        target = min(2.0 * t_end, t_cap)
        logger.debug("extending Gil-Pelaez range to t=%.0f (|M|=%.3g)", target, mod)

    return GilPelaezResult(
        value=math.fsum(panel_values),
        t_end=t_end,
        modulus_at_end=mod,
        truncation_bound=bound,
        panels=len(panel_values),
    )
