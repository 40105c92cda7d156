"""Shared discretization of the moment integrals.

One composite Gauss-Legendre grid serves every order: an outer axis in
q = ln d_1 and, per outer node, an inner axis in tau = ln d running from d_1 to
the interference radius. Rows are ragged and stored flat; row sums use
`np.add.reduceat`.

Imaginary orders jt oscillate like exp(-jt ln(1 + sG)). Near the serving
distance the phase advances at up to alpha * t per unit tau, so that zone gets
one wavelength per panel. The zone ends where t * sG <= 1 or, earlier, once it
holds ZONE_INTERFERERS expected interferers; past that point |exp(-E)| is
below exp(-ZONE_INTERFERERS) whatever the far-field nodes contribute, since
every node adds a nonnegative real part to E.
"""

import logging
import math
import threading
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from src.coverage.models import NetworkConfig
from src.coverage.probability import (
    interference_radius,
    log_gains,
    los_probability_3d,
    outer_weight,
    serving_range,
)
from src.numerics.quadrature import gauss_legendre_panels
from src.propagation.pathloss import LN10_OVER_10
from src.utils import config

logger = logging.getLogger(__name__)

ORDER = 10  # Gauss-Legendre points per panel
INNER_PANELS_PER_UNIT = 4
OUTER_PANELS_PER_UNIT = 8
BAND_START = 8.0  # below this |t| the base resolution already resolves the phase
ZONE_INTERFERERS = 20.0
ZONE_MARGIN = 0.5
CHUNK_POINTS = 1_000_000
MAX_CACHED_BANDS = 3


@dataclass
class _Grid:
    wo: np.ndarray  # outer weights, normalized to sum to 1
    p1: np.ndarray  # LoS probability of the serving link per row
    starts: np.ndarray  # first flat index of each row
    wi: np.ndarray  # inner weights, 2 pi lambda' d^2 dtau folded in
    p: np.ndarray  # interferer LoS probability
    # ln(1 + sG) per (serving link, interferer link)
    l_los_los: np.ndarray
    l_los_nlos: np.ndarray
    l_nlos_los: np.ndarray
    l_nlos_nlos: np.ndarray

    @property
    def size(self) -> int:
        return self.wi.size


def band_for(t: float) -> float:
    """Resolution band covering |t|: 0 or BAND_START * 2^k."""
    t = abs(t)
    if t <= BAND_START:
        return 0.0
    return BAND_START * 2.0 ** math.ceil(math.log2(t / BAND_START))


def _log_gain_offset(params, f: float) -> float:
    # ln G(d) = -alpha ln d - offset
    return LN10_OVER_10 * (params.beta + 10.0 * params.gamma * math.log10(f))


class MomentKernel:
    """Moments of the conditional success probability for one (cfg, theta)."""

    def __init__(self, cfg: NetworkConfig, theta: float, workers: int = config.WORKERS):
        if not theta > 0:
            raise ValueError(f"theta must be > 0, got {theta}")
        self.cfg = cfg
        self.theta = theta
        self.log_theta = math.log(theta)
        self.workers = max(1, workers)
        self._grids: OrderedDict[float, _Grid] = OrderedDict()
        self._lock = threading.Lock()

    # --- grid construction ---

    def _zone_end(self, tau1: np.ndarray, tau_out: float, band: float) -> np.ndarray:
        if band == 0.0:
            return tau1.copy()
        cfg = self.cfg
        d1 = np.exp(tau1)
        lg_los, lg_nlos = log_gains(d1, cfg)
        worst_serving = np.minimum(lg_los, lg_nlos)
        ends = []
        for params in (cfg.env.los, cfg.env.nlos):
            # t * theta * G_k(d) / G_serv(d_1) = 1
            tau_k = (math.log(band) + self.log_theta - _log_gain_offset(params, cfg.f) - worst_serving) / params.alpha
            ends.append(tau_k)
        tau_sg = np.maximum(ends[0], ends[1]) + ZONE_MARGIN
        tau_cap = 0.5 * np.log(d1 * d1 + ZONE_INTERFERERS / (math.pi * cfg.active_density))
        return np.clip(np.minimum(tau_sg, tau_cap), tau1, tau_out)

    def _build(self, band: float) -> _Grid:
        cfg = self.cfg
        d_lo, d_hi = serving_range(cfg)
        q_lo, q_hi = math.log(d_lo), math.log(d_hi)
        n_outer = max(1, math.ceil(OUTER_PANELS_PER_UNIT * (q_hi - q_lo)))
        q, wq = gauss_legendre_panels(q_lo, q_hi, n_outer, ORDER)
        d1 = np.exp(q)
        wo = wq * outer_weight(d1, cfg)
        wo = wo / math.fsum(wo)
        p1 = los_probability_3d(cfg.h, d1, cfg.env)

        tau_out = math.log(math.hypot(cfg.h, interference_radius(cfg)))
        alpha_max = max(cfg.env.los.alpha, cfg.env.nlos.alpha)
        zone_res = max(INNER_PANELS_PER_UNIT, alpha_max * band / (2.0 * math.pi))
        zone_end = self._zone_end(q, tau_out, band)

        taus, weights, counts = [], [], []
        for tau1, tz in zip(q, zone_end):
            row_t, row_w = [], []
            for lo, hi, res in ((tau1, tz, zone_res), (tz, tau_out, INNER_PANELS_PER_UNIT)):
                if hi - lo <= 0:
                    continue
                nodes, w = gauss_legendre_panels(lo, hi, max(1, math.ceil(res * (hi - lo))), ORDER)
                row_t.append(nodes)
                row_w.append(w)
            if not row_t:  # serving distance at the interference radius
                row_t, row_w = [np.array([tau_out])], [np.zeros(1)]
            taus.append(np.concatenate(row_t))
            weights.append(np.concatenate(row_w))
            counts.append(taus[-1].size)

        tau = np.concatenate(taus)
        d = np.exp(tau)
        row = np.repeat(np.arange(q.size), counts)
        wi = np.concatenate(weights) * d * d * (2.0 * math.pi * cfg.active_density)
        p = los_probability_3d(cfg.h, d, cfg.env)
        lg_los, lg_nlos = log_gains(d, cfg)
        lgs_los, lgs_nlos = log_gains(d1, cfg)
        s_los = (self.log_theta - lgs_los)[row]
        s_nlos = (self.log_theta - lgs_nlos)[row]
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        grid = _Grid(
            wo=wo,
            p1=p1,
            starts=starts,
            wi=wi,
            p=p,
            l_los_los=np.logaddexp(0.0, s_los + lg_los),
            l_los_nlos=np.logaddexp(0.0, s_los + lg_nlos),
            l_nlos_los=np.logaddexp(0.0, s_nlos + lg_los),
            l_nlos_nlos=np.logaddexp(0.0, s_nlos + lg_nlos),
        )
        logger.debug("moment grid band=%g: %d rows, %d inner nodes", band, q.size, grid.size)
        return grid

    def grid(self, band: float = 0.0) -> _Grid:
        with self._lock:
            if band in self._grids:
                self._grids.move_to_end(band)
                return self._grids[band]
            grid = self._build(band)
            self._grids[band] = grid
            while len(self._grids) > MAX_CACHED_BANDS:
                self._grids.popitem(last=False)
            return grid

    # --- evaluation ---

    def _chunks(self, grid: _Grid):
        """Row-aligned flat slices of at most ~CHUNK_POINTS nodes."""
        starts = grid.starts
        n_rows = starts.size
        r = 0
        while r < n_rows:
            lo = starts[r]
            r_end = int(np.searchsorted(starts, lo + CHUNK_POINTS, side="right"))
            r_end = max(r_end, r + 1)
            hi = starts[r_end] if r_end < n_rows else grid.size
            yield r, r_end, int(lo), int(hi)
            r = r_end

    def _exponents(self, grid: _Grid, term) -> tuple[np.ndarray, np.ndarray]:
        """Per-row sums of wi * term(...) for a LoS and an NLoS serving link."""
        e_los = np.empty(grid.starts.size, dtype=complex)
        e_nlos = np.empty(grid.starts.size, dtype=complex)
        for r0, r1, lo, hi in self._chunks(grid):
            sl = slice(lo, hi)
            offsets = grid.starts[r0:r1] - lo
            p, wi = grid.p[sl], grid.wi[sl]
            for out, l_los, l_nlos in (
                (e_los, grid.l_los_los[sl], grid.l_los_nlos[sl]),
                (e_nlos, grid.l_nlos_los[sl], grid.l_nlos_nlos[sl]),
            ):
                values = wi * (p * term(l_los) + (1.0 - p) * term(l_nlos))
                out[r0:r1] = np.add.reduceat(values, offsets)
        return e_los, e_nlos

    def _assemble(self, grid: _Grid, e_los: np.ndarray, e_nlos: np.ndarray) -> complex:
        rows = grid.wo * (grid.p1 * np.exp(-e_los) + (1.0 - grid.p1) * np.exp(-e_nlos))
        return complex(math.fsum(rows.real), math.fsum(rows.imag))

    def real_moment(self, m: float) -> float:
        if m < 0:
            raise ValueError(f"real order must be >= 0, got {m}")
        if m == 0:
            return 1.0
        grid = self.grid(0.0)
        # 1 - (1 + sG)^-m
        e_los, e_nlos = self._exponents(grid, lambda ell: -np.expm1(-m * ell))
        value = self._assemble(grid, e_los.real, e_nlos.real).real
        return min(max(value, 0.0), 1.0)

    def complex_moment(self, t: float, band: float | None = None) -> complex:
        """M_{jt}; `band` pins the grid resolution (defaults to band_for(t))."""
        if t == 0:
            return 1.0 + 0.0j
        band = band_for(t) if band is None else band
        if band < band_for(t):
            raise ValueError(f"band {band} does not resolve t={t}")
        grid = self.grid(band)

        def term(ell):
            phase = t * ell
            # 1 - exp(-j t ell), with 1 - cos written as 2 sin^2 to keep precision
            return 2.0 * np.sin(0.5 * phase) ** 2 + 1j * np.sin(phase)

        e_los, e_nlos = self._exponents(grid, term)
        return self._assemble(grid, e_los, e_nlos)

    def real_moments(self, orders) -> list[float]:
        orders = [float(m) for m in orders]
        if self.workers > 1 and len(orders) > 1:
            self.grid(0.0)
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                return list(pool.map(self.real_moment, orders))
        return [self.real_moment(m) for m in orders]

    def complex_moments(self, t_values, band: float | None = None) -> np.ndarray:
        t_values = np.asarray(t_values, dtype=float)
        if t_values.size == 0:
            return np.zeros(0, dtype=complex)
        band = band_for(float(np.max(np.abs(t_values)))) if band is None else band
        if self.workers > 1 and t_values.size > 1:
            self.grid(band)
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                values = list(pool.map(lambda t: self.complex_moment(t, band), t_values.tolist()))
        else:
            values = [self.complex_moment(t, band) for t in t_values.tolist()]
        return np.array(values, dtype=complex)
