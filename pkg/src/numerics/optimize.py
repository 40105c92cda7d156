"""Scalar and grid maximizers used by the height/density/partition searches."""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2
MIN_SCAN_POINTS = 17


class OptimizerSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    bracket: tuple[float, float]
    x_tol: float = 1e-3
    max_evals: int = 100
    scan_points: int = MIN_SCAN_POINTS

    @model_validator(mode="after")
    def _validate(self) -> "OptimizerSpec":
        lo, hi = self.bracket
        if not lo < hi:
            raise ValueError(f"bracket must satisfy lo < hi, got {self.bracket}")
        if not self.x_tol > 0:
            raise ValueError(f"x_tol must be > 0, got {self.x_tol}")
        if self.scan_points < MIN_SCAN_POINTS:
            raise ValueError(f"scan_points must be >= {MIN_SCAN_POINTS}, got {self.scan_points}")
        if self.max_evals < self.scan_points:
            raise ValueError("max_evals must cover the initial grid scan")
        return self


@dataclass
class ScalarOptimum:
    x: float
    value: float
    evaluations: int
    converged: bool
    trace: list[tuple[float, float]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class GridAxis:
    name: str
    values: tuple[float, ...]
    integer: bool = False
    refine: bool = True  # ignored for integer axes
    x_tol: float | None = None


@dataclass
class GridOptimum:
    args: tuple
    value: float
    trace: list[tuple[tuple, float]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _count_local_maxima(values: np.ndarray) -> int:
    padded = np.concatenate([[-np.inf], values, [-np.inf]])
    return int(np.sum((padded[1:-1] > padded[:-2]) & (padded[1:-1] >= padded[2:])))


def golden_section_max(f: Callable[[float], float], spec: OptimizerSpec) -> ScalarOptimum:
    """Grid scan, then golden-section search around the best scan point.

    Only comparisons between objective values are used, so the argmax does not
    change under a strictly increasing transform of f.
    """
    lo, hi = spec.bracket
    trace: list[tuple[float, float]] = []
    warnings: list[str] = []

    def evaluate(x: float) -> float:
        y = float(f(x))
        trace.append((x, y))
        return y

    xs = np.linspace(lo, hi, spec.scan_points)
    ys = np.array([evaluate(float(x)) for x in xs])
    best = int(np.argmax(ys))
    if _count_local_maxima(ys) > 1:
        warnings.append("multimodal: grid scan found several local maxima")
        logger.warning("golden_section_max: objective looks multimodal on [%g, %g]", lo, hi)

    a = float(xs[max(best - 1, 0)])
    b = float(xs[min(best + 1, xs.size - 1)])
    h = b - a
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc, yd = evaluate(c), evaluate(d)
    converged = True
    while h > spec.x_tol:
        if len(trace) >= spec.max_evals:
            converged = False
            warnings.append(f"max_evals {spec.max_evals} exhausted at interval width {h:.3g}")
            logger.warning("golden_section_max: evaluation budget exhausted (width %.3g)", h)
            break
        if yc >= yd:
            b, d, yd = d, c, yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = evaluate(c)
        else:
            a, c, yc = c, d, yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = evaluate(d)

    # best point seen; ties go to the earliest evaluation
    x_best, y_best = trace[0]
    for x, y in trace[1:]:
        if y > y_best:
            x_best, y_best = x, y
    if min(x_best - lo, hi - x_best) <= spec.x_tol:
        warnings.append(f"boundary: argmax {x_best:g} at the edge of [{lo:g}, {hi:g}]")
    return ScalarOptimum(x_best, y_best, len(trace), converged, trace, warnings)


def grid_refine_max(
    f: Callable[..., float],
    axes: Sequence[GridAxis],
    *,
    max_evals: int = 60,
    workers: int = 1,
) -> GridOptimum:
    """Exhaustive grid search followed by golden-section refinement per continuous axis.

    Grid values are visited in ascending lexicographic order of the axes and only a
    strictly larger objective replaces the incumbent, so ties resolve to the
    smallest first axis, then the second, and so on. Refinement accepts strict
    improvements only.
    """
    if not axes or any(len(axis.values) == 0 for axis in axes):
        raise ValueError("grid_refine_max needs at least one axis and nonempty grids")
    sorted_axes = [
        GridAxis(a.name, tuple(sorted(set(a.values))), a.integer, a.refine, a.x_tol) for a in axes
    ]
    points = list(itertools.product(*(axis.values for axis in sorted_axes)))
    logger.info("grid search over %d points (%s)", len(points), ", ".join(a.name for a in sorted_axes))

    if workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(lambda p: float(f(*p)), points))
    else:
        values = [float(f(*p)) for p in points]

    trace = list(zip(points, values))
    best_args, best_value = trace[0]
    for args, value in trace[1:]:
        if value > best_value:
            best_args, best_value = args, value

    warnings: list[str] = []
    best_args = list(best_args)
    for i, axis in enumerate(sorted_axes):
        if axis.integer or not axis.refine or len(axis.values) < 2:
            continue
        grid = axis.values
        k = grid.index(best_args[i])
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        spec = OptimizerSpec(
            bracket=(lo, hi),
            x_tol=axis.x_tol or (grid[-1] - grid[0]) * 1e-3,
            max_evals=max_evals,
        )

        def along(x: float, i=i) -> float:
            args = list(best_args)
            args[i] = x
            return float(f(*args))

        result = golden_section_max(along, spec)
        trace.extend(((*best_args[:i], x, *best_args[i + 1:]), y) for x, y in result.trace)
        if not result.converged:
            warnings.extend(result.warnings)
        if result.value > best_value:
            best_args[i] = result.x
            best_value = result.value

    for i, axis in enumerate(sorted_axes):
        if len(axis.values) > 1 and best_args[i] in (axis.values[0], axis.values[-1]):
            warnings.append(f"boundary: {axis.name} optimum {best_args[i]:g} at grid edge")
    for message in warnings:
        logger.warning("grid_refine_max: %s", message)
    return GridOptimum(tuple(best_args), best_value, trace, warnings)
