from pydantic import BaseModel, ConfigDict, model_validator

from src.coverage.models import Metric

SLACK = 1e-12


class CapacityPoint(BaseModel):
    """Spatial capacity at reliability x: n_a * lambda * P[P_s > x] users per m^2."""

    model_config = ConfigDict(frozen=True)

    cfg_digest: str
    x: float
    metric: Metric
    value: float
    ccdf: float
    peak: float  # n_a * lambda
    mu: int

    @model_validator(mode="after")
    def _validate(self) -> "CapacityPoint":
        if not 0.0 < self.x < 1.0:
            raise ValueError(f"reliability x must be in (0, 1), got {self.x}")
        if self.value < 0:
            raise ValueError(f"capacity must be >= 0, got {self.value}")
        if self.value > self.peak * (1.0 + SLACK):
            raise ValueError(f"capacity {self.value} exceeds n_a * lambda = {self.peak}")
        return self


class OptimumReport(BaseModel):
    """Argmax of a coverage or capacity objective over declared search ranges.

    `trace` lists every evaluated point as (args, value) with args ordered like
    `arg_names`.
    """

    model_config = ConfigDict(frozen=True)

    objective: str
    arg_names: tuple[str, ...]
    argmax: tuple[float, ...]
    value: float
    ranges: tuple[tuple[float, float], ...]
    trace: tuple[tuple[tuple[float, ...], float], ...] = ()
    warnings: tuple[str, ...] = ()

    @model_validator(mode="after")
    def _validate(self) -> "OptimumReport":
        if not len(self.arg_names) == len(self.argmax) == len(self.ranges):
            raise ValueError("arg_names, argmax and ranges must have the same length")
        for name, value, (lo, hi) in zip(self.arg_names, self.argmax, self.ranges):
            if not lo <= value <= hi:
                raise ValueError(f"argmax {name}={value} outside its search range [{lo}, {hi}]")
        return self

    @property
    def args(self) -> dict[str, float]:
        return dict(zip(self.arg_names, self.argmax))

    @property
    def boundary(self) -> bool:
        return any(w.startswith("boundary") for w in self.warnings)


class HeightTradeoff(BaseModel):
    """Mean and variance of the success probability at h* and at h* + delta_h."""

    model_config = ConfigDict(frozen=True)

    h_star: float
    h_shifted: float
    mean_star: float
    mean_shifted: float
    variance_star: float
    variance_shifted: float

    @property
    def mean_drop(self) -> float:
        return self.mean_star - self.mean_shifted

    @property
    def variance_drop(self) -> float:
        return self.variance_star - self.variance_shifted
