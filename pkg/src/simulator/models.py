import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from src.coverage.models import Metric
from src.propagation.models import LinkType


@dataclass(frozen=True)
class Realization:
    """One network draw seen from the typical user.

    Interferer distances are 2-D and at least r_1; Rayleigh gains are not stored.
    """

    r_1: float
    serving_los: LinkType
    interferer_r: np.ndarray
    interferer_los: np.ndarray  # bool, True for LoS

    def __post_init__(self):
        if not self.r_1 >= 0:
            raise ValueError(f"r_1 must be >= 0, got {self.r_1}")
        if self.interferer_r.shape != self.interferer_los.shape:
            raise ValueError("interferer distances and LoS states must have the same shape")
        if self.interferer_r.size and self.interferer_r.min() < self.r_1:
            raise ValueError("interferers must lie outside the serving distance")

    @property
    def interferers(self) -> list[tuple[float, LinkType]]:
        return [
            (float(r), LinkType.LOS if los else LinkType.NLOS)
            for r, los in zip(self.interferer_r, self.interferer_los)
        ]


@dataclass(frozen=True)
class Block:
    """A batch of realizations with interferers stored flat.

    Realization i owns interferer slots offsets[i]:offsets[i + 1].
    """

    r_1: np.ndarray
    serving_los: np.ndarray
    offsets: np.ndarray
    r: np.ndarray
    los: np.ndarray

    @property
    def size(self) -> int:
        return self.r_1.size

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def realization(self, i: int) -> Realization:
        sl = slice(self.offsets[i], self.offsets[i + 1])
        return Realization(
            r_1=float(self.r_1[i]),
            serving_los=LinkType.LOS if self.serving_los[i] else LinkType.NLOS,
            interferer_r=self.r[sl].copy(),
            interferer_los=self.los[sl].copy(),
        )


class SimulationSummary(BaseModel):
    """Empirical meta-distribution statistics of the conditional success probability."""

    model_config = ConfigDict(frozen=True)

    n: int
    seed: int
    metric: Metric
    cfg_digest: str
    window_radius: float
    block_size: int
    mean: float  # empirical P_theta or P_{R_o}
    std_error: float
    degenerate: bool = False  # every realization gave the same P_s
    moments: tuple[float, ...]  # M_1..M_k
    moment_errors: tuple[float, ...]
    x_grid: tuple[float, ...]
    ccdf: tuple[float, ...]

    @model_validator(mode="after")
    def _validate(self) -> "SimulationSummary":
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0.0 <= self.mean <= 1.0:
            raise ValueError(f"mean {self.mean} outside [0, 1]")
        if self.std_error < 0:
            raise ValueError(f"std_error must be >= 0, got {self.std_error}")
        if self.n >= 2 and self.degenerate != (self.std_error == 0.0):
            raise ValueError(
                f"std_error={self.std_error} contradicts degenerate={self.degenerate} for n={self.n}"
            )
        if len(self.moments) != len(self.moment_errors):
            raise ValueError("one standard error per moment expected")
        if len(self.x_grid) != len(self.ccdf):
            raise ValueError("x_grid and ccdf lengths differ")
        for value in (*self.moments, *self.ccdf):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"estimate {value} outside [0, 1]")
        return self

    @property
    def ccdf_std_errors(self) -> tuple[float, ...]:
        """Binomial standard error sqrt(p (1 - p) / n) of each CCDF value."""
        return tuple(math.sqrt(p * (1.0 - p) / self.n) for p in self.ccdf)


class CoverageEstimate(BaseModel):
    """Fraction of realizations with SIR above threshold under sampled fading."""

    model_config = ConfigDict(frozen=True)

    n: int
    seed: int
    value: float
    std_error: float

    def interval(self, z: float = 1.96) -> tuple[float, float]:
        return max(self.value - z * self.std_error, 0.0), min(self.value + z * self.std_error, 1.0)
