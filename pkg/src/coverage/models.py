import hashlib
import logging
import math
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.propagation.models import Environment, env_preset
from src.utils import config

logger = logging.getLogger(__name__)


class NetworkConfig(BaseModel):
    """Deployment state of the typical cell.

    `lambda_` is the BS density per m^2 (alias "lambda"), `w` the bandwidth in Hz
    and `f` the carrier in GHz. `window_factor` and `tail_fraction` fix the outer
    radius of the interfering field shared by the analytical kernels and the
    simulator.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lambda_: float = Field(alias="lambda")
    h: float
    n_a: int = 1
    n_s: int = 1
    w: float = 20e6
    f: float = 2.0
    env: Environment = Field(default_factory=lambda: env_preset("umi"))
    full_load: bool = False
    window_factor: float = config.WINDOW_FACTOR
    tail_fraction: float = config.TAIL_FRACTION

    @field_validator("lambda_", "w", "f", "window_factor")
    @classmethod
    def _positive(cls, value: float, info) -> float:
        if not (value > 0 and math.isfinite(value)):
            raise ValueError(f"{info.field_name} must be > 0, got {value}")
        return value

    @field_validator("h")
    @classmethod
    def _non_negative(cls, value: float) -> float:
        if not (value >= 0 and math.isfinite(value)):
            raise ValueError(f"h must be >= 0, got {value}")
        return value

    @field_validator("tail_fraction")
    @classmethod
    def _fraction(cls, value: float) -> float:
        if not 0 < value < 1:
            raise ValueError(f"tail_fraction must be in (0, 1), got {value}")
        return value

    @model_validator(mode="after")
    def _validate(self) -> "NetworkConfig":
        if not 1 <= self.n_a <= self.n_s:
            raise ValueError(f"invariant 1 <= n_a <= n_s violated (n_a={self.n_a}, n_s={self.n_s})")
        if self.full_load and self.n_a != self.n_s:
            raise ValueError(f"full_load requires n_a == n_s (n_a={self.n_a}, n_s={self.n_s})")
        lo, hi = self.env.density_range
        if not lo <= self.lambda_ <= hi:
            logger.warning(
                "lambda=%g outside the %s density range [%g, %g]",
                self.lambda_, self.env.deployment.value, lo, hi,
            )
        return self

    @property
    def load(self) -> float:
        """Interferer thinning ratio n_a / n_s."""
        return self.n_a / self.n_s

    @property
    def active_density(self) -> float:
        return self.lambda_ * self.n_a / self.n_s

    def with_(self, **changes) -> "NetworkConfig":
        """Validated copy; under full load a new n_s drags n_a along."""
        if "lambda" in changes:
            changes["lambda_"] = changes.pop("lambda")
        if self.full_load and "n_s" in changes and "n_a" not in changes:
            changes["n_a"] = changes["n_s"]
        data = self.model_dump()
        data.update(changes)
        return NetworkConfig(**data)

    def digest(self) -> str:
        payload = self.model_dump_json(by_alias=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


class SirThreshold(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["sir"] = "sir"
    theta: float  # linear

    @field_validator("theta")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(f"theta must be > 0, got {value}")
        return value

    @classmethod
    def from_db(cls, theta_db: float) -> "SirThreshold":
        return cls(theta=10.0 ** (theta_db / 10.0))

    def label(self) -> str:
        return f"theta={self.theta!r}"


class RateThreshold(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["rate"] = "rate"
    r_o: float  # bit/s

    @field_validator("r_o")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(f"r_o must be > 0, got {value}")
        return value

    def label(self) -> str:
        return f"r_o={self.r_o!r}"


Metric = Annotated[Union[SirThreshold, RateThreshold], Field(discriminator="kind")]
