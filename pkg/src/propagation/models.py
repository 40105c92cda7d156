import math
from enum import Enum

from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class LinkType(str, Enum):
    LOS = "los"
    NLOS = "nlos"


class Deployment(str, Enum):
    UMI = "umi"
    UMA = "uma"


class AbgParams(BaseModel):
    """Alpha-beta-gamma large-scale path-loss parameters for one link type."""

    model_config = ConfigDict(frozen=True)

    alpha: float  # path-loss exponent
    beta: float  # dB offset
    gamma: float  # frequency exponent

    @model_validator(mode="after")
    def _validate(self) -> "AbgParams":
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not math.isfinite(self.beta):
            raise ValueError(f"beta must be finite, got {self.beta}")
        return self


class Environment(BaseModel):
    model_config = ConfigDict(frozen=True)

    los: AbgParams
    nlos: AbgParams
    a: float = 9.6
    b: float = 0.28
    deployment: Deployment = Deployment.UMI
    density_range: tuple[float, float] = (1e-5, 1e-3)  # BS per m^2

    @field_validator("a", "b")
    @classmethod
    def _positive(cls, value: float, info) -> float:
        if not value > 0:
            raise ValueError(f"{info.field_name} must be > 0, got {value}")
        return value

    @model_validator(mode="after")
    def _validate_range(self) -> "Environment":
        lo, hi = self.density_range
        if not lo < hi:
            raise ValueError(f"density_range min < max violated: {self.density_range}")
        return self

    def params(self, link: LinkType) -> AbgParams:
        return self.los if link is LinkType.LOS else self.nlos


_PRESETS = {
    Deployment.UMI: dict(
        los=AbgParams(alpha=2.0, beta=31.4, gamma=2.1),
        nlos=AbgParams(alpha=3.5, beta=24.4, gamma=1.9),
        density_range=(1e-5, 1e-3),
    ),
    Deployment.UMA: dict(
        los=AbgParams(alpha=2.8, beta=11.4, gamma=2.3),
        nlos=AbgParams(alpha=3.3, beta=17.6, gamma=2.0),
        density_range=(1e-7, 1e-5),
    ),
}


def env_preset(
    deployment: Deployment | str,
    a: float | None = None,
    b: float | None = None,
) -> Environment:
    """Tabulated ABG parameters for a deployment class.

    Both classes default to the urban LoS-probability pair (a, b) = (9.6, 0.28);
    pass `a`/`b` to override.
    """
    deployment = Deployment(str(deployment).lower()) if not isinstance(deployment, Deployment) else deployment
    preset = _PRESETS[deployment]
    return Environment(
        los=preset["los"],
        nlos=preset["nlos"],
        a=9.6 if a is None else a,
        b=0.28 if b is None else b,
        deployment=deployment,
        density_range=preset["density_range"],
    )
