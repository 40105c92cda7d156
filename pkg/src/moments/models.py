from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.coverage.models import Metric

MONOTONE_SLACK = 1e-12


class Real(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["real"] = "real"
    m: float

    @field_validator("m")
    @classmethod
    def _non_negative(cls, value: float) -> float:
        if not value >= 0:
            raise ValueError(f"real order m must be >= 0, got {value}")
        return value


class Imaginary(BaseModel):
    """Order jt."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["imaginary"] = "imaginary"
    t: float


MomentOrder = Annotated[Union[Real, Imaginary], Field(discriminator="kind")]


class MomentSequence(BaseModel):
    """M_0..M_mu of the conditional success probability."""

    model_config = ConfigDict(frozen=True)

    metric: Metric | None = None
    cfg_digest: str = ""
    values: tuple[float, ...]
    mu: int

    @model_validator(mode="after")
    def _validate(self) -> "MomentSequence":
        if self.mu < 1:
            raise ValueError(f"mu must be >= 1, got {self.mu}")
        if len(self.values) != self.mu + 1:
            raise ValueError(f"expected {self.mu + 1} moments, got {len(self.values)}")
        if self.values[0] != 1.0:
            raise ValueError(f"M_0 must be 1, got {self.values[0]}")
        for j, value in enumerate(self.values):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"M_{j} = {value} outside [0, 1]")
        for j in range(self.mu):
            if self.values[j + 1] > self.values[j] + MONOTONE_SLACK:
                raise ValueError(f"moments must be nonincreasing: M_{j + 1} > M_{j}")
        return self

    def __getitem__(self, j: int) -> float:
        return self.values[j]
