from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.integrate import trapezoid

from src.coverage.models import Metric


class Method(str, Enum):
    GIL_PELAEZ = "gil-pelaez"
    MNATSAKANOV = "mnatsakanov"


class MetaCurve(BaseModel):
    """CCDF of the conditional success probability tabulated on x_grid.

    `diagnostics` holds one record per point: the Gil-Pelaez truncation point,
    |M_jT| and tail bound, or the Mnatsakanov roundoff estimate.
    """

    model_config = ConfigDict(frozen=True)

    x_grid: tuple[float, ...]
    ccdf: tuple[float, ...]
    method: Method
    mu: int | None = None
    metric: Metric | None = None
    cfg_digest: str = ""
    diagnostics: tuple[dict[str, float], ...] = ()
    warnings: tuple[str, ...] = ()

    @model_validator(mode="after")
    def _validate(self) -> "MetaCurve":
        if len(self.x_grid) != len(self.ccdf):
            raise ValueError(f"x_grid has {len(self.x_grid)} points but ccdf has {len(self.ccdf)}")
        if self.diagnostics and len(self.diagnostics) != len(self.x_grid):
            raise ValueError("one diagnostics record per grid point expected")
        for value in self.ccdf:
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"ccdf value {value} outside [0, 1]")
        if self.method is Method.MNATSAKANOV and self.mu is None:
            raise ValueError("Mnatsakanov curves need mu")
        return self

    def integral(self) -> float:
        """Trapezoid integral of the CCDF over [0, 1]; approximates M_1.

        The grid is padded with CCDF(0) = ccdf[0] and CCDF(1) = 0.
        """
        x = np.concatenate([[0.0], self.x_grid, [1.0]])
        y = np.concatenate([[self.ccdf[0]], self.ccdf, [0.0]])
        return float(trapezoid(y, x))

    def sup_distance(self, other: "MetaCurve") -> float:
        if self.x_grid != other.x_grid:
            raise ValueError("curves are tabulated on different grids")
        return float(np.max(np.abs(np.subtract(self.ccdf, other.ccdf))))
