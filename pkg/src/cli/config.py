"""Run configuration for the command-line front end.

Values are layered: built-in defaults < key=value config file < METADIST_<KEY>
environment variables < command-line flags. Thresholds arrive in dB and become
linear metric objects here.
"""

import logging
import math
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.capacity.optimize import N_S_RANGE
from src.capacity.sweep import SWEEP_AXES
from src.coverage.models import Metric, NetworkConfig, RateThreshold, SirThreshold
from src.metadist.models import Method
from src.numerics.quadrature import QuadratureSpec
from src.propagation.models import Deployment, env_preset
from src.utils import config
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

COMMANDS = ("coverage", "rate", "moments", "meta", "scc", "src", "optimize", "sweep", "simulate", "surface")
CONFIG_KEYS = (
    "deployment", "a", "b", "lambda", "h", "n_a", "n_s", "w", "f", "full_load",
    "theta_db", "r_o", "method", "mu", "t_max", "rel_tol", "abs_tol",
    "n", "seed", "window_factor", "tail_fraction", "report", "block_size", "workers",
    "x", "x_grid", "axis", "grid", "heights", "target", "h_bracket",
    "lambda_grid", "h_grid", "n_s_grid", "out",
)
GRID_KEYS = ("x_grid", "grid", "heights", "h_bracket", "lambda_grid", "h_grid", "n_s_grid")


def parse_grid(text: str) -> tuple[float, ...]:
    """'start:stop:step' (stop included) or a comma-separated list."""
    text = str(text).strip()
    if not text:
        raise ValueError("empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range grid must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if not step > 0 or stop < start:
            raise ValueError(f"range grid needs step > 0 and stop >= start, got {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(v) for v in start + step * np.arange(count))
    return tuple(float(p) for p in text.split(",") if p.strip())


class RunConfig(BaseModel):
    """One fully resolved invocation."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    command: Literal[COMMANDS]
    deployment: Deployment = Deployment.UMI
    a: float | None = None
    b: float | None = None
    lambda_: float = Field(1e-4, alias="lambda")
    h: float = 10.0
    n_a: int = 1
    n_s: int = 1
    w: float = 20e6
    f: float = 2.0
    full_load: bool = False
    theta_db: float | None = None
    r_o: float | None = None
    method: Method = Method.MNATSAKANOV
    mu: int = config.MU
    t_max: float = config.T_MAX
    rel_tol: float | None = None
    abs_tol: float | None = None
    n: int = 100_000
    seed: int = 0
    window_factor: float = config.WINDOW_FACTOR
    tail_fraction: float = config.TAIL_FRACTION
    report: Literal["meta", "coverage", "moments"] = "meta"
    block_size: int = config.BLOCK_SIZE
    workers: int = config.WORKERS
    x: float = 0.5
    x_grid: tuple[float, ...] = tuple(round(0.1 * k, 1) for k in range(1, 10))
    axis: str = "h"
    grid: tuple[float, ...] = ()
    heights: tuple[float, ...] = (5.0, 10.0, 25.0, 50.0)
    target: Literal["height", "height-density", "capacity"] = "height"
    h_bracket: tuple[float, ...] = (1.0, 100.0)
    lambda_grid: tuple[float, ...] = (1e-5, 5e-5, 1e-4)
    h_grid: tuple[float, ...] = (5.0, 10.0, 25.0, 50.0)
    n_s_grid: tuple[float, ...] = tuple(float(k) for k in range(N_S_RANGE[0], N_S_RANGE[1] + 1))
    out: Path | None = None

    @field_validator(*GRID_KEYS, mode="before")
    @classmethod
    def _grid(cls, value):
        if isinstance(value, str):
            return parse_grid(value)
        return value

    @field_validator("deployment", mode="before")
    @classmethod
    def _deployment(cls, value):
        return value.lower() if isinstance(value, str) else value

    @model_validator(mode="after")
    def _validate(self) -> "RunConfig":
        if self.theta_db is not None and self.r_o is not None and self.command != "sweep":
            raise ValueError("exactly one metric: give theta_db or r_o, not both")
        if self.command == "rate" and self.r_o is None:
            raise ValueError("rate needs r_o")
        if self.command == "src" and self.r_o is None:
            raise ValueError("src needs r_o")
        if self.command == "scc" and self.r_o is not None:
            raise ValueError("scc takes theta_db, not r_o")
        if self.command == "sweep":
            if self.axis not in SWEEP_AXES:
                raise ValueError(f"unknown sweep axis {self.axis!r}; expected one of {', '.join(SWEEP_AXES)}")
            if not self.grid:
                raise ValueError("sweep needs a nonempty grid")
        for key in ("x_grid", "heights", "lambda_grid", "h_grid", "n_s_grid"):
            if not getattr(self, key):
                raise ValueError(f"{key} is empty")
        if len(self.h_bracket) != 2:
            raise ValueError(f"h_bracket needs two values, got {len(self.h_bracket)}")
        if self.mu < 1:
            raise ValueError(f"mu must be >= 1, got {self.mu}")
        # only the Mnatsakanov sum is capped; raw moments and simulations are not
        if self.mu > config.MU_CAP and self.command not in ("moments", "simulate", "coverage", "rate"):
            raise ValueError(f"mu={self.mu} exceeds {config.MU_CAP} for the Mnatsakanov reconstruction")
        if self.workers < 1 or self.block_size < 1:
            raise ValueError("workers and block_size must be >= 1")
        return self

    def network(self) -> NetworkConfig:
        env = env_preset(self.deployment, self.a, self.b)
        return NetworkConfig(
            lambda_=self.lambda_, h=self.h, n_a=self.n_a, n_s=self.n_s,
            w=self.w, f=self.f, env=env, full_load=self.full_load,
            window_factor=self.window_factor, tail_fraction=self.tail_fraction,
        )

    @property
    def metric(self) -> Metric:
        if self.r_o is not None and self.command not in ("coverage", "scc"):
            return RateThreshold(r_o=self.r_o)
        return SirThreshold.from_db(0.0 if self.theta_db is None else self.theta_db)

    @property
    def theta(self) -> float:
        return SirThreshold.from_db(0.0 if self.theta_db is None else self.theta_db).theta

    def quadrature_spec(self) -> QuadratureSpec | None:
        if self.rel_tol is None and self.abs_tol is None:
            return None
        return QuadratureSpec(
            rel_tol=config.REL_TOL if self.rel_tol is None else self.rel_tol,
            abs_tol=config.ABS_TOL if self.abs_tol is None else self.abs_tol,
        )

    def as_pairs(self) -> list[tuple[str, str]]:
        """Resolved key=value pairs in config-file form, for report metadata."""
        pairs = []
        for key in CONFIG_KEYS:
            value = getattr(self, "lambda_" if key == "lambda" else key)
            # results do not depend on workers or out
            if value is None or value == () or key in ("out", "workers"):
                continue
            if isinstance(value, tuple):
                text = ",".join(repr(v) for v in value)
            elif isinstance(value, float):
                text = repr(value)
            elif hasattr(value, "value"):
                text = str(value.value)
            else:
                text = str(value)
            pairs.append((key, text))
        return pairs


def read_config_file(path: Path) -> dict[str, str]:
    """Parse key=value lines; '#' starts a comment, blank lines are skipped."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _check_keys(values: dict, source: str) -> None:
    unknown = sorted(set(values) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(unknown)} in {source}; valid keys: {', '.join(CONFIG_KEYS)}")


def _describe(exc: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg'].removeprefix('Value error, ')}"
        for err in exc.errors()
    )


def parse_config(command: str, flags: dict[str, object], config_file: Path | None = None) -> RunConfig:
    """Merge the layers and validate, including the network invariants."""
    values: dict[str, object] = {}
    if config_file is not None:
        from_file = read_config_file(config_file)
        _check_keys(from_file, str(config_file))
        values.update(from_file)
    values.update(config.env_overrides(list(CONFIG_KEYS)))
    given = {k: v for k, v in flags.items() if v is not None}
    _check_keys(given, "flags")
    values.update(given)
    try:
        run = RunConfig(command=command, **values)
        cfg = run.network()
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from exc
    logger.debug("resolved config %s: %s", cfg.digest(), run.as_pairs())
    return run
