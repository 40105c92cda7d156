import os

ENV_PREFIX = "METADIST_"


def _env(name: str, default: str) -> str:
    return os.getenv(ENV_PREFIX + name, default)


REL_TOL = float(_env("REL_TOL", "1e-6"))
ABS_TOL = float(_env("ABS_TOL", "1e-10"))
TAIL_CUTOFF = float(_env("TAIL_CUTOFF", "1e-10"))
MAX_SUBDIVISIONS = int(_env("MAX_SUBDIVISIONS", "2000"))

# Gil-Pelaez t-range
T_MAX = float(_env("T_MAX", "200"))

MU = int(_env("MU", "25"))
MU_CAP = 60

# Interference window: floor factor (in units of 1/sqrt(pi*lambda)) and the
# fraction of expected NLoS interference allowed beyond the window.
WINDOW_FACTOR = float(_env("WINDOW_FACTOR", "10"))
TAIL_FRACTION = float(_env("TAIL_FRACTION", "1e-3"))

WORKERS = int(_env("WORKERS", str(min(4, os.cpu_count() or 1))))
# realizations per RNG block; part of the reproducibility key of a simulation
BLOCK_SIZE = int(_env("BLOCK_SIZE", "256"))


def env_overrides(keys: list[str]) -> dict[str, str]:
    """Collect METADIST_<KEY> variables for the given config keys."""
    found = {}
    for key in keys:
        value = os.getenv(ENV_PREFIX + key.upper())
        if value is not None:
            found[key] = value
    return found


def validate_tolerance(value: float, name: str) -> None:
    """Fail fast on a non-positive tolerance."""
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")
