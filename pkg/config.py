"""Configuration settings for the toolkit."""

from dataclasses import dataclass, field, replace
from enum import StrEnum
from pathlib import Path
from typing import Any, Dict, List, Optional

from errors import ConfigError

# Output configuration
DEFAULT_OUTPUT_DIR = "runs"
DB_NAME = "runs.db"
REPORTS_NAME = "reports.json"
SUMMARY_NAME = "summary.json"
SIMULATE_NAME = "simulate.csv"
PRICE_NAME = "prices.csv"
CONSTANTS_NAME = "constants.csv"

# Path counts for commands that run outside the experiment registry
DEFAULT_SIMULATE_PATHS = 1_000
DEFAULT_PRICE_PATHS = 100_000

# Master seed for `verify` when none is given
DEFAULT_SEED = 42

# Discretization defaults
DEFAULT_DT = 1e-3
LARGE_HORIZON_DT = 1e-2
ORIGIN_TOL = 1e-6
DEFAULT_MAX_STEPS = 200_000

# Monte Carlo work is split into chunks of this many paths, each with its own
# substream. Changing it changes every reported number.
CHUNK_PATHS = 2_000

# Kolmogorov-Smirnov critical constant at the 5% level and the inflation
# applied to every comparison involving discretized paths
KS_LEVEL_C = 1.36
KS_INFLATION = 1.5

# Standard errors allowed between an estimate and its analytic target
N_SE = 3.0

# Minimum effective sample size for length-biased experiments
MIN_ESS = 100.0

# Significant digits for floats written to JSON and CSV
FLOAT_DIGITS = 6


class Verdict(StrEnum):
    """Experiment verdicts."""

    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"

    @classmethod
    def values(cls):
        return [cls.PASS, cls.FAIL, cls.INCONCLUSIVE]


class ProcessKind(StrEnum):
    """Planar processes the simulate command can produce."""

    BM = "bm"
    STABLE = "stable"

    @classmethod
    def values(cls):
        return [cls.BM, cls.STABLE]


class ExitStatus:
    """Process exit codes of the command line."""

    OK = 0
    IO_ERROR = 1
    USAGE = 2
    INCONCLUSIVE = 3
    FAILED = 4


# Results database schema versions
class SchemaVersion:
    CURRENT = 1
    MIN_SUPPORTED = 1


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by every command.

    `n_paths` and `dt` are optional: when unset each experiment uses its own
    acceptance-scale defaults.
    """

    seed: int = DEFAULT_SEED
    n_paths: Optional[int] = None
    dt: Optional[float] = None
    parallelism: int = 1
    output_dir: Path = Path(DEFAULT_OUTPUT_DIR)
    suite: List[str] = field(default_factory=list)
    overrides: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.n_paths is not None and self.n_paths <= 0:
            raise ConfigError(f"paths must be positive, got {self.n_paths}")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.parallelism <= 0:
            raise ConfigError(f"parallelism must be positive, got {self.parallelism}")

    @property
    def db_path(self) -> Path:
        return self.output_dir / DB_NAME

    def merged(self, **flags: Any) -> "RunConfig":
        """Return a copy with every flag that is not None applied on top."""
        changes = {key: value for key, value in flags.items() if value is not None}
        if "overrides" in changes:
            changes["overrides"] = {**self.overrides, **changes["overrides"]}
        return replace(self, **changes)


# Keys accepted in a config file, mapped to RunConfig fields
_FILE_KEYS = {
    "seed": ("seed", int),
    "paths": ("n_paths", int),
    "dt": ("dt", float),
    "parallelism": ("parallelism", int),
    "out": ("output_dir", Path),
    "suite": ("suite", lambda text: [tag.strip() for tag in text.split(",") if tag.strip()]),
}

OVERRIDE_PREFIX = "param."


def parse_override(text: str) -> tuple[str, float]:
    """Parse a `name=value` parameter override."""
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise ConfigError(f"Override must look like name=value, got '{text}'")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise ConfigError(f"Override '{name.strip()}' needs a numeric value, got '{value.strip()}'")


def load_config(path: Path | str) -> RunConfig:
    """Load a flat `key = value` config file.

    Args:
        path: Path to the config file

    Returns:
        RunConfig built from the file

    Raises:
        ConfigError: On unknown keys, malformed lines or invalid values
    """
    values: Dict[str, Any] = {}
    overrides: Dict[str, float] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}")

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        if key.startswith(OVERRIDE_PREFIX):
            name, number = parse_override(f"{key[len(OVERRIDE_PREFIX):]}={value}")
            overrides[name] = number
            continue
        if key not in _FILE_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        field_name, convert = _FILE_KEYS[key]
        try:
            values[field_name] = convert(value)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: invalid value '{value}' for '{key}'")

    return RunConfig(**values, overrides=overrides)
