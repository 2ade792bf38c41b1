# src/experiments/config.py
"""Flat key=value experiment documents.

    experiment=bound
    theorem=uthm
    k=2
    n=20

Parsing goes through python-dotenv (``#`` comments, optional quotes) and the
typed ``ExperimentConfig``; errors carry the offending key and line.
"""
import io
import logging
import os
import re
from typing import Dict, List, Literal, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.errors import ConfigError

load_dotenv()
logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 100_000
DEFAULT_SEED = 20240101
DEFAULT_EPSILON = 1e-3
DEFAULT_THREADS = int(os.getenv("STEIN_PAIRS_THREADS", "1"))

Experiment = Literal["haar-check", "pair-audit", "bound", "stein-check", "w1-compare", "diag-example"]

REQUIRED_KEYS: Dict[str, List[str]] = {
    "haar-check": [],
    "pair-audit": ["model", "k", "n"],
    "bound": ["theorem"],
    "stein-check": ["g", "k"],
    "w1-compare": ["model", "k", "n"],
    "diag-example": ["a", "n"],
}

THEOREM_KEYS: Dict[str, List[str]] = {
    "discrete": ["sigma", "m1", "m2", "lam", "e_norm", "third_moment"],
    "cont": ["sigma", "f_norm"],
    "complex": ["gamma_norm", "lambda_norm"],
    "cont_complex": ["gamma_norm", "lambda_norm"],
    "basic": ["n", "k", "m1", "m2", "fourth_moment", "third_moment"],
    "ksphere": ["k", "n", "a"],
    "mix": ["k", "n"],
    "uthm": ["k", "n"],
}


class ExperimentConfig(BaseModel):
    """Resolved parameters of one experiment run; embedded verbatim in its report."""
    model_config = ConfigDict(extra="forbid")

    experiment: Experiment
    seed: int = Field(default=DEFAULT_SEED, ge=0)
    threads: int = Field(default=DEFAULT_THREADS, ge=1)
    samples: int = Field(default=DEFAULT_SAMPLES, ge=2)
    epsilon: float = Field(default=DEFAULT_EPSILON, gt=0.0, le=0.5)
    output: Optional[str] = None

    # sizes
    n: Optional[int] = Field(default=None, ge=1)
    k: Optional[int] = Field(default=None, ge=1)
    a: Optional[List[float]] = Field(
        default=None, description="Block sizes for diag-example, or Var(|Y|^2) bound (first entry) for ksphere."
    )

    # haar-check
    query: Optional[List[str]] = Field(default=None, description="Moment queries separated by ';'.")

    # pair-audit / w1-compare
    model: Optional[Literal["iid_sum", "spherical", "orthogonal_projection", "unitary_projection"]] = None
    law: Optional[str] = Field(default=None, description="iid law (gaussian|rademacher|uniform) or spherical law (sphere|gaussian).")
    family: Optional[str] = Field(default=None, description="Path to a family file; random orthonormal family if absent.")
    inner_draws: int = Field(default=8, ge=1)
    m: List[int] = Field(default=[2000], description="Cloud sizes for W1 comparisons, one table row each.")
    reps: int = Field(default=4, ge=3)
    directions: Optional[int] = Field(default=None, ge=1)

    # bound
    theorem: Optional[Literal["discrete", "cont", "cont_complex", "complex", "basic", "ksphere", "mix", "uthm"]] = None
    sigma: Optional[float] = None
    m1: Optional[float] = None
    m2: Optional[float] = None
    lam: Optional[float] = None
    e_norm: Optional[float] = None
    f_norm: Optional[float] = None
    gamma_norm: Optional[float] = None
    lambda_norm: Optional[float] = None
    third_moment: Optional[float] = None
    fourth_moment: Optional[float] = None

    # stein-check
    g: Optional[str] = None
    nodes: int = Field(default=64, ge=1)
    points: int = Field(default=20, ge=1)

    @field_validator("a", "m", mode="before")
    @classmethod
    def _split_numbers(cls, value):
        if isinstance(value, str):
            return [part.strip() for part in value.split(",") if part.strip()]
        return value

    @field_validator("query", mode="before")
    @classmethod
    def _split_queries(cls, value):
        if isinstance(value, str):
            return [part.strip() for part in value.split(";") if part.strip()]
        return value

    @field_validator("m")
    @classmethod
    def _check_sizes(cls, value):
        if not value or any(size < 2 for size in value):
            raise ValueError("every cloud size must be at least 2")
        return value

    def missing_keys(self) -> List[str]:
        required = list(REQUIRED_KEYS[self.experiment])
        if self.experiment == "bound" and self.theorem is not None:
            required += THEOREM_KEYS[self.theorem]
        return [key for key in required if getattr(self, key) is None]

    def to_record(self) -> Dict[str, object]:
        """Every field, defaults included, in declaration order."""
        return self.model_dump()


def _line_numbers(text: str) -> Dict[str, int]:
    lines: Dict[str, int] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        match = re.match(r"^\s*(?:export\s+)?([A-Za-z_][A-Za-z0-9_]*)\s*=", line)
        if match:
            lines.setdefault(match.group(1), number)
    return lines


def parse_config(text: str, overrides: Optional[Dict[str, object]] = None) -> ExperimentConfig:
    """Parses a key=value document; ``overrides`` (CLI flags) win over file values."""
    values = {key: value for key, value in dotenv_values(stream=io.StringIO(text)).items()}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    lines = _line_numbers(text)

    if not values.get("experiment"):
        raise ConfigError(f"Missing required keys: experiment (one of {sorted(REQUIRED_KEYS)})", key="experiment")
    for key, value in values.items():
        if value is None:
            raise ConfigError(f"Key '{key}' has no value", key=key, line=lines.get(key))
    try:
        cfg = ExperimentConfig.model_validate(values)
    except ValidationError as e:
        first = e.errors()[0]
        key = str(first["loc"][0]) if first["loc"] else None
        raise ConfigError(f"Invalid value for '{key}': {first['msg']}", key=key, line=lines.get(key))

    missing = cfg.missing_keys()
    if missing:
        raise ConfigError(f"Missing required keys for {cfg.experiment}: {', '.join(missing)}", key=missing[0])
    logger.debug(f"Parsed config for {cfg.experiment}: {cfg.to_record()}")
    return cfg


def load_config(path: str, overrides: Optional[Dict[str, object]] = None) -> ExperimentConfig:
    with open(path) as f:
        return parse_config(f.read(), overrides)
