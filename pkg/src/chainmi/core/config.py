"""Configuration for chainmi runs."""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, List, Literal, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from chainmi.core.exceptions import ConfigError


@dataclass(frozen=True)
class Defaults:
    """Numeric defaults shared by the services."""

    # Slack on triangle and symmetry checks
    tol_metric: float = 1e-9

    # Largest space for exhaustive covering search
    exact_cover_cap: int = 20

    # Legendre dual search
    lambda_max: float = 1e6
    bracket_growth: float = 2.0
    dual_tol: float = 1e-10
    bracket_steps: int = 200

    # Series truncation
    tail_tolerance: float = 1e-6
    max_tail_levels: int = 4096
    kmax: int = 40

    # Learning adapter: largest |Z|^n enumerated exactly
    enumeration_cap: int = 1_000_000

    # Monte Carlo; changing the batch size changes the sample streams
    mc_batch_size: int = 10_000
    mc_samples: int = 100_000
    mc_workers: int = 1

    # Normalization slack for probability tables
    prob_tol: float = 1e-12


DEFAULTS = Defaults()

CIRCLE_EPSILONS: Tuple[float, ...] = (1 / 20, 1 / 30, 1 / 40, 1 / 50, 1 / 100, 1 / 200, 1 / 400)


# --- config file schema -----------------------------------------------------


class EnvelopeConfig(BaseModel):
    """psi envelope: {kind: subgaussian, sigma2} or {kind: general, grid}."""

    kind: Literal["subgaussian", "general"] = "subgaussian"
    sigma2: float = Field(1.0, gt=0)
    grid: Optional[List[Tuple[float, float]]] = None

    @model_validator(mode="after")
    def _grid_for_general(self) -> "EnvelopeConfig":
        if self.kind == "general" and not self.grid:
            raise ValueError("general envelope needs a non-empty grid of (lambda, psi) pairs")
        return self


class SpaceConfig(BaseModel):
    """Exactly one source for the metric space."""

    distance_csv: Optional[Path] = None
    coordinates: Optional[List[List[float]]] = None
    circle_points: Optional[int] = Field(None, ge=1)
    k_min: Optional[int] = None
    covering_mode: Literal["greedy", "exact"] = "greedy"

    @model_validator(mode="after")
    def _one_source(self) -> "SpaceConfig":
        sources = [self.distance_csv, self.coordinates, self.circle_points]
        if sum(source is not None for source in sources) != 1:
            raise ValueError("give exactly one of distance_csv, coordinates, circle_points")
        return self


class TailCapConfig(BaseModel):
    """Linear cap slope*k + intercept on the values beyond the last level."""

    slope: float = Field(0.0, ge=0)
    intercept: float = 0.0
    kind: Literal["linear", "log_cardinality"] = "linear"


class SeriesConfig(BaseModel):
    """Per-level values starting at k_start, inline or from a CSV (k,value rows)."""

    k_start: Optional[int] = None
    values: Optional[List[float]] = None
    csv: Optional[Path] = None
    cap: Optional[TailCapConfig] = None
    tail_mode: Optional[Literal["analytic_cap", "zero_after_last"]] = None

    @model_validator(mode="after")
    def _one_source(self) -> "SeriesConfig":
        if (self.values is None) == (self.csv is None):
            raise ValueError("give exactly one of values, csv")
        if self.values is not None and self.k_start is None:
            raise ValueError("inline values need k_start")
        return self


class MaximalConfig(BaseModel):
    cardinality: int = Field(..., ge=1)
    absolute: bool = False


class MIConfig(BaseModel):
    mi: Union[float, Literal["inf"]]
    variant: Literal["expectation", "absolute_expectation", "expected_absolute"] = "expectation"

    @field_validator("mi")
    @classmethod
    def _nonnegative(cls, value: Union[float, str]) -> Union[float, str]:
        if value != "inf" and value < 0:
            raise ValueError("mi must be >= 0")
        return value


class ChainedConfig(BaseModel):
    series: SeriesConfig
    variant: Literal["expectation", "absolute"] = "expectation"


class SmallSubsetConfig(BaseModel):
    alpha: float = Field(..., ge=0, le=1)
    subset: List[int]
    replace_t2_with_full: bool = False


class LipschitzConfig(BaseModel):
    expected_lipschitz: float = Field(..., ge=0)
    candidates: List[Tuple[float, float]] = Field(..., min_length=1)


class TailConfig(BaseModel):
    mode: Literal["sup", "selected"]
    cardinality: int = Field(..., ge=1)
    u: float = Field(..., ge=0)
    mi: Optional[float] = Field(None, ge=0)

    @model_validator(mode="after")
    def _mi_for_selected(self) -> "TailConfig":
        if self.mode == "selected" and self.mi is None:
            raise ValueError("selected mode needs mi")
        return self


class ProblemConfig(BaseModel):
    """Finite learning problem: example law, loss table and algorithm."""

    example_probs: List[float] = Field(..., min_length=1)
    losses: List[List[float]] = Field(..., min_length=1)
    sample_size: int = Field(..., ge=1)
    algorithm: Literal["table", "erm", "constant", "gibbs"] = "erm"
    kernel: Optional[List[List[float]]] = None
    beta: Optional[float] = Field(None, ge=0)

    @model_validator(mode="after")
    def _algorithm_fields(self) -> "ProblemConfig":
        if self.algorithm in ("table", "constant") and self.kernel is None:
            raise ValueError(f"{self.algorithm} algorithm needs kernel rows")
        if self.algorithm == "gibbs" and self.beta is None:
            raise ValueError("gibbs algorithm needs beta")
        return self


BoundName = Literal["maximal", "mi", "dudley", "chained", "small_subset", "lipschitz", "tail", "learning"]


class BoundsBlock(BaseModel):
    """Input of the `bounds` command."""

    run: List[BoundName] = Field(..., min_length=1)
    envelope: EnvelopeConfig = EnvelopeConfig()
    space: Optional[SpaceConfig] = None
    maximal: Optional[MaximalConfig] = None
    mi: Optional[MIConfig] = None
    chained: Optional[ChainedConfig] = None
    small_subset: Optional[SmallSubsetConfig] = None
    lipschitz: Optional[LipschitzConfig] = None
    tail: Optional[TailConfig] = None
    learning: Optional[ProblemConfig] = None
    # Compare the Dudley value against a Monte-Carlo sup estimate (coordinates only)
    oracle: bool = False

    @model_validator(mode="after")
    def _blocks_present(self) -> "BoundsBlock":
        for name in self.run:
            if name in ("dudley", "small_subset") and self.space is None:
                raise ValueError(f"{name} needs a space block")
            if name not in ("dudley",) and getattr(self, name) is None:
                raise ValueError(f"{name} is listed in run but has no {name} block")
        return self


class ProcessConfig(BaseModel):
    kind: Literal["finite", "independent", "circle"]
    points: Optional[List[List[float]]] = None
    n: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _kind_fields(self) -> "ProcessConfig":
        if self.kind == "finite" and not self.points:
            raise ValueError("finite process needs points")
        if self.kind == "independent" and self.n is None:
            raise ValueError("independent process needs n")
        return self


class SelectorConfig(BaseModel):
    kind: Literal["argmax", "noisy_circle_argmax", "two_block", "custom", "independent"]
    epsilon: Optional[float] = Field(None, ge=0, le=1)
    m: Optional[int] = Field(None, ge=1)
    delta: Optional[float] = Field(None, ge=0, le=1)
    table: Optional[List[List[float]]] = None
    probabilities: Optional[List[float]] = None

    @model_validator(mode="after")
    def _kind_fields(self) -> "SelectorConfig":
        required = {
            "noisy_circle_argmax": ("epsilon",),
            "two_block": ("m", "delta"),
            "custom": ("table",),
        }.get(self.kind, ())
        for name in required:
            if getattr(self, name) is None:
                raise ValueError(f"{self.kind} selector needs {name}")
        return self


class StatisticConfig(BaseModel):
    kind: Literal["selected_mean", "sup_mean", "selected_abs_mean", "tail_freq"]
    # Additive excess x over sqrt(2 sigma^2 I) (selected) or over psi*^-1(log|T|) (sup)
    x: float = Field(0.0, ge=0)
    level: int = Field(3, ge=-1)
    target: Literal["selected", "sup"] = "selected"


class SimulateBlock(BaseModel):
    """Input of the `simulate` command."""

    process: ProcessConfig
    selector: SelectorConfig
    statistic: StatisticConfig = StatisticConfig(kind="selected_mean")
    stream: bool = True


class Example1Block(BaseModel):
    epsilons: List[float] = Field(default_factory=lambda: list(CIRCLE_EPSILONS))
    mc: bool = True

    @field_validator("epsilons")
    @classmethod
    def _unit_interval(cls, values: List[float]) -> List[float]:
        for value in values:
            if not 0 <= value <= 1:
                raise ValueError(f"epsilon {value} outside [0, 1]")
        return values


class RunConfig(BaseModel):
    """Whole run configuration; command blocks are optional."""

    seed: int = Field(0, ge=0, lt=2**64)
    samples: int = Field(DEFAULTS.mc_samples, ge=100)
    tol: float = Field(DEFAULTS.tail_tolerance, gt=0)
    kmax: int = Field(DEFAULTS.kmax, ge=-1)
    workers: int = Field(DEFAULTS.mc_workers, ge=1)
    out: Path = Path("out")
    format: Literal["json", "csv"] = "json"
    example1: Optional[Example1Block] = None
    bounds: Optional[BoundsBlock] = None
    simulate: Optional[SimulateBlock] = None

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Return a copy with CLI flag values applied (None values are ignored)."""
        data = self.model_dump()
        data.update({key: value for key, value in overrides.items() if value is not None})
        try:
            return RunConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigError(_first_error(e)) from e


def _first_error(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first["loc"])
    return f"{location}: {first['msg']}"


def _line_of(text: str, loc: Sequence[Any]) -> Optional[int]:
    """Best-effort line number of the key path `loc` in a JSON document."""
    position = 0
    found = False
    for part in loc:
        if not isinstance(part, str):
            continue
        index = text.find(f'"{part}"', position)
        if index < 0:
            break
        position = index
        found = True
    if not found:
        return None
    return text.count("\n", 0, position) + 1


def load_run_config(path: Path) -> RunConfig:
    """Read and validate a JSON run configuration.

    Args:
        path: Path to the config file

    Returns:
        Validated RunConfig; relative CSV paths are resolved against the config's directory

    Raises:
        ConfigError: On unreadable files, JSON syntax errors or schema violations
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg} (column {e.colno})", line=e.lineno) from e

    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(_first_error(e), line=_line_of(text, first["loc"])) from e

    return _resolve_paths(config, path.parent)


def _resolve_paths(config: RunConfig, base: Path) -> RunConfig:
    bounds = config.bounds
    if bounds is None:
        return config
    if bounds.space is not None and bounds.space.distance_csv is not None:
        if not bounds.space.distance_csv.is_absolute():
            bounds.space.distance_csv = base / bounds.space.distance_csv
    if bounds.chained is not None and bounds.chained.series.csv is not None:
        if not bounds.chained.series.csv.is_absolute():
            bounds.chained.series.csv = base / bounds.chained.series.csv
    return config
