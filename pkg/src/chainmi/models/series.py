"""Models for level series and bound reports."""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from chainmi.core.exceptions import NegativeValue

ANALYTIC_CAP = "analytic_cap"
ZERO_AFTER_LAST = "zero_after_last"


@dataclass(frozen=True)
class TailCap:
    """Linear cap value(k) <= slope * k + intercept for levels past the last entry.

    kind is informational: "linear" for information caps such as
    eps * (k + 2) * log 2, "log_cardinality" for caps such as log 2^(k+2).
    """

    slope: float
    intercept: float
    kind: str = "linear"

    def __post_init__(self) -> None:
        if self.slope < 0 or not math.isfinite(self.slope) or not math.isfinite(self.intercept):
            raise ValueError(f"tail cap needs a finite slope >= 0, got slope={self.slope}")

    def value(self, k: int) -> float:
        return max(0.0, self.slope * k + self.intercept)

    @classmethod
    def constant(cls, value: float) -> "TailCap":
        return cls(slope=0.0, intercept=value, kind="log_cardinality")

    @classmethod
    def combine(cls, alpha: float, first: "TailCap", second: "TailCap", offset: float) -> "TailCap":
        """Cap of alpha * v1 + (1 - alpha) * v2 + offset."""
        return cls(
            slope=alpha * first.slope + (1 - alpha) * second.slope,
            intercept=alpha * first.intercept + (1 - alpha) * second.intercept + offset,
            kind=first.kind if first.kind == second.kind else "linear",
        )


@dataclass(frozen=True)
class LevelSeries:
    """Per-level values (log N_k or I_k, in nats) for k = k_start, k_start + 1, ..."""

    k_start: int
    values: Tuple[float, ...]
    tail_mode: str = ZERO_AFTER_LAST
    cap: Optional[TailCap] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        for offset, value in enumerate(self.values):
            if not math.isfinite(value) or value < 0:
                raise NegativeValue(self.k_start + offset, value)
        if self.tail_mode not in (ANALYTIC_CAP, ZERO_AFTER_LAST):
            raise ValueError(f"unknown tail mode {self.tail_mode!r}")

    @classmethod
    def with_cap(cls, k_start: int, values: List[float], cap: Optional[TailCap]) -> "LevelSeries":
        return cls(k_start=k_start, values=tuple(values), tail_mode=ANALYTIC_CAP, cap=cap)

    @classmethod
    def zero_after_last(cls, k_start: int, values: List[float]) -> "LevelSeries":
        return cls(k_start=k_start, values=tuple(values), tail_mode=ZERO_AFTER_LAST)

    @property
    def k_end(self) -> int:
        """Last supplied level (k_start - 1 when empty)."""
        return self.k_start + len(self.values) - 1

    def entries(self) -> List[Tuple[int, float]]:
        return [(self.k_start + offset, value) for offset, value in enumerate(self.values)]

    def value_at(self, k: int) -> float:
        """Supplied value, else the cap value (analytic mode) or 0."""
        if self.k_start <= k <= self.k_end:
            return self.values[k - self.k_start]
        if k < self.k_start:
            return 0.0
        if self.tail_mode == ANALYTIC_CAP and self.cap is not None:
            return self.cap.value(k)
        return 0.0


def _json_number(value: float) -> Any:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


@dataclass(frozen=True)
class BoundReport:
    """Result of a series bound: value, per-level terms and truncation diagnostics."""

    bound_value: float
    formula_id: str
    formula: str
    per_level_terms: Tuple[Tuple[int, float], ...] = ()
    truncation_k: Optional[int] = None
    tail_estimate: float = 0.0
    parameters: Dict[str, Any] = field(default_factory=dict)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.bound_value)

    @property
    def terms_sum(self) -> float:
        return math.fsum(term for _, term in self.per_level_terms)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bound_value": _json_number(self.bound_value),
            "formula_id": self.formula_id,
            "formula": self.formula,
            "is_infinite": self.is_infinite,
            "per_level_terms": [{"k": k, "term": term} for k, term in self.per_level_terms],
            "truncation_k": self.truncation_k,
            "tail_estimate": self.tail_estimate,
            "parameters": {key: _json_number(v) if isinstance(v, float) else v for key, v in self.parameters.items()},
        }

    def to_rows(self) -> List[Dict[str, Any]]:
        """CSV rows: one per level, then a summary row."""
        rows: List[Dict[str, Any]] = [
            {"row": "level", "k": k, "term": repr(term), "formula_id": self.formula_id}
            for k, term in self.per_level_terms
        ]
        rows.append(
            {
                "row": "summary",
                "k": self.truncation_k if self.truncation_k is not None else "",
                "term": repr(self.bound_value) if not self.is_infinite else "inf",
                "formula_id": self.formula_id,
                "tail_estimate": repr(self.tail_estimate),
            }
        )
        return rows

    def __str__(self) -> str:
        value = "inf" if self.is_infinite else f"{self.bound_value:.6f}"
        return f"{self.formula_id}={value}"


@dataclass(frozen=True)
class TailBoundResult:
    """Probability bound at a threshold; additive_threshold is the subgaussian form."""

    probability: float
    threshold: float
    mode: str
    additive_threshold: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "probability": self.probability,
            "threshold": _json_number(self.threshold),
            "mode": self.mode,
            "additive_threshold": self.additive_threshold,
        }


@dataclass(frozen=True)
class LipschitzResult:
    best_scale: float
    bound: float

    def to_dict(self) -> Dict[str, Any]:
        return {"best_scale": self.best_scale, "bound": _json_number(self.bound)}


@dataclass(frozen=True)
class ScalarBound:
    """Closed-form bound (maximal, mutual information) for reports."""

    value: float
    formula_id: str
    formula: str
    parameters: Dict[str, Any] = field(default_factory=dict)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bound_value": _json_number(self.value),
            "formula_id": self.formula_id,
            "formula": self.formula,
            "is_infinite": self.is_infinite,
            "parameters": {key: _json_number(v) if isinstance(v, float) else v for key, v in self.parameters.items()},
        }
