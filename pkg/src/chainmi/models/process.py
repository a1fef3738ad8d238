"""Models for processes, selection rules and learning problems."""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from chainmi.core.config import DEFAULTS
from chainmi.core.exceptions import InvalidProcessSpec, KernelInvalid, OutOfRange
from chainmi.models.metric import FiniteMetricSpace
from chainmi.models.series import BoundReport

FINITE = "finite"
INDEPENDENT = "independent"
CIRCLE = "circle"


@dataclass(frozen=True, eq=False)
class CanonicalProcessSpec:
    """Canonical Gaussian process X_t = <t, G> over a point set in R^n.

    `independent` stands for the identity point set (X = G) and `circle`
    for the continuous unit circle t = (sin phi, cos phi).
    """

    kind: str
    points: Optional[np.ndarray] = None
    n: int = 0

    @classmethod
    def finite(cls, points: Any) -> "CanonicalProcessSpec":
        array = np.array(points, dtype=float)
        if array.ndim == 1:
            array = array[:, None]
        if array.ndim != 2 or array.shape[0] == 0 or not np.all(np.isfinite(array)):
            raise InvalidProcessSpec(f"points must be a non-empty finite matrix, got shape {array.shape}")
        array.setflags(write=False)
        return cls(kind=FINITE, points=array, n=array.shape[1])

    @classmethod
    def independent(cls, n: int) -> "CanonicalProcessSpec":
        if n < 1:
            raise InvalidProcessSpec(f"independent process needs n >= 1, got {n}")
        return cls(kind=INDEPENDENT, n=n)

    @classmethod
    def circle(cls) -> "CanonicalProcessSpec":
        return cls(kind=CIRCLE, n=2)

    @property
    def cardinality(self) -> int:
        """|T| for finite kinds; 0 marks the continuous circle."""
        if self.kind == FINITE:
            return self.points.shape[0]
        if self.kind == INDEPENDENT:
            return self.n
        return 0

    def points_array(self) -> np.ndarray:
        if self.kind == FINITE:
            return self.points
        if self.kind == INDEPENDENT:
            return np.eye(self.n)
        raise InvalidProcessSpec("the circle process has no finite point set")


ARGMAX = "argmax"
NOISY_CIRCLE_ARGMAX = "noisy_circle_argmax"
TWO_BLOCK = "two_block"
CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class SelectionRule:
    """How W is chosen from a realization.

    custom: table[q, w] = P(W = w | argmax index Q = q).
    """

    kind: str
    epsilon: float = 0.0
    n: int = 0
    m: int = 0
    delta: float = 0.0
    table: Optional[np.ndarray] = None

    @classmethod
    def argmax(cls) -> "SelectionRule":
        return cls(kind=ARGMAX)

    @classmethod
    def noisy_circle_argmax(cls, epsilon: float) -> "SelectionRule":
        if not 0.0 <= epsilon <= 1.0:
            raise OutOfRange("epsilon", epsilon, "[0, 1]")
        return cls(kind=NOISY_CIRCLE_ARGMAX, epsilon=float(epsilon))

    @classmethod
    def two_block(cls, n: int, m: int, delta: float) -> "SelectionRule":
        if not 1 <= m < n:
            raise InvalidProcessSpec(f"two_block needs 1 <= m < n, got m={m}, n={n}")
        if not 0.0 <= delta <= 1.0:
            raise OutOfRange("delta", delta, "[0, 1]")
        return cls(kind=TWO_BLOCK, n=n, m=m, delta=float(delta))

    @classmethod
    def custom(cls, table: Any) -> "SelectionRule":
        array = np.array(table, dtype=float)
        if array.ndim != 2 or array.size == 0:
            raise InvalidProcessSpec(f"custom table must be a non-empty matrix, got shape {array.shape}")
        if np.any(array < 0) or not np.allclose(array.sum(axis=1), 1.0, atol=1e-9):
            raise InvalidProcessSpec("custom table rows must be probability vectors")
        array.setflags(write=False)
        return cls(kind=CUSTOM, table=array)

    @classmethod
    def independent(cls, n: int, probabilities: Optional[Any] = None) -> "SelectionRule":
        """Rule ignoring the realization: every row of the table is the same law."""
        row = np.full(n, 1.0 / n) if probabilities is None else np.asarray(probabilities, dtype=float)
        return cls.custom(np.tile(row, (n, 1)))

    def __str__(self) -> str:
        if self.kind == NOISY_CIRCLE_ARGMAX:
            return f"noisy_circle_argmax(eps={self.epsilon:g})"
        if self.kind == TWO_BLOCK:
            return f"two_block(n={self.n}, m={self.m}, delta={self.delta:g})"
        return self.kind


@dataclass(frozen=True)
class MCEstimate:
    """Monte-Carlo mean with its standard error."""

    estimate: float
    stderr: float
    samples: int

    def within(self, target: float, sigmas: float = 3.0) -> bool:
        return abs(self.estimate - target) <= sigmas * self.stderr

    def at_most(self, bound: float, sigmas: float = 3.0) -> bool:
        return self.estimate <= bound + sigmas * self.stderr

    def to_dict(self) -> Dict[str, Any]:
        return {"estimate": self.estimate, "stderr": self.stderr, "samples": self.samples}

    def __str__(self) -> str:
        return f"{self.estimate:.6f} ± {self.stderr:.6f}"


@dataclass(frozen=True, eq=False)
class LearningProblem:
    """Finite learning problem.

    losses[w, z] is the loss of hypothesis w on example z. kernel rows are
    indexed by training sets in lexicographic order of Z^n (algorithm
    "table") or hold a single row ignoring S (algorithm "constant").
    """

    example_probs: np.ndarray
    losses: np.ndarray
    sample_size: int
    algorithm: str = "erm"
    kernel: Optional[np.ndarray] = None
    beta: float = 1.0

    def __post_init__(self) -> None:
        probs = np.asarray(self.example_probs, dtype=float)
        losses = np.asarray(self.losses, dtype=float)
        if probs.ndim != 1 or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise KernelInvalid(f"example probabilities must be a probability vector, got {probs}")
        if losses.ndim != 2 or losses.shape[1] != probs.shape[0]:
            raise KernelInvalid(f"loss table must be (hypotheses x {probs.shape[0]}), got {losses.shape}")
        if np.any(losses < 0) or not np.all(np.isfinite(losses)):
            raise KernelInvalid("losses must be finite and >= 0")
        if self.sample_size < 1:
            raise KernelInvalid(f"sample size must be >= 1, got {self.sample_size}")
        if self.algorithm not in ("table", "erm", "constant", "gibbs"):
            raise KernelInvalid(f"unknown algorithm {self.algorithm!r}")
        kernel = None
        if self.algorithm in ("table", "constant"):
            if self.kernel is None:
                raise KernelInvalid(f"{self.algorithm} algorithm needs kernel rows")
            kernel = np.atleast_2d(np.asarray(self.kernel, dtype=float))
            expected_rows = self.training_set_count if self.algorithm == "table" else 1
            if kernel.shape != (expected_rows, losses.shape[0]):
                raise KernelInvalid(
                    f"kernel must be ({expected_rows} x {losses.shape[0]}), got {kernel.shape}"
                )
            if np.any(kernel < 0) or not np.allclose(kernel.sum(axis=1), 1.0, atol=1e-9):
                raise KernelInvalid("kernel rows must sum to 1")
            kernel.setflags(write=False)
        if self.algorithm == "gibbs" and (self.beta < 0 or not math.isfinite(self.beta)):
            raise KernelInvalid(f"gibbs needs a finite beta >= 0, got {self.beta}")
        probs.setflags(write=False)
        losses.setflags(write=False)
        object.__setattr__(self, "example_probs", probs)
        object.__setattr__(self, "losses", losses)
        object.__setattr__(self, "kernel", kernel)

    @property
    def hypothesis_count(self) -> int:
        return self.losses.shape[0]

    @property
    def example_count(self) -> int:
        return self.losses.shape[1]

    @property
    def training_set_count(self) -> int:
        return self.example_count ** self.sample_size

    @property
    def enumerable(self) -> bool:
        return self.training_set_count <= DEFAULTS.enumeration_cap


@dataclass(frozen=True)
class Skipped:
    """A bound that was not computed, with the reason."""

    reason: str

    def to_dict(self) -> Dict[str, Any]:
        return {"skipped": True, "reason": self.reason}


@dataclass(frozen=True, eq=False)
class LearningReport:
    """Everything the learning adapter computes for one problem."""

    space: Optional[FiniteMetricSpace]
    mi_series: Any
    gen: float
    gen_stderr: float
    gen_abs: float
    gen_abs_stderr: float
    bound_a: BoundReport
    bound_b: Any
    mi_total: float
    mi_bound: float
    used_monte_carlo: bool
    hierarchy_depth: Optional[int] = None
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def bound_b_skipped(self) -> bool:
        return isinstance(self.bound_b, Skipped)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gen": self.gen,
            "gen_stderr": self.gen_stderr,
            "gen_abs": self.gen_abs,
            "gen_abs_stderr": self.gen_abs_stderr,
            "bound_a": self.bound_a.to_dict(),
            "bound_b": self.bound_b.to_dict(),
            "mi_total": self.mi_total,
            "mi_bound": self.mi_bound,
            "used_monte_carlo": self.used_monte_carlo,
            "hierarchy_depth": self.hierarchy_depth,
            "mi_series": list(self.mi_series.values) if self.mi_series is not None else [],
        }
