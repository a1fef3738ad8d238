"""Models for joint distributions and psi envelopes."""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from chainmi.core.config import DEFAULTS
from chainmi.core.exceptions import EnvelopeError, NotNormalized, SupportMismatch


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Finite probability table P(w, x); rows are w outcomes, columns x outcomes."""

    table: np.ndarray

    def __post_init__(self) -> None:
        table = np.array(self.table, dtype=float)
        if table.ndim != 2 or table.size == 0:
            raise SupportMismatch(f"joint table must be a non-empty matrix, got shape {table.shape}")
        total = float(table.sum())
        if not np.all(np.isfinite(table)) or np.any(table < 0) or abs(total - 1.0) > DEFAULTS.prob_tol:
            raise NotNormalized(total)
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "JointDistribution":
        """Empirical joint from a matrix of co-occurrence counts."""
        counts = np.asarray(counts, dtype=float)
        total = counts.sum()
        if total <= 0:
            raise NotNormalized(float(total))
        return cls(counts / total)

    @classmethod
    def from_marginal_and_kernel(cls, marginal: Sequence[float], kernel: np.ndarray) -> "JointDistribution":
        """Joint of (W, X) from P(X) and the row-stochastic kernel P(W | X).

        kernel[x, w] is P(W = w | X = x); the result is indexed (w, x).
        """
        marginal = np.asarray(marginal, dtype=float)
        kernel = np.asarray(kernel, dtype=float)
        joint = (marginal[:, None] * kernel).T
        return cls(joint / joint.sum())

    @property
    def shape(self) -> Tuple[int, int]:
        return self.table.shape

    def marginal_w(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def marginal_x(self) -> np.ndarray:
        return self.table.sum(axis=0)

    def coarsen_w(self, label_map: Sequence[int]) -> "JointDistribution":
        """Joint of (g(W), X) for the label map g given as label_map[w]."""
        label_map = np.asarray(label_map, dtype=int)
        if label_map.shape != (self.table.shape[0],):
            raise SupportMismatch(
                f"label map has {label_map.shape[0]} entries for {self.table.shape[0]} w outcomes"
            )
        coarse = np.zeros((int(label_map.max()) + 1, self.table.shape[1]))
        np.add.at(coarse, label_map, self.table)
        # Renormalize away the accumulated rounding
        return JointDistribution(coarse / coarse.sum())


PsiFunction = Callable[[float], float]


@dataclass(frozen=True)
class PsiEnvelope:
    """Convex tail envelope psi with psi(0) = 0.

    Subgaussian envelopes carry only `sigma2` and use closed forms; general
    envelopes carry an evaluator and the cap `lambda_max` on the dual search.
    """

    kind: str
    sigma2: Optional[float] = None
    evaluator: Optional[PsiFunction] = None
    lambda_max: float = DEFAULTS.lambda_max
    description: str = ""

    @classmethod
    def subgaussian(cls, sigma2: float = 1.0) -> "PsiEnvelope":
        if not sigma2 > 0 or not math.isfinite(sigma2):
            raise EnvelopeError(f"variance proxy must be positive and finite, got {sigma2}")
        return cls(kind="subgaussian", sigma2=float(sigma2), description=f"subgaussian(sigma2={sigma2:g})")

    @classmethod
    def general(
        cls,
        evaluator: PsiFunction,
        lambda_max: float = DEFAULTS.lambda_max,
        description: str = "general",
        check_grid: int = 64,
    ) -> "PsiEnvelope":
        """Envelope from an evaluator, checked for psi(0) = 0 and midpoint convexity.

        Args:
            evaluator: lambda -> psi(lambda) on [0, lambda_max]
            lambda_max: Cap on the dual search
            description: Label used in reports
            check_grid: Number of grid points of the convexity check
        """
        if abs(evaluator(0.0)) > 1e-12:
            raise EnvelopeError(f"psi(0) must be 0, got {evaluator(0.0)}")
        # Log-spaced grid covers both the origin and the far range
        grid = np.concatenate(([0.0], np.geomspace(1e-6, lambda_max, check_grid)))
        for a, b in zip(grid[:-1], grid[1:]):
            mid = 0.5 * (a + b)
            lhs = evaluator(mid)
            rhs = 0.5 * (evaluator(a) + evaluator(b))
            if lhs > rhs + 1e-9 * max(1.0, abs(rhs)):
                raise EnvelopeError(f"psi is not convex between lambda={a:g} and lambda={b:g}")
        return cls(kind="general", evaluator=evaluator, lambda_max=lambda_max, description=description)

    @classmethod
    def from_grid(cls, points: Sequence[Tuple[float, float]], lambda_max: float = DEFAULTS.lambda_max) -> "PsiEnvelope":
        """Piecewise-linear envelope through (lambda, psi) points.

        (0, 0) is added when missing; beyond the last point psi continues
        with the last slope.
        """
        grid = sorted((float(lam), float(value)) for lam, value in points)
        if grid[0][0] < 0:
            raise EnvelopeError(f"grid lambda must be >= 0, got {grid[0][0]}")
        if grid[0][0] > 0:
            grid.insert(0, (0.0, 0.0))
        lams = np.array([lam for lam, _ in grid])
        values = np.array([value for _, value in grid])
        if values[0] != 0:
            raise EnvelopeError(f"psi(0) must be 0, got {values[0]}")
        if np.any(np.diff(lams) <= 0):
            raise EnvelopeError("grid lambdas must be distinct")
        slopes = np.diff(values) / np.diff(lams)
        if len(slopes) == 0:
            raise EnvelopeError("grid needs at least one point with lambda > 0")
        if slopes[0] < 0 or np.any(np.diff(slopes) < -1e-12):
            raise EnvelopeError("grid values are not convex and nondecreasing")

        last_lam, last_value, last_slope = lams[-1], values[-1], slopes[-1]

        def evaluate(lam: float) -> float:
            if lam <= last_lam:
                return float(np.interp(lam, lams, values))
            return float(last_value + last_slope * (lam - last_lam))

        return cls(kind="general", evaluator=evaluate, lambda_max=lambda_max, description=f"grid({len(grid)} points)")

    @property
    def is_subgaussian(self) -> bool:
        return self.kind == "subgaussian"

    def __call__(self, lam: float) -> float:
        """psi(lambda)."""
        if self.is_subgaussian:
            return 0.5 * lam * lam * self.sigma2
        return float(self.evaluator(lam))

    def __str__(self) -> str:
        return self.description or self.kind
