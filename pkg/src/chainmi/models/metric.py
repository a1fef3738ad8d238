"""Models for finite metric spaces, nets and partition hierarchies."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Validated finite (pseudo)metric space.

    Build instances through `metric_core.validate_metric` or
    `metric_core.space_from_points`; the constructor does not check the
    metric axioms.
    """

    dist: np.ndarray
    ids: Tuple[str, ...]
    coordinates: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.dist.setflags(write=False)
        if self.coordinates is not None:
            self.coordinates.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.ids)

    @cached_property
    def diameter(self) -> float:
        return float(self.dist.max()) if self.size else 0.0

    @cached_property
    def min_positive_distance(self) -> float:
        """Smallest nonzero distance, or inf when every distance is zero."""
        positive = self.dist[self.dist > 0]
        return float(positive.min()) if positive.size else float("inf")

    def index_of(self, point_id: str) -> int:
        return self.ids.index(point_id)

    def __str__(self) -> str:
        return f"FiniteMetricSpace(|T|={self.size}, diam={self.diameter:.6g})"


@dataclass(frozen=True)
class EpsilonNet:
    """Net centers with the projection of every point (indices into the space)."""

    scale: float
    centers: Tuple[int, ...]
    projection: Tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.centers)


@dataclass(frozen=True)
class PartitionLevel:
    """One level of a partition hierarchy.

    labels[t] is the cell of point t, centers[c] the covering center of
    cell c and parents[c] the cell of the previous level containing c
    (empty on the coarsest level).
    """

    k: int
    labels: Tuple[int, ...]
    centers: Tuple[int, ...]
    parents: Tuple[int, ...] = ()

    @property
    def scale(self) -> float:
        return 2.0 ** (-self.k)

    @property
    def cell_count(self) -> int:
        return len(self.centers)

    def members(self, cell: int) -> Tuple[int, ...]:
        return tuple(t for t, label in enumerate(self.labels) if label == cell)


@dataclass(frozen=True)
class PartitionHierarchy:
    """Increasing sequence of 2^-k partitions from k_min to k_max."""

    k_min: int
    levels: Tuple[PartitionLevel, ...]
    _by_k: Dict[int, PartitionLevel] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_k", {level.k: level for level in self.levels})

    @property
    def k_max(self) -> int:
        return self.levels[-1].k

    def level(self, k: int) -> PartitionLevel:
        return self._by_k[k]

    def cell(self, t: int, k: int) -> int:
        """[t]_k as a cell index of level k."""
        return self._by_k[k].labels[t]

    def refinement(self, k: int, cell: int) -> int:
        """Cell of level k containing `cell` of level k + 1."""
        return self._by_k[k + 1].parents[cell]

    def cell_counts(self) -> Dict[int, int]:
        return {level.k: level.cell_count for level in self.levels}
