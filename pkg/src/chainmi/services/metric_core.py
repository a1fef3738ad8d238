"""Finite metric spaces: validation, epsilon-nets, covering numbers and dyadic hierarchies."""

import math
from itertools import combinations
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from chainmi.core.config import DEFAULTS
from chainmi.core.exceptions import (
    AsymmetricDistance,
    DegenerateSpace,
    ExactTooLarge,
    HierarchyInvariantError,
    MalformedMatrix,
    NegativeDistance,
    NonzeroSelfDistance,
    PhaseOutOfRange,
    ScaleMismatch,
    TriangleViolation,
)
from chainmi.core.logger import log_call, log_result
from chainmi.models.metric import EpsilonNet, FiniteMetricSpace, PartitionHierarchy, PartitionLevel
from chainmi.models.series import LevelSeries, TailCap

TWO_PI = 2.0 * math.pi


def validate_metric(
    dist_matrix: Sequence[Sequence[float]],
    tol_metric: float = DEFAULTS.tol_metric,
    ids: Optional[Sequence[str]] = None,
    coordinates: Optional[np.ndarray] = None,
) -> FiniteMetricSpace:
    """Check the (pseudo)metric axioms and wrap the matrix.

    Zero off-diagonal distances are allowed.

    Raises:
        MalformedMatrix: Not square, empty or non-finite
        NegativeDistance, NonzeroSelfDistance, AsymmetricDistance, TriangleViolation
    """
    dist = np.array(dist_matrix, dtype=float)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1] or dist.shape[0] == 0:
        raise MalformedMatrix(f"distance matrix must be square and non-empty, got shape {dist.shape}")
    log_call("metric_core", "validate_metric", points=dist.shape[0], tol_metric=tol_metric)
    if not np.all(np.isfinite(dist)):
        raise MalformedMatrix("distance matrix has non-finite entries")

    negative = np.argwhere(dist < 0)
    if negative.size:
        i, j = (int(v) for v in negative[0])
        raise NegativeDistance(i, j, float(dist[i, j]))

    diagonal = np.flatnonzero(np.diag(dist) != 0)
    if diagonal.size:
        i = int(diagonal[0])
        raise NonzeroSelfDistance(i, float(dist[i, i]))

    asymmetric = np.argwhere(np.abs(dist - dist.T) > tol_metric)
    if asymmetric.size:
        i, j = sorted(int(v) for v in asymmetric[0])
        raise AsymmetricDistance(i, j)

    # excess[i, j, k] = d(i, k) - d(i, j) - d(j, k); one middle point at a time keeps memory at O(n^2)
    n = dist.shape[0]
    for j in range(n):
        excess = dist - dist[:, j][:, None] - dist[j, :][None, :]
        violations = np.argwhere(excess > tol_metric)
        if violations.size:
            i, k = (int(v) for v in violations[0])
            raise TriangleViolation(i, j, k)

    if ids is None:
        ids = [str(i) for i in range(n)]
    elif len(ids) != n:
        raise MalformedMatrix(f"{len(ids)} ids for {n} points")
    space = FiniteMetricSpace(dist=dist, ids=tuple(ids), coordinates=coordinates)
    log_result("metric_core", "validate_metric", f"diameter={space.diameter}")
    return space


def space_from_points(coordinates: Sequence[Sequence[float]], ids: Optional[Sequence[str]] = None) -> FiniteMetricSpace:
    """Euclidean metric space over coordinate vectors."""
    points = np.array(coordinates, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.ndim != 2 or points.shape[0] == 0:
        raise MalformedMatrix(f"coordinates must be a non-empty matrix, got shape {points.shape}")
    dist = cdist(points, points)
    # cdist is symmetric up to rounding; make it exact
    dist = 0.5 * (dist + dist.T)
    np.fill_diagonal(dist, 0.0)
    return validate_metric(dist, ids=ids, coordinates=points)


def circle_points(m: int) -> np.ndarray:
    """m equally spaced unit-circle points (sin phi, cos phi) at phi = 2 pi j / m."""
    phases = TWO_PI * np.arange(m) / m
    return np.column_stack((np.sin(phases), np.cos(phases)))


def load_distance_csv(path: Path) -> np.ndarray:
    """Read a square, header-free, row-major distance matrix."""
    try:
        matrix = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    except (OSError, ValueError) as e:
        raise MalformedMatrix(f"cannot read distance matrix from {path}: {e}") from e
    return matrix


def restrict(space: FiniteMetricSpace, indices: Sequence[int]) -> FiniteMetricSpace:
    """Subspace on the given point indices (order preserved)."""
    index = np.asarray(sorted(set(int(i) for i in indices)), dtype=int)
    if index.size == 0 or index.min() < 0 or index.max() >= space.size:
        raise MalformedMatrix(f"subset indices must be a non-empty subset of 0..{space.size - 1}")
    coordinates = space.coordinates[index] if space.coordinates is not None else None
    return FiniteMetricSpace(
        dist=space.dist[np.ix_(index, index)].copy(),
        ids=tuple(space.ids[i] for i in index),
        coordinates=coordinates.copy() if coordinates is not None else None,
    )


def base_scale_index(space: FiniteMetricSpace, override: Optional[int] = None) -> int:
    """Largest k with 2^-(k-1) >= diameter, or a smaller accepted override.

    Raises:
        DegenerateSpace: Diameter is zero
        ScaleMismatch: Override is larger than the admissible index
    """
    diameter = space.diameter
    if diameter <= 0:
        raise DegenerateSpace()
    k = math.floor(-math.log2(diameter)) + 1
    # Guard the float log against off-by-one near powers of two
    while 2.0 ** (-(k - 1)) < diameter:
        k -= 1
    while 2.0 ** (-k) >= diameter:
        k += 1
    if override is not None:
        if 2.0 ** (-(override - 1)) < diameter:
            raise ScaleMismatch(override, diameter)
        return override
    return k


def greedy_epsilon_net(space: FiniteMetricSpace, scale: float) -> EpsilonNet:
    """Greedy net: admit the lowest-index uncovered point, project to the nearest center."""
    if not scale > 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    log_call("metric_core", "greedy_epsilon_net", points=space.size, scale=scale)
    dist = space.dist
    centers: List[int] = []
    covered = np.zeros(space.size, dtype=bool)
    for t in range(space.size):
        if not covered[t]:
            centers.append(t)
            covered |= dist[t] <= scale
    center_index = np.asarray(centers)
    # argmin returns the first minimum, i.e. the lowest center index on ties
    nearest = np.argmin(dist[np.ix_(np.arange(space.size), center_index)], axis=1)
    projection = tuple(int(center_index[i]) for i in nearest)
    log_result("metric_core", "greedy_epsilon_net", f"{len(centers)} centers")
    return EpsilonNet(scale=scale, centers=tuple(centers), projection=projection)


def _exact_cover_size(space: FiniteMetricSpace, scale: float, upper: int) -> int:
    n = space.size
    full = (1 << n) - 1
    balls = [
        sum(1 << int(j) for j in np.flatnonzero(space.dist[i] <= scale)) for i in range(n)
    ]
    for size in range(1, upper):
        for combo in combinations(range(n), size):
            mask = 0
            for i in combo:
                mask |= balls[i]
            if mask == full:
                return size
    return upper


def covering_number(
    space: FiniteMetricSpace,
    scale: float,
    mode: str = "greedy",
    cap: int = DEFAULTS.exact_cover_cap,
) -> int:
    """N(T, d, scale) by greedy net (upper estimate) or exhaustive search.

    Raises:
        ExactTooLarge: exact mode on more than `cap` points
    """
    if mode not in ("greedy", "exact"):
        raise ValueError(f"unknown covering mode {mode!r}")
    if mode == "exact" and space.size > cap:
        raise ExactTooLarge(space.size, cap)
    log_call("metric_core", "covering_number", points=space.size, scale=scale, mode=mode)
    size = greedy_epsilon_net(space, scale).size
    if mode == "exact":
        size = _exact_cover_size(space, scale, size)
    log_result("metric_core", "covering_number", size)
    return size


def build_dyadic_hierarchy(space: FiniteMetricSpace, k_min: int, k_max: int) -> PartitionHierarchy:
    """Nested partitions at scales 2^-k for k = k_min..k_max.

    Level k cells are the preimages of a greedy 2^-k net split along the
    cells of level k - 1; each piece keeps its net center as tag.
    """
    log_call("metric_core", "build_dyadic_hierarchy", points=space.size, k_min=k_min, k_max=k_max)
    if k_max < k_min:
        raise ValueError(f"k_max={k_max} < k_min={k_min}")
    if space.diameter > 0 and 2.0 ** (-(k_min - 1)) < space.diameter:
        raise ScaleMismatch(k_min, space.diameter)

    levels: List[PartitionLevel] = []
    previous: Optional[PartitionLevel] = None
    for k in range(k_min, k_max + 1):
        net = greedy_epsilon_net(space, 2.0 ** (-k))
        keys: Dict[Tuple[int, int], int] = {}
        labels: List[int] = []
        centers: List[int] = []
        parents: List[int] = []
        for t in range(space.size):
            parent = previous.labels[t] if previous is not None else -1
            key = (net.projection[t], parent)
            if key not in keys:
                keys[key] = len(centers)
                centers.append(net.projection[t])
                parents.append(parent)
            labels.append(keys[key])
        levels.append(
            PartitionLevel(
                k=k,
                labels=tuple(labels),
                centers=tuple(centers),
                parents=tuple(parents) if previous is not None else (),
            )
        )
        previous = levels[-1]

    hierarchy = PartitionHierarchy(k_min=k_min, levels=tuple(levels))
    log_result("metric_core", "build_dyadic_hierarchy", hierarchy.cell_counts())
    return hierarchy


def validate_hierarchy(
    space: FiniteMetricSpace, hierarchy: PartitionHierarchy, tol: float = DEFAULTS.tol_metric
) -> None:
    """Raise HierarchyInvariantError unless ball containment, refinement and the scale condition hold."""
    if space.diameter > 0 and 2.0 ** (-(hierarchy.k_min - 1)) < space.diameter:
        raise HierarchyInvariantError(f"k_min={hierarchy.k_min} is too large for diameter {space.diameter}")
    for level in hierarchy.levels:
        for t, cell in enumerate(level.labels):
            center = level.centers[cell]
            if space.dist[t, center] > level.scale + tol:
                raise HierarchyInvariantError(
                    f"point {t} is {space.dist[t, center]} from center {center} at level k={level.k}"
                )
    for coarse, fine in zip(hierarchy.levels[:-1], hierarchy.levels[1:]):
        for t in range(space.size):
            if coarse.labels[t] != fine.parents[fine.labels[t]]:
                raise HierarchyInvariantError(f"point {t} breaks refinement between k={coarse.k} and k={fine.k}")


def finest_needed_level(space: FiniteMetricSpace, k_min: int) -> int:
    """First level whose scale is below the smallest positive distance."""
    smallest = space.min_positive_distance
    if math.isinf(smallest):
        return k_min
    k = max(k_min, math.floor(-math.log2(smallest)) + 1)
    while 2.0 ** (-k) >= smallest:
        k += 1
    return k


def log_covering_series(
    space: FiniteMetricSpace,
    k_min: int,
    k_max: Optional[int] = None,
    mode: str = "greedy",
) -> LevelSeries:
    """log N(T, d, 2^-k) for k = k_min..k_max with a constant tail cap.

    Without k_max the series stops at the first level below the smallest
    positive distance, past which N stays at the number of distinct points.
    """
    log_call("metric_core", "log_covering_series", points=space.size, k_min=k_min, k_max=k_max, mode=mode)
    if k_max is None:
        k_max = finest_needed_level(space, k_min)
    values = [math.log(covering_number(space, 2.0 ** (-k), mode)) for k in range(k_min, k_max + 1)]
    distinct = covering_number(space, 0.5 * space.min_positive_distance, "greedy") if space.size > 1 else 1
    series = LevelSeries.with_cap(k_min, values, TailCap.constant(math.log(distinct)))
    log_result("metric_core", "log_covering_series", series.values)
    return series


def circle_dyadic_partition(k: int, phase: float) -> int:
    """Cell of `phase` among the 2^(k+2) equal arcs of the circle partition at level k."""
    if k < -1 or not 0.0 <= phase < TWO_PI:
        raise PhaseOutOfRange(k, phase)
    width = math.ldexp(TWO_PI, -(k + 2))
    cell = math.floor(phase / width)
    # phase just below 2 pi can round up to the cell count
    return min(cell, (1 << (k + 2)) - 1)
