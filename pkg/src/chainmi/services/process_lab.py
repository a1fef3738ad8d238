"""Canonical Gaussian processes, selection rules and Monte-Carlo oracles."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Tuple

import numpy as np
from scipy.special import entr

from chainmi.core.config import DEFAULTS
from chainmi.core.exceptions import EmptyRealization, InvalidProcessSpec, OutOfRange
from chainmi.core.logger import log_call, log_result
from chainmi.models.information import JointDistribution
from chainmi.models.process import (
    ARGMAX,
    CIRCLE,
    CUSTOM,
    INDEPENDENT,
    NOISY_CIRCLE_ARGMAX,
    TWO_BLOCK,
    CanonicalProcessSpec,
    MCEstimate,
    SelectionRule,
)
from chainmi.models.series import LevelSeries, TailCap
from chainmi.services.info_theory import binary_entropy, mutual_information

TWO_PI = 2.0 * math.pi
LOG2 = math.log(2.0)
SQRT_HALF_PI = math.sqrt(math.pi / 2.0)

BatchFunction = Callable[[np.random.Generator, int], np.ndarray]


class MonteCarloRunner:
    """Seeded batched Monte Carlo.

    Batch b draws from SeedSequence(seed, spawn_key=(b,)), so results depend
    only on (seed, samples, batch_size) and not on the number of workers.
    """

    def __init__(
        self,
        samples: int,
        seed: int,
        batch_size: int = DEFAULTS.mc_batch_size,
        workers: int = DEFAULTS.mc_workers,
    ):
        """
        Args:
            samples: Total number of samples
            seed: Root seed (64-bit)
            batch_size: Samples per batch
            workers: Threads evaluating batches
        """
        if samples < 1:
            raise OutOfRange("samples", samples, "[1, inf)")
        self.samples = samples
        self.seed = seed
        self.batch_size = batch_size
        self.workers = workers

    def batch_sizes(self) -> List[int]:
        full, rest = divmod(self.samples, self.batch_size)
        return [self.batch_size] * full + ([rest] if rest else [])

    def generator(self, batch: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(batch,)))

    def stream(self, batch_fn: BatchFunction) -> Iterator[np.ndarray]:
        """Per-batch sample values in batch order."""
        jobs = list(enumerate(self.batch_sizes()))

        def run(job: Tuple[int, int]) -> np.ndarray:
            batch, size = job
            return np.asarray(batch_fn(self.generator(batch), size), dtype=float)

        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                yield from executor.map(run, jobs)
        else:
            for job in jobs:
                yield run(job)

    def estimate(self, batch_fn: BatchFunction) -> MCEstimate:
        """Mean and standard error, merging batch moments in batch order."""
        count, mean, m2 = 0, 0.0, 0.0
        for values in self.stream(batch_fn):
            n_b = values.size
            mean_b = float(values.mean())
            m2_b = float(((values - mean_b) ** 2).sum())
            delta = mean_b - mean
            total = count + n_b
            mean += delta * n_b / total
            m2 += m2_b + delta * delta * count * n_b / total
            count = total
        variance = m2 / (count - 1) if count > 1 else 0.0
        return MCEstimate(estimate=mean, stderr=math.sqrt(variance / count), samples=count)


# --- processes -----------------------------------------------------------------------


def _draw_gaussians(spec: CanonicalProcessSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    return rng.standard_normal((count, spec.n))


def _realize(spec: CanonicalProcessSpec, gaussians: np.ndarray) -> np.ndarray:
    if spec.kind == CIRCLE:
        return gaussians
    if spec.kind == INDEPENDENT:
        return gaussians
    return gaussians @ spec.points.T


def sample_process(spec: CanonicalProcessSpec, seed: int, count: int) -> np.ndarray:
    """Realizations X_t = <t, G>, one row per sample.

    For the circle the rows are the Gaussian pairs G = (G1, G2), which fix
    X_phi = G1 sin(phi) + G2 cos(phi) for every phase.
    """
    log_call("process_lab", "sample_process", kind=spec.kind, seed=seed, count=count)
    runner = MonteCarloRunner(count, seed)
    rows = [
        _realize(spec, _draw_gaussians(spec, runner.generator(batch), size))
        for batch, size in enumerate(runner.batch_sizes())
    ]
    return np.vstack(rows)


def variance_proxy(spec: CanonicalProcessSpec) -> float:
    """max ||t||^2, the subgaussian variance proxy of X_t about 0."""
    if spec.kind in (CIRCLE, INDEPENDENT):
        return 1.0
    return float((spec.points ** 2).sum(axis=1).max())


# --- selection ---------------------------------------------------------------------------


def _wrap_phase(phases: np.ndarray) -> np.ndarray:
    wrapped = np.mod(phases, TWO_PI)
    # mod can round up to exactly 2 pi
    return np.where(wrapped >= TWO_PI, 0.0, wrapped)


def argmax_phase(gaussians: np.ndarray) -> np.ndarray:
    """Phase in [0, 2 pi) maximizing G1 sin(phi) + G2 cos(phi)."""
    gaussians = np.atleast_2d(gaussians)
    return _wrap_phase(np.arctan2(gaussians[:, 0], gaussians[:, 1]))


def circle_value(gaussians: np.ndarray, phases: np.ndarray) -> np.ndarray:
    gaussians = np.atleast_2d(gaussians)
    return gaussians[:, 0] * np.sin(phases) + gaussians[:, 1] * np.cos(phases)


def circle_cells(phases: np.ndarray, k: int) -> np.ndarray:
    """Vectorized cell index of each phase among the 2^(k+2) equal arcs."""
    width = math.ldexp(TWO_PI, -(k + 2))
    return np.minimum(np.floor(phases / width).astype(np.int64), (1 << (k + 2)) - 1)


def circle_cell_center(cells: np.ndarray, k: int) -> np.ndarray:
    width = math.ldexp(TWO_PI, -(k + 2))
    return (np.asarray(cells) + 0.5) * width


def _select_batch(
    rule: SelectionRule, values: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    count = values.shape[0]
    if rule.kind == NOISY_CIRCLE_ARGMAX:
        phases = argmax_phase(values)
        atom = rng.random(count) < rule.epsilon
        noise = rng.uniform(-math.pi, math.pi, count)
        return _wrap_phase(phases + np.where(atom, 0.0, noise))

    if rule.kind == ARGMAX:
        return np.argmax(values, axis=1)

    if rule.kind == TWO_BLOCK:
        if values.shape[1] != rule.n:
            raise InvalidProcessSpec(f"two_block rule for n={rule.n} applied to {values.shape[1]} values")
        outer = rng.random(count) < rule.delta
        inner_choice = np.argmax(values[:, : rule.m], axis=1)
        outer_choice = rule.m + np.argmax(values[:, rule.m :], axis=1)
        return np.where(outer, outer_choice, inner_choice)

    if rule.kind == CUSTOM:
        if values.shape[1] != rule.table.shape[0]:
            raise InvalidProcessSpec(
                f"custom table has {rule.table.shape[0]} rows for {values.shape[1]} process values"
            )
        quantized = np.argmax(values, axis=1)
        cumulative = np.cumsum(rule.table[quantized], axis=1)
        draws = rng.random(count)[:, None]
        choice = (draws >= cumulative).sum(axis=1)
        return np.minimum(choice, rule.table.shape[1] - 1)

    raise InvalidProcessSpec(f"unknown selection rule {rule.kind!r}")


def select(rule: SelectionRule, realization: np.ndarray, seed: int = 0) -> float:
    """W for a single realization: an index, or a phase for the circle rule.

    For noisy_circle_argmax the realization is the Gaussian pair (G1, G2).
    Ties in argmax go to the lowest index.
    """
    values = np.asarray(realization, dtype=float)
    if values.size == 0:
        raise EmptyRealization()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    chosen = _select_batch(rule, values.reshape(1, -1), rng)[0]
    return float(chosen) if rule.kind == NOISY_CIRCLE_ARGMAX else int(chosen)


# --- Monte-Carlo statistics ----------------------------------------------------------------


@dataclass(frozen=True)
class Statistic:
    """Per-sample quantity averaged by mc_estimate.

    tail_freq counts X_W >= threshold (target "selected") or
    sup X_t >= threshold (target "sup"); on the circle with a level the
    selected phase is replaced by the center of its cell at that level and
    the supremum runs over the cell centers.
    """

    kind: str
    threshold: float = 0.0
    level: Optional[int] = None
    target: str = "selected"

    @classmethod
    def selected_mean(cls) -> "Statistic":
        return cls("selected_mean")

    @classmethod
    def sup_mean(cls) -> "Statistic":
        return cls("sup_mean")

    @classmethod
    def selected_abs_mean(cls) -> "Statistic":
        return cls("selected_abs_mean")

    @classmethod
    def tail_freq(cls, threshold: float, level: Optional[int] = None, target: str = "selected") -> "Statistic":
        return cls("tail_freq", threshold=threshold, level=level, target=target)


def _circle_statistic(statistic: Statistic, gaussians: np.ndarray, phases: Optional[np.ndarray]) -> np.ndarray:
    if statistic.kind == "sup_mean":
        return np.hypot(gaussians[:, 0], gaussians[:, 1])
    if statistic.kind == "tail_freq" and statistic.target == "sup":
        if statistic.level is None:
            sup = np.hypot(gaussians[:, 0], gaussians[:, 1])
        else:
            centers = circle_cell_center(np.arange(1 << (statistic.level + 2)), statistic.level)
            sup = (gaussians @ np.vstack((np.sin(centers), np.cos(centers)))).max(axis=1)
        return (sup >= statistic.threshold).astype(float)

    if statistic.kind == "tail_freq" and statistic.level is not None:
        phases = circle_cell_center(circle_cells(phases, statistic.level), statistic.level)
    selected = circle_value(gaussians, phases)
    if statistic.kind == "selected_mean":
        return selected
    if statistic.kind == "selected_abs_mean":
        return np.abs(selected)
    return (selected >= statistic.threshold).astype(float)


def _finite_statistic(statistic: Statistic, values: np.ndarray, chosen: Optional[np.ndarray]) -> np.ndarray:
    if statistic.kind == "sup_mean":
        return values.max(axis=1)
    if statistic.kind == "tail_freq" and statistic.target == "sup":
        return (values.max(axis=1) >= statistic.threshold).astype(float)
    selected = values[np.arange(values.shape[0]), chosen]
    if statistic.kind == "selected_mean":
        return selected
    if statistic.kind == "selected_abs_mean":
        return np.abs(selected)
    return (selected >= statistic.threshold).astype(float)


def statistic_batch(
    spec: CanonicalProcessSpec, rule: SelectionRule, statistic: Statistic
) -> BatchFunction:
    """Batch function drawing G, selecting W and evaluating the statistic."""
    needs_selection = statistic.kind != "sup_mean" and statistic.target != "sup"
    if spec.kind == CIRCLE and rule.kind != NOISY_CIRCLE_ARGMAX and needs_selection:
        raise InvalidProcessSpec("the circle process needs the noisy_circle_argmax rule")
    if spec.kind != CIRCLE and rule.kind == NOISY_CIRCLE_ARGMAX:
        raise InvalidProcessSpec("noisy_circle_argmax applies to the circle process only")
    if statistic.kind not in ("selected_mean", "sup_mean", "selected_abs_mean", "tail_freq"):
        raise InvalidProcessSpec(f"unknown statistic {statistic.kind!r}")

    def batch(rng: np.random.Generator, size: int) -> np.ndarray:
        gaussians = _draw_gaussians(spec, rng, size)
        values = _realize(spec, gaussians)
        chosen = _select_batch(rule, values, rng) if needs_selection else None
        if spec.kind == CIRCLE:
            return _circle_statistic(statistic, gaussians, chosen)
        return _finite_statistic(statistic, values, chosen)

    return batch


def mc_estimate(
    spec: CanonicalProcessSpec,
    rule: SelectionRule,
    statistic: Statistic,
    samples: int,
    seed: int,
    workers: int = DEFAULTS.mc_workers,
) -> MCEstimate:
    """Monte-Carlo mean of the statistic with its standard error."""
    if samples < 100:
        raise OutOfRange("samples", samples, "[100, inf)")
    log_call("process_lab", "mc_estimate", kind=spec.kind, rule=rule, statistic=statistic.kind, samples=samples, seed=seed)
    runner = MonteCarloRunner(samples, seed, workers=workers)
    result = runner.estimate(statistic_batch(spec, rule, statistic))
    log_result("process_lab", "mc_estimate", result)
    return result


# --- analytic formulas ------------------------------------------------------------------------


def circle_mi_level(epsilon: float, k: int) -> float:
    """I([W]_k; X_T) for the noisy circle argmax, in closed form.

    With m = 2^(k+2) cells, [W]_k has the spiked law: eps + (1 - eps)/m on
    the argmax cell and (1 - eps)/m on the others.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise OutOfRange("epsilon", epsilon, "[0, 1]")
    if k < -1:
        raise OutOfRange("k", k, "[-1, inf)")
    m = float(1 << (k + 2))
    q = (1.0 - epsilon) / m
    spiked_entropy = float(entr(epsilon + q) + (m - 1.0) * entr(q))
    return max(0.0, (k + 2) * LOG2 - spiked_entropy)


def circle_mi_cap(epsilon: float) -> TailCap:
    """I([W]_k; X_T) <= eps * (k + 2) * log 2: W reveals the argmax cell only on the atom."""
    if not 0.0 <= epsilon <= 1.0:
        raise OutOfRange("epsilon", epsilon, "[0, 1]")
    return TailCap(slope=epsilon * LOG2, intercept=2.0 * epsilon * LOG2, kind="linear")


def circle_cmi_series(epsilon: float, k_max: int = DEFAULTS.kmax) -> LevelSeries:
    """circle_mi_level for k = -1..k_max with the analytic cap beyond."""
    values = [circle_mi_level(epsilon, k) for k in range(-1, k_max + 1)]
    return LevelSeries.with_cap(-1, values, circle_mi_cap(epsilon))


def circle_reference(epsilon: float) -> Tuple[float, float]:
    """(E[X_W], E[sup X_phi]) = (eps sqrt(pi/2), sqrt(pi/2))."""
    if not 0.0 <= epsilon <= 1.0:
        raise OutOfRange("epsilon", epsilon, "[0, 1]")
    return epsilon * SQRT_HALF_PI, SQRT_HALF_PI


def simulate_circle_cells(epsilon: float, k: int, samples: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """(cell of W, cell of the argmax phase) at level k for each sample."""
    rule = SelectionRule.noisy_circle_argmax(epsilon)
    spec = CanonicalProcessSpec.circle()
    runner = MonteCarloRunner(samples, seed)
    w_cells, x_cells = [], []
    for batch, size in enumerate(runner.batch_sizes()):
        rng = runner.generator(batch)
        gaussians = _draw_gaussians(spec, rng, size)
        phases = _select_batch(rule, gaussians, rng)
        w_cells.append(circle_cells(phases, k))
        x_cells.append(circle_cells(argmax_phase(gaussians), k))
    return np.concatenate(w_cells), np.concatenate(x_cells)


def two_block_mi_cap(n: int, m: int, delta: float) -> float:
    """H(W) cap (1 - delta) log m + delta log(n - m) + H_b(delta) on I(W; X)."""
    if not 1 <= m < n:
        raise OutOfRange("m", m, f"[1, {n})")
    if not 0.0 <= delta <= 1.0:
        raise OutOfRange("delta", delta, "[0, 1]")
    return (1.0 - delta) * math.log(m) + delta * math.log(n - m) + binary_entropy(delta)


def argmax_law(spec: CanonicalProcessSpec, samples: int, seed: int) -> np.ndarray:
    """Monte-Carlo law of the argmax index Q (ties to the lowest index)."""
    size = spec.cardinality
    if size == 0:
        raise InvalidProcessSpec("argmax law needs a finite process")
    runner = MonteCarloRunner(samples, seed)
    counts = np.zeros(size)
    for batch, batch_size in enumerate(runner.batch_sizes()):
        values = _realize(spec, _draw_gaussians(spec, runner.generator(batch), batch_size))
        counts += np.bincount(np.argmax(values, axis=1), minlength=size)
    return counts / counts.sum()


def quantized_selector_mi(
    spec: CanonicalProcessSpec, rule: SelectionRule, samples: int, seed: int
) -> float:
    """I(W; X_T) for rules that see X_T only through the argmax index Q.

    W - Q - X_T is a Markov chain with Q a function of X_T, so
    I(W; X_T) = I(W; Q), computed exactly from the estimated law of Q.
    """
    if rule.kind == ARGMAX:
        table = np.eye(spec.cardinality)
    elif rule.kind == CUSTOM:
        table = rule.table
    else:
        raise InvalidProcessSpec(f"{rule.kind} does not act through the argmax index")
    if table.shape[0] != spec.cardinality:
        raise InvalidProcessSpec(f"selector table has {table.shape[0]} rows for |T|={spec.cardinality}")
    log_call("process_lab", "quantized_selector_mi", cardinality=spec.cardinality, samples=samples, seed=seed)
    law = argmax_law(spec, samples, seed)
    value = mutual_information(JointDistribution.from_marginal_and_kernel(law, table))
    log_result("process_lab", "quantized_selector_mi", value)
    return value


def summarize(values: np.ndarray) -> MCEstimate:
    """MCEstimate of already drawn per-sample values."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise OutOfRange("samples", 0, "[1, inf)")
    stderr = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return MCEstimate(estimate=float(values.mean()), stderr=stderr, samples=int(values.size))
