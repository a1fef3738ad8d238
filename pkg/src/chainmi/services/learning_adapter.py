"""Chained bounds for the generalization error of finite learning problems."""

import math
from itertools import product
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from chainmi.core.config import DEFAULTS
from chainmi.core.exceptions import DegenerateSpace, EnumerationCapExceeded, OutOfRange
from chainmi.core.logger import log_call, log_info, log_result, log_warning
from chainmi.models.information import JointDistribution, PsiEnvelope
from chainmi.models.metric import FiniteMetricSpace
from chainmi.models.process import LearningProblem, LearningReport, Skipped
from chainmi.models.series import BoundReport, LevelSeries, TailCap
from chainmi.services import bound_engine
from chainmi.services.info_theory import mutual_information
from chainmi.services.metric_core import (
    base_scale_index,
    build_dyadic_hierarchy,
    finest_needed_level,
    validate_metric,
)
from chainmi.services.process_lab import MonteCarloRunner, summarize


def gen_metric(problem: LearningProblem) -> np.ndarray:
    """d(w, v) = max_z |l(w, z) - l(v, z)| / sqrt(n)."""
    losses = problem.losses
    diff = np.abs(losses[:, None, :] - losses[None, :, :]).max(axis=2)
    return diff / math.sqrt(problem.sample_size)


def _example_counts(problem: LearningProblem, sets: np.ndarray) -> np.ndarray:
    return np.stack([(sets == z).sum(axis=1) for z in range(problem.example_count)], axis=1)


def _kernel_rows(problem: LearningProblem, sets: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """P(W = w | S = s) for each training set row."""
    empirical = counts @ problem.losses.T / problem.sample_size
    if problem.algorithm == "erm":
        rows = np.zeros_like(empirical)
        rows[np.arange(empirical.shape[0]), np.argmin(empirical, axis=1)] = 1.0
        return rows
    if problem.algorithm == "gibbs":
        return softmax(-problem.beta * problem.sample_size * empirical, axis=1)
    if problem.algorithm == "constant":
        return np.tile(problem.kernel[0], (sets.shape[0], 1))
    # table rows follow the lexicographic order of Z^n
    radix = problem.example_count ** np.arange(problem.sample_size - 1, -1, -1)
    return problem.kernel[sets @ radix]


def _generalization_gaps(problem: LearningProblem, counts: np.ndarray) -> np.ndarray:
    """gen(w, s) = L_mu(w) - L_s(w) for each set row and hypothesis."""
    population = problem.losses @ problem.example_probs
    empirical = counts @ problem.losses.T / problem.sample_size
    return population[None, :] - empirical


def empirical_increment_log_mgf(
    problem: LearningProblem,
    w: int,
    v: int,
    lambdas: Sequence[float],
    samples: int,
    seed: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Empirical log E exp(lambda (gen(w) - gen(v))) and the envelope lambda^2 d(w, v)^2 / 2."""
    lambdas = np.asarray(lambdas, dtype=float)
    runner = MonteCarloRunner(samples, seed)
    increments = []
    for batch, size in enumerate(runner.batch_sizes()):
        sets = runner.generator(batch).choice(
            problem.example_count, size=(size, problem.sample_size), p=problem.example_probs
        )
        gaps = _generalization_gaps(problem, _example_counts(problem, sets))
        increments.append(gaps[:, w] - gaps[:, v])
    increment = np.concatenate(increments)
    log_mgf = logsumexp(np.outer(lambdas, increment), axis=1) - math.log(increment.size)
    distance = gen_metric(problem)[w, v]
    return log_mgf, 0.5 * lambdas**2 * distance**2


class LearningAdapter:
    """Turns a finite learning problem into chained generalization bounds."""

    def __init__(
        self,
        problem: LearningProblem,
        hierarchy_depth: Optional[int] = None,
        mc_samples: int = DEFAULTS.mc_samples,
        seed: int = 0,
        tail_tolerance: float = DEFAULTS.tail_tolerance,
        force_monte_carlo: bool = False,
    ):
        """
        Args:
            problem: Learning problem
            hierarchy_depth: Deepest partition level (extended when too shallow)
            mc_samples: Training sets drawn on the Monte-Carlo path
            seed: Root seed of the Monte-Carlo path
            tail_tolerance: Series truncation tolerance
            force_monte_carlo: Skip exact enumeration even when it is feasible
        """
        self.problem = problem
        self.hierarchy_depth = hierarchy_depth
        self.mc_samples = mc_samples
        self.seed = seed
        self.tail_tolerance = tail_tolerance
        self.force_monte_carlo = force_monte_carlo

    def enumerate_sets(self) -> Tuple[np.ndarray, np.ndarray]:
        """All training sets in lexicographic order with their probabilities.

        Raises:
            EnumerationCapExceeded: |Z|^n above the enumeration cap
        """
        problem = self.problem
        if not problem.enumerable:
            raise EnumerationCapExceeded(problem.training_set_count, DEFAULTS.enumeration_cap)
        sets = np.array(list(product(range(problem.example_count), repeat=problem.sample_size)), dtype=np.int64)
        probs = np.prod(problem.example_probs[sets], axis=1)
        return sets, probs

    def _exact_joint(self) -> Tuple[np.ndarray, float, float, float, float]:
        """Hypothesis-by-set mass, gen and E|gen| by enumeration."""
        problem = self.problem
        sets, probs = self.enumerate_sets()
        counts = _example_counts(problem, sets)
        rows = _kernel_rows(problem, sets, counts)
        gaps = _generalization_gaps(problem, counts)
        mass = (rows * probs[:, None]).T
        gen = float(np.sum(mass.T * gaps))
        gen_abs = float(np.sum(mass.T * np.abs(gaps)))
        return mass, gen, 0.0, gen_abs, 0.0

    def _sampled_joint(self) -> Tuple[np.ndarray, float, float, float, float]:
        """Monte-Carlo version of _exact_joint; sets are labelled by their type."""
        problem = self.problem
        runner = MonteCarloRunner(self.mc_samples, self.seed)
        all_sets, all_rows, gen_values, abs_values = [], [], [], []
        for batch, size in enumerate(runner.batch_sizes()):
            sets = runner.generator(batch).choice(
                problem.example_count, size=(size, problem.sample_size), p=problem.example_probs
            )
            counts = _example_counts(problem, sets)
            rows = _kernel_rows(problem, sets, counts)
            gaps = _generalization_gaps(problem, counts)
            all_sets.append(sets if problem.algorithm == "table" else counts)
            all_rows.append(rows)
            gen_values.append((rows * gaps).sum(axis=1))
            abs_values.append((rows * np.abs(gaps)).sum(axis=1))

        # erm, gibbs and constant kernels depend on S only through its type
        _, labels = np.unique(np.vstack(all_sets), axis=0, return_inverse=True)
        labels = labels.ravel()
        rows = np.vstack(all_rows)
        mass = np.zeros((labels.max() + 1, problem.hypothesis_count))
        np.add.at(mass, labels, rows)
        gen = summarize(np.concatenate(gen_values))
        gen_abs = summarize(np.concatenate(abs_values))
        return mass.T / mass.sum(), gen.estimate, gen.stderr, gen_abs.estimate, gen_abs.stderr

    def _zero_bound(self, formula_id: str) -> BoundReport:
        return BoundReport(
            bound_value=0.0,
            formula_id=formula_id,
            formula="all hypotheses share one gen process (diameter 0)",
        )

    def run(self) -> LearningReport:
        problem = self.problem
        log_call(
            "learning_adapter",
            "run",
            hypotheses=problem.hypothesis_count,
            examples=problem.example_count,
            n=problem.sample_size,
            algorithm=problem.algorithm,
        )

        used_monte_carlo = self.force_monte_carlo
        if not used_monte_carlo:
            try:
                mass, gen, gen_err, gen_abs, gen_abs_err = self._exact_joint()
            except EnumerationCapExceeded as e:
                log_warning(f"{e}; falling back to Monte Carlo over training sets")
                used_monte_carlo = True
        if used_monte_carlo:
            mass, gen, gen_err, gen_abs, gen_abs_err = self._sampled_joint()

        joint = JointDistribution(mass / mass.sum())
        mi_total = mutual_information(joint)
        ranges = problem.losses.max(axis=1) - problem.losses.min(axis=1)
        sigma2 = float(ranges.max() ** 2 / (4 * problem.sample_size))
        mi_comparison = bound_engine.mi_bound(PsiEnvelope.subgaussian(sigma2), mi_total) if sigma2 > 0 else 0.0

        has_zero_row = bool(np.any(np.all(problem.losses == 0, axis=1)))
        space: Optional[FiniteMetricSpace] = validate_metric(gen_metric(problem))
        series: Optional[LevelSeries] = None
        depth: Optional[int] = None
        try:
            k_min = base_scale_index(space)
        except DegenerateSpace:
            log_info("gen-process metric has diameter 0; chained bounds are 0")
            bound_a = self._zero_bound("chained_mi")
            bound_b = self._zero_bound("chained_mi_absolute") if has_zero_row else Skipped(
                "no hypothesis has identically zero loss"
            )
        else:
            depth = max(self.hierarchy_depth if self.hierarchy_depth is not None else k_min,
                        finest_needed_level(space, k_min))
            hierarchy = build_dyadic_hierarchy(space, k_min, depth)
            values = [mutual_information(joint.coarsen_w(level.labels)) for level in hierarchy.levels]
            # Cells stop changing past the finest level, and so does I([W]_k; S)
            series = LevelSeries.with_cap(k_min, values, TailCap.constant(values[-1]))
            env = PsiEnvelope.subgaussian(1.0)
            bound_a = bound_engine.chained_bound(env, series, "expectation", self.tail_tolerance)
            if has_zero_row:
                bound_b = bound_engine.chained_bound(env, series, "absolute", self.tail_tolerance)
            else:
                bound_b = Skipped("no hypothesis has identically zero loss")

        report = LearningReport(
            space=space,
            mi_series=series,
            gen=gen,
            gen_stderr=gen_err,
            gen_abs=gen_abs,
            gen_abs_stderr=gen_abs_err,
            bound_a=bound_a,
            bound_b=bound_b,
            mi_total=mi_total,
            mi_bound=mi_comparison,
            used_monte_carlo=used_monte_carlo,
            hierarchy_depth=depth,
        )
        log_result("learning_adapter", "run", f"gen={gen:.6g}, bound_a={bound_a}")
        return report


def learning_adapter(
    problem: LearningProblem,
    hierarchy_depth: Optional[int] = None,
    mc_samples: int = DEFAULTS.mc_samples,
    seed: int = 0,
    tail_tolerance: float = DEFAULTS.tail_tolerance,
    force_monte_carlo: bool = False,
) -> LearningReport:
    """Functional entry point of LearningAdapter."""
    if mc_samples < 1:
        raise OutOfRange("mc_samples", mc_samples, "[1, inf)")
    return LearningAdapter(problem, hierarchy_depth, mc_samples, seed, tail_tolerance, force_monte_carlo).run()
