"""Orchestration of the CLI commands over the services."""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from chainmi.core.config import (
    BoundsBlock,
    EnvelopeConfig,
    ProblemConfig,
    RunConfig,
    SelectorConfig,
    SeriesConfig,
    SimulateBlock,
    SpaceConfig,
)
from chainmi.core.exceptions import ConfigError
from chainmi.core.logger import log_info
from chainmi.models.information import PsiEnvelope
from chainmi.models.metric import FiniteMetricSpace
from chainmi.models.process import CIRCLE, CanonicalProcessSpec, LearningProblem, MCEstimate, SelectionRule
from chainmi.models.series import ANALYTIC_CAP, LevelSeries, TailCap
from chainmi.reports.writer import ReportWriter
from chainmi.services import bound_engine, metric_core, process_lab
from chainmi.services.learning_adapter import learning_adapter
from chainmi.services.process_lab import MonteCarloRunner, Statistic

# Noisy circle golden values, keyed by epsilon
CHAINING_CONSTANT = 19.0352
GOLDEN_CMI = {
    Fraction(1, 20): 1.1013,
    Fraction(1, 30): 0.7507,
    Fraction(1, 40): 0.5709,
    Fraction(1, 50): 0.4612,
    Fraction(1, 100): 0.2364,
    Fraction(1, 200): 0.1204,
    Fraction(1, 400): 0.0610,
}
GOLDEN_BIAS = {
    Fraction(1, 20): 0.0626,
    Fraction(1, 30): 0.0417,
    Fraction(1, 40): 0.0313,
    Fraction(1, 50): 0.0250,
    Fraction(1, 100): 0.0125,
    Fraction(1, 200): 0.0062,
    Fraction(1, 400): 0.0031,
}
CMI_TOL = 1e-3
# golden bias values are truncated, not rounded
BIAS_TOL = 1e-4
CHAINING_TOL = 5e-3
SIGMAS = 3.0


def parse_epsilons(text: str) -> List[Fraction]:
    """Parse "1/20,1/30,0.5" into exact fractions."""
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            value = Fraction(part)
        except (ValueError, ZeroDivisionError) as e:
            raise ConfigError(f"invalid epsilon {part!r}") from e
        if not 0 <= value <= 1:
            raise ConfigError(f"epsilon {part} outside [0, 1]")
        values.append(value)
    if not values:
        raise ConfigError("no epsilons given")
    return values


def epsilons_from_floats(values: Sequence[float]) -> List[Fraction]:
    """Config floats as fractions, so 0.05 matches the golden key 1/20."""
    return [Fraction(value).limit_denominator(10**6) for value in values]


@dataclass
class Check:
    """One golden or validation check."""

    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class Outcome:
    """Rows and checks produced by a command."""

    rows: List[Dict[str, Any]] = field(default_factory=list)
    checks: List[Check] = field(default_factory=list)
    files: List[Path] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def check(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(name, bool(passed), detail))


# --- example1 -------------------------------------------------------------------------------


def run_example1(config: RunConfig, epsilons: Sequence[Fraction], monte_carlo: bool = True) -> Outcome:
    """Noisy circle table: MI, chaining and chained-MI bounds next to the true bias."""
    env = PsiEnvelope.subgaussian(1.0)
    outcome = Outcome()

    chaining = bound_engine.chained_bound(env, process_lab.circle_cmi_series(1.0, config.kmax), tail_tolerance=config.tol)
    outcome.check(
        "chaining_constant",
        abs(chaining.bound_value - CHAINING_CONSTANT) <= CHAINING_TOL,
        f"{chaining.bound_value:.6f} vs {CHAINING_CONSTANT}",
    )

    spec = CanonicalProcessSpec.circle()
    for epsilon in epsilons:
        eps = float(epsilon)
        label = str(epsilon)
        # I(W; X_T) is infinite as soon as the selector has an atom on the argmax phase
        mi = math.inf if eps > 0 else 0.0
        mi_value = bound_engine.mi_bound(env, mi)
        cmi = bound_engine.chained_bound(env, process_lab.circle_cmi_series(eps, config.kmax), tail_tolerance=config.tol)
        bias, _ = process_lab.circle_reference(eps)
        row: Dict[str, Any] = {
            "epsilon": label,
            "mi_bound": mi_value,
            "chaining_bound": chaining.bound_value,
            "cmi_bound": cmi.bound_value,
            "cmi_truncation_k": cmi.truncation_k,
            "cmi_tail_estimate": cmi.tail_estimate,
            "true_bias": bias,
        }

        outcome.check(f"mi_bound_infinite[{label}]", math.isinf(mi_value) == (eps > 0), str(mi_value))
        if epsilon in GOLDEN_CMI:
            outcome.check(
                f"cmi_bound[{label}]",
                abs(cmi.bound_value - GOLDEN_CMI[epsilon]) <= CMI_TOL,
                f"{cmi.bound_value:.6f} vs {GOLDEN_CMI[epsilon]}",
            )
            outcome.check(
                f"true_bias[{label}]",
                abs(bias - GOLDEN_BIAS[epsilon]) <= BIAS_TOL,
                f"{bias:.6f} vs {GOLDEN_BIAS[epsilon]}",
            )

        if monte_carlo:
            estimate = process_lab.mc_estimate(
                spec,
                SelectionRule.noisy_circle_argmax(eps),
                Statistic.selected_mean(),
                config.samples,
                config.seed,
                workers=config.workers,
            )
            row["mc_bias"] = estimate.estimate
            row["mc_stderr"] = estimate.stderr
            outcome.check(f"mc_bias[{label}]", estimate.within(bias, SIGMAS), f"{estimate} vs {bias:.6f}")
            outcome.check(
                f"mc_below_cmi[{label}]", estimate.at_most(cmi.bound_value, SIGMAS), f"{estimate} vs {cmi.bound_value:.6f}"
            )
        outcome.rows.append(row)

    writer = ReportWriter(config.out, config.format)
    if config.format == "csv":
        outcome.files.append(writer.write_rows("example1", outcome.rows))
    else:
        outcome.files.append(
            writer.write_json(
                "example1",
                {
                    "rows": outcome.rows,
                    "checks": [check.to_dict() for check in outcome.checks],
                    "seed": config.seed,
                    "samples": config.samples if monte_carlo else 0,
                },
            )
        )
    return outcome


# --- bounds ---------------------------------------------------------------------------------


def envelope_from_config(block: EnvelopeConfig) -> PsiEnvelope:
    if block.kind == "subgaussian":
        return PsiEnvelope.subgaussian(block.sigma2)
    return PsiEnvelope.from_grid(block.grid)


def space_from_config(block: SpaceConfig) -> FiniteMetricSpace:
    if block.distance_csv is not None:
        return metric_core.validate_metric(metric_core.load_distance_csv(block.distance_csv))
    if block.coordinates is not None:
        return metric_core.space_from_points(block.coordinates)
    return metric_core.space_from_points(metric_core.circle_points(block.circle_points))


def series_from_config(block: SeriesConfig) -> LevelSeries:
    if block.csv is not None:
        try:
            table = np.loadtxt(block.csv, delimiter=",", dtype=float, ndmin=2)
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot read series from {block.csv}: {e}") from e
        ks = table[:, 0].astype(int)
        if np.any(np.diff(ks) != 1):
            raise ConfigError(f"levels in {block.csv} must increase by 1")
        k_start, values = int(ks[0]), table[:, 1].tolist()
    else:
        k_start, values = block.k_start, list(block.values)

    cap = TailCap(slope=block.cap.slope, intercept=block.cap.intercept, kind=block.cap.kind) if block.cap else None
    mode = block.tail_mode or ("analytic_cap" if cap is not None else "zero_after_last")
    if mode == ANALYTIC_CAP:
        return LevelSeries.with_cap(k_start, values, cap)
    return LevelSeries.zero_after_last(k_start, values)


def problem_from_config(block: ProblemConfig) -> LearningProblem:
    return LearningProblem(
        example_probs=np.asarray(block.example_probs, dtype=float),
        losses=np.asarray(block.losses, dtype=float),
        sample_size=block.sample_size,
        algorithm=block.algorithm,
        kernel=np.asarray(block.kernel, dtype=float) if block.kernel is not None else None,
        beta=block.beta if block.beta is not None else 1.0,
    )


def _covering_range(space: FiniteMetricSpace, block: SpaceConfig, kmax: int) -> Tuple[int, int]:
    k_min = metric_core.base_scale_index(space, block.k_min)
    return k_min, max(k_min, min(kmax, metric_core.finest_needed_level(space, k_min)))


@dataclass
class _SubsetInputs:
    first: FiniteMetricSpace
    second: FiniteMetricSpace
    k_range: Tuple[int, int]


def _resolve_bounds(block: BoundsBlock, space: Optional[FiniteMetricSpace], config: RunConfig) -> Dict[str, Any]:
    """Read and check the inputs of every listed bound before any is computed."""
    inputs: Dict[str, Any] = {}
    for name in block.run:
        if name == "dudley":
            if block.oracle and space.coordinates is None:
                raise ConfigError("oracle needs a space given by coordinates or circle_points")
            inputs[name] = _covering_range(space, block.space, config.kmax)
        elif name == "chained":
            inputs[name] = series_from_config(block.chained.series)
        elif name == "small_subset":
            subset = set(block.small_subset.subset)
            if not subset or min(subset) < 0 or max(subset) >= space.size:
                raise ConfigError(f"small_subset.subset must hold indices in 0..{space.size - 1}")
            rest = [i for i in range(space.size) if i not in subset]
            if not block.small_subset.replace_t2_with_full and not rest:
                raise ConfigError("small_subset.subset covers the whole space; T2 would be empty")
            second = space if block.small_subset.replace_t2_with_full else metric_core.restrict(space, rest)
            inputs[name] = _SubsetInputs(
                metric_core.restrict(space, sorted(subset)), second, _covering_range(space, block.space, config.kmax)
            )
        elif name == "learning":
            inputs[name] = problem_from_config(block.learning)
    return inputs


def run_bounds(config: RunConfig) -> Outcome:
    """Evaluate the bounds listed in the config and write one report each.

    Every input is resolved first, so a bad block fails before any report is written.
    """
    block: Optional[BoundsBlock] = config.bounds
    if block is None:
        raise ConfigError("config has no bounds block")
    env = envelope_from_config(block.envelope)
    space = space_from_config(block.space) if block.space is not None else None
    inputs = _resolve_bounds(block, space, config)

    writer = ReportWriter(config.out, config.format)
    outcome = Outcome()

    def emit(name: str, report: Any, value: Any) -> None:
        outcome.files.append(writer.write_report(name, report))
        outcome.rows.append({"bound": name, "value": value})

    for name in block.run:
        log_info(f"bound: {name}")
        if name == "maximal":
            value = bound_engine.maximal_bound(env, block.maximal.cardinality, block.maximal.absolute)
            formula = "psi*^-1(log 2|T|)" if block.maximal.absolute else "psi*^-1(log |T|)"
            emit(name, bound_engine.scalar_report(value, "maximal", formula, cardinality=block.maximal.cardinality), value)

        elif name == "mi":
            mi = math.inf if block.mi.mi == "inf" else float(block.mi.mi)
            value = bound_engine.mi_bound(env, mi, block.mi.variant)
            formula = "psi*^-1(I + log 2)" if block.mi.variant == "expected_absolute" else "psi*^-1(I)"
            emit(name, bound_engine.scalar_report(value, "mi", formula, mi=mi, variant=block.mi.variant), value)

        elif name == "dudley":
            k_min, k_max = inputs[name]
            series = metric_core.log_covering_series(space, k_min, k_max, block.space.covering_mode)
            report = bound_engine.dudley_bound(series, config.tol)
            emit(name, report, report.bound_value)
            if block.oracle:
                estimate = process_lab.mc_estimate(
                    CanonicalProcessSpec.finite(space.coordinates),
                    SelectionRule.argmax(),
                    Statistic.sup_mean(),
                    config.samples,
                    config.seed,
                    workers=config.workers,
                )
                outcome.rows.append({"bound": "sup_mean_oracle", "value": estimate.estimate, "stderr": estimate.stderr})
                outcome.check(
                    "dudley_above_sup_mean",
                    estimate.at_most(report.bound_value, SIGMAS),
                    f"{estimate} vs {report.bound_value:.6f}",
                )

        elif name == "chained":
            report = bound_engine.chained_bound(env, inputs[name], block.chained.variant, config.tol)
            emit(name, report, report.bound_value)

        elif name == "small_subset":
            resolved: _SubsetInputs = inputs[name]
            k_min, k_max = resolved.k_range
            mode = block.space.covering_mode
            series1 = metric_core.log_covering_series(resolved.first, k_min, k_max, mode)
            series2 = metric_core.log_covering_series(resolved.second, k_min, k_max, mode)
            report = bound_engine.small_subset_bound(block.small_subset.alpha, series1, series2, config.tol)
            emit(name, report, report.bound_value)

        elif name == "lipschitz":
            result = bound_engine.lipschitz_net_bound(
                block.lipschitz.expected_lipschitz, env, block.lipschitz.candidates
            )
            emit(name, result, result.bound)

        elif name == "tail":
            result = bound_engine.tail_bound(env, block.tail.mode, block.tail.cardinality, block.tail.u, block.tail.mi)
            emit(name, result, result.probability)

        elif name == "learning":
            report = learning_adapter(
                inputs[name],
                mc_samples=config.samples,
                seed=config.seed,
                tail_tolerance=config.tol,
            )
            emit(name, report, report.bound_a.bound_value)
            outcome.rows.append({"bound": "learning_gen", "value": report.gen, "stderr": report.gen_stderr})

    return outcome


# --- simulate -------------------------------------------------------------------------------


def process_from_config(block: SimulateBlock) -> CanonicalProcessSpec:
    if block.process.kind == "circle":
        return CanonicalProcessSpec.circle()
    if block.process.kind == "independent":
        return CanonicalProcessSpec.independent(block.process.n)
    return CanonicalProcessSpec.finite(block.process.points)


def selector_from_config(block: SelectorConfig, spec: CanonicalProcessSpec) -> SelectionRule:
    if block.kind == "noisy_circle_argmax":
        return SelectionRule.noisy_circle_argmax(block.epsilon)
    if block.kind == "two_block":
        return SelectionRule.two_block(spec.cardinality, block.m, block.delta)
    if block.kind == "custom":
        return SelectionRule.custom(block.table)
    if block.kind == "independent":
        return SelectionRule.independent(spec.cardinality, block.probabilities)
    return SelectionRule.argmax()


@dataclass
class Comparison:
    name: str
    bound: float
    threshold: Optional[float] = None


def _selection_information(
    spec: CanonicalProcessSpec, rule: SelectionRule, config: RunConfig, level: Optional[int]
) -> Tuple[float, int]:
    """(I(W; X_T) or an upper bound on it, |T|) for the selected-value bounds."""
    if spec.kind == CIRCLE:
        return process_lab.circle_mi_level(rule.epsilon, level), 1 << (level + 2)
    if rule.kind == "two_block":
        return process_lab.two_block_mi_cap(rule.n, rule.m, rule.delta), spec.cardinality
    return process_lab.quantized_selector_mi(spec, rule, config.samples, config.seed), spec.cardinality


def simulation_comparisons(
    spec: CanonicalProcessSpec, rule: SelectionRule, block: SimulateBlock, config: RunConfig
) -> Tuple[Statistic, List[Comparison]]:
    """Statistic to simulate and the bounds it is checked against."""
    stat = block.statistic
    sigma2 = process_lab.variance_proxy(spec)
    env = PsiEnvelope.subgaussian(sigma2)

    if stat.kind == "sup_mean":
        if spec.kind == CIRCLE:
            series = process_lab.circle_cmi_series(1.0, config.kmax)
            bound = bound_engine.chained_bound(env, series, tail_tolerance=config.tol).bound_value
            return Statistic.sup_mean(), [Comparison("chaining_bound", bound)]
        return Statistic.sup_mean(), [Comparison("maximal", bound_engine.maximal_bound(env, spec.cardinality))]

    if stat.kind in ("selected_mean", "selected_abs_mean"):
        statistic = Statistic(stat.kind)
        variant = "expected_absolute" if stat.kind == "selected_abs_mean" else "expectation"
        if spec.kind == CIRCLE:
            if stat.kind == "selected_abs_mean":
                return statistic, []
            series = process_lab.circle_cmi_series(rule.epsilon, config.kmax)
            bound = bound_engine.chained_bound(env, series, tail_tolerance=config.tol).bound_value
            return statistic, [Comparison("chained_mi", bound)]
        mi, cardinality = _selection_information(spec, rule, config, None)
        name = "two_block_mi_cap" if rule.kind == "two_block" else "mi_bound"
        comparisons = [
            Comparison(name, bound_engine.mi_bound(env, mi, variant)),
            Comparison("maximal", bound_engine.maximal_bound(env, cardinality, stat.kind == "selected_abs_mean")),
        ]
        return statistic, comparisons

    # tail frequencies at thresholds with additive excess x
    u = stat.x * stat.x / (2.0 * sigma2)
    level = stat.level if spec.kind == CIRCLE else None
    if stat.target == "sup":
        cardinality = 1 << (level + 2) if spec.kind == CIRCLE else spec.cardinality
        result = bound_engine.tail_bound(env, "sup", cardinality, u)
        return (
            Statistic.tail_freq(result.threshold, level, "sup"),
            [Comparison("tail_sup", result.probability, result.threshold)],
        )
    mi, cardinality = _selection_information(spec, rule, config, level)
    if mi == 0 and u == 0:
        raise ConfigError("tail_freq with x = 0 needs a selector carrying information")
    result = bound_engine.tail_bound(env, "selected", cardinality, u, mi)
    threshold = result.additive_threshold
    return (
        Statistic.tail_freq(threshold, level, "selected"),
        [Comparison("tail_selected", result.probability, threshold)],
    )


def run_simulate(config: RunConfig) -> Tuple[Outcome, MCEstimate]:
    """Stream per-sample statistics and compare their mean with the bounds."""
    block = config.simulate
    if block is None:
        raise ConfigError("config has no simulate block")
    spec = process_from_config(block)
    rule = selector_from_config(block.selector, spec)
    statistic, comparisons = simulation_comparisons(spec, rule, block, config)

    runner = MonteCarloRunner(config.samples, config.seed, workers=config.workers)
    batches = list(runner.stream(process_lab.statistic_batch(spec, rule, statistic)))
    estimate = process_lab.summarize(np.concatenate(batches))

    writer = ReportWriter(config.out, config.format)
    outcome = Outcome()
    if block.stream:
        outcome.files.append(writer.write_samples("samples", statistic.kind, batches))
    for comparison in comparisons:
        passed = estimate.at_most(comparison.bound, SIGMAS)
        outcome.check(comparison.name, passed, f"{estimate} vs {comparison.bound:.6f}")
        outcome.rows.append(
            {"comparison": comparison.name, "bound": comparison.bound, "threshold": comparison.threshold, "pass": passed}
        )
    outcome.files.append(
        writer.write_json(
            "summary",
            {
                "process": spec.kind,
                "selector": str(rule),
                "statistic": statistic.kind,
                "threshold": statistic.threshold if statistic.kind == "tail_freq" else None,
                "estimate": estimate.estimate,
                "stderr": estimate.stderr,
                "samples": estimate.samples,
                "seed": config.seed,
                "comparisons": outcome.rows,
            },
        )
    )
    return outcome, estimate
