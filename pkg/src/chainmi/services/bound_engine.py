"""Expected-supremum and bias bounds over precomputed metric and information inputs."""

import math
from typing import Callable, List, Optional, Sequence, Tuple

from chainmi.core.config import DEFAULTS
from chainmi.core.exceptions import (
    EmptyCandidates,
    MissingTailCap,
    OutOfRange,
    RangeMismatch,
    TailTooLoose,
    UndefinedAtZero,
)
from chainmi.core.logger import log_call, log_result
from chainmi.models.information import PsiEnvelope
from chainmi.models.series import (
    ANALYTIC_CAP,
    BoundReport,
    LevelSeries,
    LipschitzResult,
    ScalarBound,
    TailBoundResult,
    TailCap,
)
from chainmi.services.info_theory import binary_entropy
from chainmi.services.legendre import psi_star_inverse

LOG2 = math.log(2.0)
SQRT2 = math.sqrt(2.0)

EXPECTATION = "expectation"
ABSOLUTE = "absolute"
ABSOLUTE_EXPECTATION = "absolute_expectation"
EXPECTED_ABSOLUTE = "expected_absolute"


def _series_cap(series: LevelSeries) -> Optional[TailCap]:
    if series.tail_mode != ANALYTIC_CAP:
        return None
    if series.cap is None:
        raise MissingTailCap()
    return series.cap


def _sum_levels(
    k_start: int,
    arguments: Sequence[float],
    cap: Optional[TailCap],
    constant: float,
    transform: Callable[[float], float],
    tail_tolerance: float,
) -> Tuple[List[Tuple[int, float]], int, float]:
    """Sum constant * 2^-k * transform(argument_k), extending with cap levels.

    transform must be concave, nondecreasing and vanish at 0; then the term
    ratio from level k on is at most (1 + slope / argument_k) / 2 and the
    remainder after the last summed level has a geometric bound.

    Returns:
        (per-level terms, truncation level, tail estimate)
    """
    terms = [(k_start + i, constant * math.ldexp(transform(a), -(k_start + i))) for i, a in enumerate(arguments)]
    k = k_start + len(arguments)
    if cap is None:
        return terms, k - 1, 0.0

    remainder = math.inf
    for _ in range(DEFAULTS.max_tail_levels):
        argument = cap.value(k)
        if argument == 0.0 and cap.slope == 0.0:
            return terms, k - 1, 0.0
        term = constant * math.ldexp(transform(argument), -k)
        if argument > cap.slope:
            ratio = 0.5 * (1.0 + cap.slope / argument)
            remainder = term / (1.0 - ratio)
            if remainder <= tail_tolerance:
                return terms, k - 1, remainder
        terms.append((k, term))
        k += 1
    raise TailTooLoose(remainder, tail_tolerance)


def _report(
    terms: List[Tuple[int, float]],
    truncation_k: int,
    tail: float,
    formula_id: str,
    formula: str,
    **parameters: object,
) -> BoundReport:
    value = math.fsum(term for _, term in terms) + tail
    return BoundReport(
        bound_value=value,
        formula_id=formula_id,
        formula=formula,
        per_level_terms=tuple(terms),
        truncation_k=truncation_k,
        tail_estimate=tail,
        parameters=dict(parameters),
    )


def maximal_bound(env: PsiEnvelope, cardinality: int, absolute: bool = False) -> float:
    """psi*^-1(log n), or psi*^-1(log 2n) for the supremum of |X_t|."""
    if cardinality < 1:
        raise OutOfRange("cardinality", cardinality, "[1, inf)")
    log_call("bound_engine", "maximal_bound", env=env, cardinality=cardinality, absolute=absolute)
    y = math.log(2 * cardinality) if absolute else math.log(cardinality)
    value = psi_star_inverse(env, y)
    log_result("bound_engine", "maximal_bound", value)
    return value


def mi_bound(env: PsiEnvelope, mi: float, variant: str = EXPECTATION) -> float:
    """psi*^-1(I), or psi*^-1(I + log 2) for E|X_W|; infinite I gives inf."""
    if mi < 0 or math.isnan(mi):
        raise OutOfRange("mi", mi, "[0, inf]")
    if variant not in (EXPECTATION, ABSOLUTE_EXPECTATION, EXPECTED_ABSOLUTE):
        raise ValueError(f"unknown mi_bound variant {variant!r}")
    log_call("bound_engine", "mi_bound", env=env, mi=mi, variant=variant)
    if math.isinf(mi):
        value = math.inf
    else:
        value = psi_star_inverse(env, mi + LOG2 if variant == EXPECTED_ABSOLUTE else mi)
    log_result("bound_engine", "mi_bound", value)
    return value


def dudley_bound(series: LevelSeries, tail_tolerance: float = DEFAULTS.tail_tolerance) -> BoundReport:
    """6 * sum 2^-k sqrt(log N_k)."""
    log_call("bound_engine", "dudley_bound", k_start=series.k_start, levels=len(series.values))
    terms, truncation_k, tail = _sum_levels(
        series.k_start, series.values, _series_cap(series), 6.0, math.sqrt, tail_tolerance
    )
    report = _report(
        terms, truncation_k, tail, "dudley", "6 * sum_k 2^-k * sqrt(log N(T, d, 2^-k))", k_start=series.k_start
    )
    log_result("bound_engine", "dudley_bound", report)
    return report


def chained_bound(
    env: PsiEnvelope,
    series: LevelSeries,
    variant: str = EXPECTATION,
    tail_tolerance: float = DEFAULTS.tail_tolerance,
) -> BoundReport:
    """Chained mutual information bound over per-level I([W]_k; X_T).

    Subgaussian: 3 * 2^-k * sqrt(2 sigma^2 I_k) per level, i.e.
    3 sqrt(2) * 2^-k * sqrt(I_k) at sigma^2 = 1. General envelopes:
    3 sqrt(2) * 2^-k * psi*^-1(I_k). The absolute variant adds log 2 to
    every I_k.

    Raises:
        MissingTailCap: Analytic-cap series without a cap
        TailTooLoose: Tail still above tolerance at the iteration cap
    """
    if variant not in (EXPECTATION, ABSOLUTE):
        raise ValueError(f"unknown chained_bound variant {variant!r}")
    log_call("bound_engine", "chained_bound", env=env, k_start=series.k_start, levels=len(series.values), variant=variant)
    shift = LOG2 if variant == ABSOLUTE else 0.0
    cap = _series_cap(series)
    if cap is None and shift > 0:
        # log 2 persists at every level past the last entry
        cap = TailCap.constant(0.0)
    if cap is not None:
        cap = TailCap(slope=cap.slope, intercept=cap.intercept + shift, kind=cap.kind)
    arguments = [value + shift for value in series.values]

    if env.is_subgaussian:
        constant, transform = 3.0 * math.sqrt(2.0 * env.sigma2), math.sqrt
        formula = "3 * sum_k 2^-k * sqrt(2 sigma^2 I([W]_k; X_T))"
    else:
        constant, transform = 3.0 * SQRT2, (lambda y: psi_star_inverse(env, y))
        formula = "3 sqrt(2) * sum_k 2^-k * psi*^-1(I([W]_k; X_T))"
    if shift:
        formula = formula.replace("X_T)", "X_T) + log 2")

    terms, truncation_k, tail = _sum_levels(series.k_start, arguments, cap, constant, transform, tail_tolerance)
    report = _report(
        terms,
        truncation_k,
        tail,
        "chained_mi" if variant == EXPECTATION else "chained_mi_absolute",
        formula,
        k_start=series.k_start,
        envelope=str(env),
    )
    log_result("bound_engine", "chained_bound", report)
    return report


def small_subset_bound(
    alpha: float,
    series1: LevelSeries,
    series2: LevelSeries,
    tail_tolerance: float = DEFAULTS.tail_tolerance,
) -> BoundReport:
    """6 * sum 2^-k sqrt(alpha log N1_k + (1 - alpha) log N2_k + H(alpha)).

    Pass the full-space series as series2 to use N(T, d, .) in place of N(T2, d, .).

    Raises:
        RangeMismatch: The two series do not cover the same levels
    """
    h_alpha = binary_entropy(alpha)
    if series1.k_start != series2.k_start or len(series1.values) != len(series2.values):
        raise RangeMismatch(
            f"series cover k={series1.k_start}..{series1.k_end} and k={series2.k_start}..{series2.k_end}"
        )
    log_call("bound_engine", "small_subset_bound", alpha=alpha, k_start=series1.k_start, levels=len(series1.values))

    zero = TailCap.constant(0.0)
    cap1 = _series_cap(series1) if alpha > 0 else zero
    cap2 = _series_cap(series2) if alpha < 1 else zero
    if cap1 is None and cap2 is None and h_alpha == 0.0:
        cap = None
    else:
        cap = TailCap.combine(alpha, cap1 or zero, cap2 or zero, h_alpha)

    arguments = [
        alpha * v1 + (1.0 - alpha) * v2 + h_alpha for v1, v2 in zip(series1.values, series2.values)
    ]
    terms, truncation_k, tail = _sum_levels(series1.k_start, arguments, cap, 6.0, math.sqrt, tail_tolerance)
    report = _report(
        terms,
        truncation_k,
        tail,
        "small_subset",
        "6 * sum_k 2^-k * sqrt(alpha log N(T1, d, 2^-k) + (1 - alpha) log N(T2, d, 2^-k) + H(alpha))",
        alpha=alpha,
        k_start=series1.k_start,
    )
    log_result("bound_engine", "small_subset_bound", report)
    return report


def lipschitz_net_bound(
    expected_lipschitz: float,
    env: PsiEnvelope,
    candidates: Sequence[Tuple[float, float]],
) -> LipschitzResult:
    """min over candidate scales of eps * E[C] + psi*^-1(I_eps), ties to the smallest eps."""
    if not candidates:
        raise EmptyCandidates()
    if expected_lipschitz < 0:
        raise OutOfRange("expected_lipschitz", expected_lipschitz, "[0, inf)")
    log_call("bound_engine", "lipschitz_net_bound", expected_lipschitz=expected_lipschitz, candidates=len(candidates))
    best: Optional[LipschitzResult] = None
    for scale, mi in sorted(candidates, key=lambda candidate: candidate[0]):
        if not scale > 0:
            raise OutOfRange("scale", scale, "(0, inf)")
        value = scale * expected_lipschitz + mi_bound(env, mi)
        if best is None or value < best.bound:
            best = LipschitzResult(best_scale=scale, bound=value)
    log_result("bound_engine", "lipschitz_net_bound", best)
    return best


def tail_bound(
    env: PsiEnvelope,
    mode: str,
    cardinality: int,
    u: float,
    mi: Optional[float] = None,
) -> TailBoundResult:
    """Tail probability bound for sup X_t ("sup") or X_W ("selected").

    sup: P[sup X_t >= psi*^-1(log|T| + u)] <= exp(-u).
    selected: P[X_W >= psi*^-1(I + u)] <= min{(I + log(2 - e^(-I-u))) / (I + u), e^(log|T| - I - u)}.

    Raises:
        UndefinedAtZero: selected mode with I = u = 0
    """
    if u < 0 or math.isnan(u):
        raise OutOfRange("u", u, "[0, inf)")
    if cardinality < 1:
        raise OutOfRange("cardinality", cardinality, "[1, inf)")
    log_call("bound_engine", "tail_bound", env=env, mode=mode, cardinality=cardinality, u=u, mi=mi)
    log_t = math.log(cardinality)

    if mode == "sup":
        result = TailBoundResult(
            probability=min(1.0, math.exp(-u)),
            threshold=psi_star_inverse(env, log_t + u),
            mode=mode,
        )
    elif mode == "selected":
        if mi is None or mi < 0 or not math.isfinite(mi):
            raise OutOfRange("mi", mi if mi is not None else math.nan, "[0, inf)")
        total = mi + u
        if total == 0:
            raise UndefinedAtZero()
        information_branch = (mi + math.log(2.0 - math.exp(-total))) / total
        cardinality_branch = math.exp(log_t - total)
        additive = None
        if env.is_subgaussian:
            additive = math.sqrt(2.0 * env.sigma2 * mi) + math.sqrt(2.0 * env.sigma2 * u)
        result = TailBoundResult(
            probability=min(1.0, max(0.0, min(information_branch, cardinality_branch))),
            threshold=psi_star_inverse(env, total),
            mode=mode,
            additive_threshold=additive,
        )
    else:
        raise ValueError(f"unknown tail mode {mode!r}")
    log_result("bound_engine", "tail_bound", result)
    return result


def scalar_report(value: float, formula_id: str, formula: str, **parameters: object) -> ScalarBound:
    """Wrap a closed-form bound for the report writer."""
    return ScalarBound(value=value, formula_id=formula_id, formula=formula, parameters=dict(parameters))
