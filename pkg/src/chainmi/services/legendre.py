"""Legendre dual psi* of a tail envelope and its inverse."""

import math

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from chainmi.core.config import DEFAULTS
from chainmi.core.exceptions import BracketFailure, DomainCapReached, OutOfRange
from chainmi.core.logger import log_call, log_result
from chainmi.models.information import PsiEnvelope


def _dual_objective_bracket(env: PsiEnvelope, x: float) -> float:
    """Upper end of an interval holding the maximizer of lambda * x - psi(lambda)."""
    lam = 1.0
    while lam < env.lambda_max:
        step = lam * DEFAULTS.bracket_growth
        if step * x - env(step) < lam * x - env(lam):
            # concave objective already decreasing
            return min(step, env.lambda_max)
        lam = step
    return env.lambda_max


def psi_star(env: PsiEnvelope, x: float) -> float:
    """psi*(x) = sup over lambda >= 0 of lambda * x - psi(lambda).

    Raises:
        DomainCapReached: The maximizer sits at lambda_max
    """
    if x <= 0:
        return 0.0
    if env.is_subgaussian:
        return x * x / (2.0 * env.sigma2)

    log_call("legendre", "psi_star", env=env, x=x)
    upper = _dual_objective_bracket(env, x)
    result = minimize_scalar(
        lambda lam: env(lam) - lam * x,
        bounds=(0.0, upper),
        method="bounded",
        options={"xatol": DEFAULTS.dual_tol},
    )
    lam_star = float(result.x)
    if upper >= env.lambda_max and lam_star >= env.lambda_max * (1.0 - 1e-6):
        raise DomainCapReached(x, env.lambda_max)
    value = max(0.0, -float(result.fun))
    log_result("legendre", "psi_star", value)
    return value


def _psi_star_or_inf(env: PsiEnvelope, x: float) -> float:
    """psi*(x), or inf where the dual maximizer escapes lambda_max."""
    try:
        return psi_star(env, x)
    except DomainCapReached:
        return math.inf


def psi_star_inverse(env: PsiEnvelope, y: float) -> float:
    """Smallest x >= 0 with psi*(x) >= y.

    Envelopes growing linearly with slope s have psi* = inf past s; targets
    above psi*(s) then return s itself.

    Raises:
        OutOfRange: y < 0
        BracketFailure: psi* stays below y up to the expansion cap
    """
    if y < 0 or math.isnan(y):
        raise OutOfRange("y", y, "[0, inf)")
    if y == 0:
        return 0.0
    if math.isinf(y):
        return math.inf
    if env.is_subgaussian:
        return math.sqrt(2.0 * env.sigma2 * y)

    log_call("legendre", "psi_star_inverse", env=env, y=y)
    x_lo, x_hi = 0.0, 1.0
    for _ in range(DEFAULTS.bracket_steps):
        # strict, so brentq sees a sign change
        if _psi_star_or_inf(env, x_hi) > y:
            break
        x_lo, x_hi = x_hi, x_hi * DEFAULTS.bracket_growth
    else:
        raise BracketFailure(y, x_hi)

    # Shrink an infinite upper end onto a finite one or onto the domain edge
    while math.isinf(_psi_star_or_inf(env, x_hi)):
        if x_hi - x_lo <= DEFAULTS.dual_tol * max(1.0, x_hi):
            log_result("legendre", "psi_star_inverse", x_hi)
            return x_hi
        mid = 0.5 * (x_lo + x_hi)
        if _psi_star_or_inf(env, mid) > y:
            x_hi = mid
        else:
            x_lo = mid

    value = float(
        brentq(lambda x: psi_star(env, x) - y, x_lo, x_hi, xtol=1e-12, rtol=4 * np.finfo(float).eps)
    )
    log_result("legendre", "psi_star_inverse", value)
    return value


def chernoff_tail(env: PsiEnvelope, x: float) -> float:
    """Chernoff bound exp(-psi*(x)) on P[X >= x]."""
    log_call("legendre", "chernoff_tail", env=env, x=x)
    value = math.exp(-psi_star(env, x))
    log_result("legendre", "chernoff_tail", value)
    return value
