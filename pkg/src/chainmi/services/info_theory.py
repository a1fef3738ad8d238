"""Discrete information measures in nats."""

import math
from typing import Any, Sequence, Tuple

import numpy as np
from scipy.special import entr, logsumexp, rel_entr

from chainmi.core.exceptions import EmptySample, NotNormalized, OutOfRange, SupportMismatch
from chainmi.core.logger import log_call, log_result
from chainmi.models.information import JointDistribution

VECTOR_TOL = 1e-9


def _probability_vector(values: Sequence[float]) -> np.ndarray:
    p = np.asarray(values, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise SupportMismatch(f"expected a non-empty probability vector, got shape {p.shape}")
    total = float(p.sum())
    if not np.all(np.isfinite(p)) or np.any(p < 0) or abs(total - 1.0) > VECTOR_TOL:
        raise NotNormalized(total)
    return p


def _matching_pair(p: Sequence[float], q: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    p, q = _probability_vector(p), _probability_vector(q)
    if p.shape != q.shape:
        raise SupportMismatch(f"supports differ: {p.size} vs {q.size} outcomes")
    return p, q


def entropy(dist: Sequence[float]) -> float:
    """Shannon entropy -sum p log p with 0 log 0 = 0."""
    p = _probability_vector(dist)
    log_call("info_theory", "entropy", outcomes=p.size)
    value = float(entr(p).sum())
    log_result("info_theory", "entropy", value)
    return value


def binary_entropy(alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise OutOfRange("alpha", alpha, "[0, 1]")
    log_call("info_theory", "binary_entropy", alpha=alpha)
    value = float(entr(alpha) + entr(1.0 - alpha))
    log_result("info_theory", "binary_entropy", value)
    return value


def kl_divergence_flagged(p: Sequence[float], q: Sequence[float]) -> Tuple[float, bool]:
    """D(p || q) and whether it is finite (p absolutely continuous w.r.t. q)."""
    p, q = _matching_pair(p, q)
    log_call("info_theory", "kl_divergence", outcomes=p.size)
    value = float(rel_entr(p, q).sum())
    finite = not math.isinf(value)
    value = max(0.0, value) if finite else math.inf
    log_result("info_theory", "kl_divergence", value)
    return value, finite


def kl_divergence(p: Sequence[float], q: Sequence[float]) -> float:
    """D(p || q); inf when some q(i) = 0 < p(i)."""
    return kl_divergence_flagged(p, q)[0]


def joint_entropy(joint: JointDistribution) -> float:
    log_call("info_theory", "joint_entropy", shape=joint.shape)
    value = float(entr(joint.table).sum())
    log_result("info_theory", "joint_entropy", value)
    return value


def conditional_entropy(joint: JointDistribution) -> float:
    """H(X | W) = H(W, X) - H(W)."""
    log_call("info_theory", "conditional_entropy", shape=joint.shape)
    value = max(0.0, joint_entropy(joint) - float(entr(joint.marginal_w()).sum()))
    log_result("info_theory", "conditional_entropy", value)
    return value


def mutual_information(joint: JointDistribution) -> float:
    """I(W; X) = D(P_WX || P_W x P_X)."""
    log_call("info_theory", "mutual_information", shape=joint.shape)
    product = np.outer(joint.marginal_w(), joint.marginal_x())
    value = max(0.0, float(rel_entr(joint.table, product).sum()))
    log_result("info_theory", "mutual_information", value)
    return value


def plug_in_mi_labels(w_labels: Any, x_labels: Any) -> float:
    """Plug-in MI from two aligned label arrays.

    Biased upward for small samples, roughly (|W| - 1)(|X| - 1) / (2n).
    """
    w_labels = np.asarray(w_labels)
    x_labels = np.asarray(x_labels)
    if w_labels.size == 0:
        raise EmptySample()
    if w_labels.shape != x_labels.shape:
        raise SupportMismatch(f"{w_labels.size} w labels for {x_labels.size} x labels")
    log_call("info_theory", "plug_in_mi_labels", samples=w_labels.size)
    _, w_codes = np.unique(w_labels, return_inverse=True)
    _, x_codes = np.unique(x_labels, return_inverse=True)
    counts = np.zeros((w_codes.max() + 1, x_codes.max() + 1))
    np.add.at(counts, (w_codes.ravel(), x_codes.ravel()), 1.0)
    return mutual_information(JointDistribution.from_counts(counts))


def plug_in_mi(samples: Sequence[Tuple[Any, Any]]) -> float:
    """Plug-in MI of (w_label, x_label) pairs."""
    if len(samples) == 0:
        raise EmptySample()
    w_labels = [w for w, _ in samples]
    x_labels = [x for _, x in samples]
    return plug_in_mi_labels(w_labels, x_labels)


def dv_objective(p: Sequence[float], q: Sequence[float], f: Sequence[float]) -> float:
    """E_p[f] - log E_q[exp f]; never above D(p || q)."""
    p, q = _matching_pair(p, q)
    f = np.asarray(f, dtype=float)
    log_call("info_theory", "dv_objective", outcomes=p.size)
    support = p > 0
    expectation = float(np.dot(p[support], f[support]))
    value = expectation - float(logsumexp(f, b=q))
    log_result("info_theory", "dv_objective", value)
    return value


def dv_gap(p: Sequence[float], q: Sequence[float]) -> float:
    """D(p || q) minus the variational objective at f* = log(p / q); zero up to rounding."""
    p, q = _matching_pair(p, q)
    log_call("info_theory", "dv_gap", outcomes=p.size)
    divergence, finite = kl_divergence_flagged(p, q)
    if not finite:
        raise SupportMismatch("p is not absolutely continuous with respect to q")
    with np.errstate(divide="ignore"):
        f_star = np.where(p > 0, np.log(p) - np.log(np.where(q > 0, q, 1.0)), -np.inf)
    gap = divergence - dv_objective(p, q, f_star)
    log_result("info_theory", "dv_gap", gap)
    return gap
