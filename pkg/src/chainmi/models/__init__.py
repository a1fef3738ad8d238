"""Data models for chainmi."""

from chainmi.models.information import JointDistribution, PsiEnvelope
from chainmi.models.metric import EpsilonNet, FiniteMetricSpace, PartitionHierarchy, PartitionLevel
from chainmi.models.process import (
    CanonicalProcessSpec,
    LearningProblem,
    LearningReport,
    MCEstimate,
    SelectionRule,
    Skipped,
)
from chainmi.models.series import (
    BoundReport,
    LevelSeries,
    LipschitzResult,
    ScalarBound,
    TailBoundResult,
    TailCap,
)

__all__ = [
    "JointDistribution",
    "PsiEnvelope",
    "EpsilonNet",
    "FiniteMetricSpace",
    "PartitionHierarchy",
    "PartitionLevel",
    "CanonicalProcessSpec",
    "LearningProblem",
    "LearningReport",
    "MCEstimate",
    "SelectionRule",
    "Skipped",
    "BoundReport",
    "LevelSeries",
    "LipschitzResult",
    "ScalarBound",
    "TailBoundResult",
    "TailCap",
]
