"""Custom exceptions for chainmi."""

from typing import Optional


class ChainMIError(Exception):
    """Base exception for chainmi."""

    pass


# --- metric spaces ---------------------------------------------------------


class MetricError(ChainMIError):
    """The distance data does not describe a usable metric space."""

    pass


class MalformedMatrix(MetricError):
    """Distance matrix is not square or has non-finite entries."""

    pass


class NegativeDistance(MetricError):
    """A distance entry is negative."""

    def __init__(self, i: int, j: int, value: float) -> None:
        self.i, self.j, self.value = i, j, value
        super().__init__(f"negative distance d[{i}][{j}] = {value}")


class NonzeroSelfDistance(MetricError):
    """A diagonal entry is not zero."""

    def __init__(self, i: int, value: float) -> None:
        self.i, self.value = i, value
        super().__init__(f"self distance d[{i}][{i}] = {value} is not zero")


class AsymmetricDistance(MetricError):
    """d[i][j] differs from d[j][i] beyond the tolerance."""

    def __init__(self, i: int, j: int) -> None:
        self.i, self.j = i, j
        super().__init__(f"asymmetric distance between points {i} and {j}")


class TriangleViolation(MetricError):
    """d[i][k] > d[i][j] + d[j][k] + tol."""

    def __init__(self, i: int, j: int, k: int) -> None:
        self.i, self.j, self.k = i, j, k
        super().__init__(f"triangle inequality violated for (i={i}, j={j}, k={k})")


class DegenerateSpace(MetricError):
    """The space has diameter zero, so no dyadic scale index exists."""

    def __init__(self) -> None:
        super().__init__("space has diameter 0")


class ScaleMismatch(MetricError):
    """k_min does not satisfy 2^-(k_min-1) >= diameter."""

    def __init__(self, k_min: int, diameter: float) -> None:
        self.k_min, self.diameter = k_min, diameter
        super().__init__(
            f"k_min={k_min} gives 2^-(k_min-1)={2.0 ** (1 - k_min)} < diameter {diameter}"
        )


class ExactTooLarge(MetricError):
    """Exhaustive covering search requested on too many points."""

    def __init__(self, size: int, cap: int) -> None:
        self.size, self.cap = size, cap
        super().__init__(f"exact covering number needs |T| <= {cap}, got {size}")


class HierarchyInvariantError(MetricError):
    """A partition hierarchy breaks ball containment or refinement."""

    pass


class PhaseOutOfRange(MetricError):
    """A circle phase lies outside [0, 2pi) or the level is below -1."""

    def __init__(self, k: int, phase: float) -> None:
        self.k, self.phase = k, phase
        super().__init__(f"circle cell undefined for k={k}, phase={phase}; need k >= -1 and 0 <= phase < 2pi")


# --- information measures --------------------------------------------------


class InformationError(ChainMIError):
    """Invalid input to an information measure."""

    pass


class NotNormalized(InformationError):
    """Probabilities are negative or do not sum to one."""

    def __init__(self, total: float) -> None:
        self.total = total
        super().__init__(f"probabilities must be >= 0 and sum to 1 (sum = {total!r})")


class OutOfRange(InformationError):
    """A parameter lies outside its admissible range."""

    def __init__(self, name: str, value: float, allowed: str) -> None:
        self.name, self.value = name, value
        super().__init__(f"{name}={value} outside {allowed}")


class SupportMismatch(InformationError):
    """Two distributions live on different supports."""

    pass


class EmptySample(InformationError):
    """An estimator received no samples."""

    def __init__(self) -> None:
        super().__init__("at least one sample is required")


class EnvelopeError(InformationError):
    """A psi envelope is not convex or does not vanish at zero."""

    pass


class DomainCapReached(InformationError):
    """The Legendre dual maximizer reached lambda_max."""

    def __init__(self, x: float, lambda_max: float) -> None:
        self.x, self.lambda_max = x, lambda_max
        super().__init__(
            f"psi* maximizer for x={x} escapes lambda_max={lambda_max}; envelope grows too slowly"
        )


class BracketFailure(InformationError):
    """The inverse dual could not bracket the target value."""

    def __init__(self, y: float, x_hi: float) -> None:
        self.y, self.x_hi = y, x_hi
        super().__init__(f"psi*(x) < {y} for all x <= {x_hi}")


# --- bounds ------------------------------------------------------------------


class BoundError(ChainMIError):
    """A bound cannot be evaluated on the given inputs."""

    pass


class NegativeValue(BoundError):
    """A level value is negative or not finite."""

    def __init__(self, k: int, value: float) -> None:
        self.k, self.value = k, value
        super().__init__(f"level k={k} has invalid value {value}")


class MissingTailCap(BoundError):
    """Analytic-cap truncation requested without a cap."""

    def __init__(self) -> None:
        super().__init__("series uses analytic-cap tail mode but no tail cap was supplied")


class TailTooLoose(BoundError):
    """The series tail did not fall below the requested tolerance."""

    def __init__(self, tail: float, tolerance: float) -> None:
        self.tail, self.tolerance = tail, tolerance
        super().__init__(f"tail estimate {tail} exceeds tolerance {tolerance} at the iteration cap")


class RangeMismatch(BoundError):
    """Two level series are not aligned on the same k range."""

    pass


class EmptyCandidates(BoundError):
    """No candidate scales were supplied."""

    def __init__(self) -> None:
        super().__init__("at least one (scale, mi) candidate is required")


class UndefinedAtZero(BoundError):
    """Selected tail bound evaluated at I = u = 0."""

    def __init__(self) -> None:
        super().__init__("selected tail bound is undefined for I = u = 0")


# --- processes ----------------------------------------------------------------


class ProcessError(ChainMIError):
    """Invalid process, selector or learning problem."""

    pass


class InvalidProcessSpec(ProcessError):
    """Process or selector parameters are inconsistent."""

    pass


class EmptyRealization(ProcessError):
    """A selector received an empty realization."""

    def __init__(self) -> None:
        super().__init__("realization is empty")


class KernelInvalid(ProcessError):
    """A learning problem's kernel, losses or example law is malformed."""

    pass


class EnumerationCapExceeded(ProcessError):
    """|Z|^n is above the enumeration cap."""

    def __init__(self, outcomes: int, cap: int) -> None:
        self.outcomes, self.cap = outcomes, cap
        super().__init__(f"{outcomes} training sets exceed the enumeration cap {cap}")


# --- configuration --------------------------------------------------------------


class ConfigError(ChainMIError):
    """Run configuration could not be read or validated."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
