from __future__ import annotations

from typing import Optional


class BergmanError(ValueError):
    """Base class for every numerical failure raised by the package."""


class DomainError(BergmanError):
    pass


class ConfigError(BergmanError):
    pass


class NearZeroKernel(BergmanError):
    """Raised when |K(z,w̄)| drops below the kernel floor (the point is near Z₀)."""

    def __init__(self, message: str, value: Optional[complex] = None) -> None:
        super().__init__(message)
        self.value = value


class SingularMetric(BergmanError):
    """Raised when det G(z,w̄) is numerically zero (the point is near Z₁)."""

    def __init__(self, message: str, det: Optional[complex] = None) -> None:
        super().__init__(message)
        self.det = det


class NotPositiveDefinite(BergmanError):
    pass


class IllConditionedGram(BergmanError):
    def __init__(self, message: str, condition: float) -> None:
        super().__init__(message)
        self.condition = condition


class PoleProximityError(BergmanError):
    pass


class SeriesNotConverged(BergmanError):
    pass


class SignPatternError(BergmanError):
    pass


class ExphFailure(BergmanError):
    pass


class Unreachable(BergmanError):
    pass
