"""Exception types shared across the package."""


class WaveKinError(Exception):
    """Base class for all package errors."""


class DomainError(WaveKinError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(WaveKinError, ValueError):
    """A value falls outside a tabulated range."""


class ConfigError(WaveKinError, ValueError):
    """Invalid configuration; carries every violation found, not just the first."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class StateError(WaveKinError, RuntimeError):
    """A spectrum or intermediate state is not admissible (NaN, negative mass)."""
