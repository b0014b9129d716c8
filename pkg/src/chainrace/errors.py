"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain of the model (nonpositive power, zero interval, ...)."""


class InfeasibleError(DomainError):
    """The requested attack cannot be carried out with the given capacity."""

    def __init__(self, message: str, bound: float | None = None):
        super().__init__(message)
        self.bound = bound


class SolverError(RuntimeError):
    """The report-schedule solver failed to reach its convergence target."""

    def __init__(self, message: str, best_iterate=None, residual_norm: float = float("nan")):
        super().__init__(f"{message} (residual norm {residual_norm:.3e})")
        self.best_iterate = best_iterate
        self.residual_norm = residual_norm


class ValidationError(ValueError):
    """A chain violated its timestamp regime; ``violations`` lists every problem found."""

    def __init__(self, violations):
        self.violations = list(violations)
        summary = "; ".join(str(v) for v in self.violations) or "invalid chain"
        super().__init__(summary)
