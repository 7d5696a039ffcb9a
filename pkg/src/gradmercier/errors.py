"""Exception types shared across the package."""


class GradMercierError(Exception):
    """Base class for all package errors."""


class ConfigurationError(GradMercierError):
    """Invalid user-supplied parameter or config file."""


class GeometryError(GradMercierError):
    """Internal stencil/geometry inconsistency (should not happen on valid grids)."""


class NonConvergenceError(GradMercierError):
    """An iteration hit its budget before reaching tolerance.

    Carries the residual (or difference) history so callers can inspect
    what the iteration was doing.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class DivergenceError(GradMercierError):
    """An iteration produced NaN/overflow or grew beyond the safety cap."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class DiagnosticError(GradMercierError):
    """A diagnostic check detected a violated invariant (e.g. non-Cauchy trace)."""


class OracleError(GradMercierError):
    """A verification oracle was asked for a case outside its validity range."""
