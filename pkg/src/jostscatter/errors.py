"""Exception types shared across the package."""


class ScatteringError(Exception):
    """Base class for domain and numerical failures raised by this package."""


class BranchPointError(ScatteringError):
    """Energy coincides with a channel threshold (square-root branch point)."""


class UnreachableError(ScatteringError):
    """Requested Jost matrix cannot be reached with the given rotation angle."""


class IntegrationError(ScatteringError):
    """Adaptive integration failed: step underflow, step budget, or overflow."""


class ConvergenceError(ScatteringError):
    """An iterative procedure failed to converge (radial tail test, Newton)."""


class ValidationError(ValueError):
    """Invalid user-supplied configuration or input."""
