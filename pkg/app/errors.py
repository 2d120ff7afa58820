from __future__ import annotations

from typing import Any, List, Optional

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class VortexError(Exception):
    """Base error; `exit_code` is what the CLI returns when it escapes."""

    exit_code = EXIT_NUMERICAL


class ConfigError(VortexError):
    exit_code = EXIT_VALIDATION

    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


class ConstraintError(VortexError):
    """Closure or coupling relation violated beyond tolerance."""

    def __init__(self, message: str, residual: Any = None):
        self.residual = residual
        super().__init__(message)


class AliasingError(VortexError):
    def __init__(self, grid_size: int, required: int):
        self.grid_size = grid_size
        self.required = required
        super().__init__(
            f"grid of {grid_size} points aliases the mode cutoff; need at least {required}"
        )


class StabilityError(VortexError):
    def __init__(self, dt: float, bound: float):
        self.dt = dt
        self.bound = bound
        super().__init__(f"dt={dt:.3e} exceeds the RK4 stability bound {bound:.3e}")


class BlowUpError(VortexError):
    """Run produced non-finite or runaway values; `partial` holds what was valid."""

    def __init__(self, message: str, partial: Optional[Any] = None):
        self.partial = partial
        super().__init__(message)


class UnsupportedShapeError(VortexError):
    pass


class ConnectivityError(VortexError):
    exit_code = EXIT_VALIDATION

    def __init__(self, components: int):
        self.components = components
        super().__init__(f"domain mask is not connected ({components} components)")


class ConvergenceError(VortexError):
    def __init__(self, message: str, iterations: Optional[int] = None):
        self.iterations = iterations
        super().__init__(message)


class IncompleteSpectrumError(VortexError):
    def __init__(self, largest: float, required: float):
        self.largest = largest
        self.required = required
        super().__init__(
            f"eigenvalue list stops at lambda={largest:.6g}; levels need every "
            f"lambda_m in ({largest:.6g}, {required:.6g}]; request more eigenvalues"
        )
