# resonance_lab/errors.py

class ResonanceLabError(Exception):
    """Base class for every error raised by resonance_lab."""


# --- Potential / input validation ---

class PotentialError(ResonanceLabError, ValueError):
    pass


class InterfaceAmbiguityError(PotentialError):
    """A two-sided derivative was requested where the one-sided values differ."""


class OrderValidationError(PotentialError):
    """Declared vanishing orders disagree with the derivative oracle."""


class DegenerateOrderError(PotentialError):
    """Vanishing orders are undefined (V vanishes identically at an endpoint)."""


class WindowAdmissibilityError(ResonanceLabError, ValueError):
    """Energy or window not strictly above sup V."""


class OutOfRangeError(ResonanceLabError, ValueError):
    pass


class BranchCutError(ResonanceLabError, ValueError):
    """Re(z - V) <= 0 somewhere on the integration path."""


class IndexNotInSetError(ResonanceLabError, ValueError):
    pass


class JetDepthError(ResonanceLabError, ValueError):
    """Not enough Taylor degree left to run the WKB recursion to the requested order."""


class RunConfigError(ResonanceLabError, ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        location = ""
        if key is not None:
            location = f"[{key}]"
        if line is not None:
            location += f" (line {line})"
        super().__init__(f"{location} {message}".strip())
        self.key = key
        self.line = line


# --- Numerical failures (exit code 4) ---

class NumericalError(ResonanceLabError, RuntimeError):
    pass


class NoConvergenceError(NumericalError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class IntegrationBudgetError(NumericalError):
    def __init__(self, h: float, tol: float, evaluations: int):
        super().__init__(
            f"Integration budget exceeded after {evaluations} RHS evaluations (h={h}, tol={tol})."
        )
        self.h = h
        self.tol = tol
        self.evaluations = evaluations


class ContourError(NumericalError):
    """The contour kept passing through (or too close to) a zero."""


class FlowUniquenessError(NumericalError):
    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


class TrappingError(NumericalError):
    """A classical trajectory is confined between two turning points."""


class GapConsistencyError(NumericalError):
    pass
