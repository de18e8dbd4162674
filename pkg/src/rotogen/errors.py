"""Exception hierarchy shared by every rotogen module."""


class RotogenError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(RotogenError, ValueError):
    """Invalid orbit-type parameters or other malformed numeric input."""


class PoleError(RotogenError, ValueError):
    """An angle sits on a pole of the cotangent sum."""


class SingularityError(RotogenError, ArithmeticError):
    """A point lies on (or numerically on) the singular set."""


class HFieldError(RotogenError):
    """Problems building or evaluating a mean-curvature field."""


class ParseError(HFieldError, ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvaluationError(HFieldError, ArithmeticError):
    def __init__(self, message, offset=None):
        where = "" if offset is None else f" (at offset {offset})"
        super().__init__(f"{message}{where}")
        self.offset = offset


class PatchTooLarge(RotogenError):
    """A startup patch reaches a denominator zero; the caller should shrink V."""


class StartupFailure(RotogenError):
    """Picard iteration could not be made to contract for any admissible V."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConsistencyError(RotogenError):
    """An internal numerical invariant was violated (never silently ignored)."""


class StepFailure(RotogenError):
    """The adaptive integrator hit its minimum step without meeting tolerance."""


class ConfigError(RotogenError, ValueError):
    def __init__(self, message, line=None, key=None):
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"{key}: "
        super().__init__(prefix + message)
        self.line = line
        self.key = key
