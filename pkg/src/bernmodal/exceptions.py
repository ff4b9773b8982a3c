"""Exception types raised by bernmodal."""


class BernmodalError(Exception):
    """Base class for package errors."""


class DegreeRangeError(BernmodalError, OverflowError):
    """Requested degree is outside the range the dual coefficients support."""


class ExprSyntaxError(BernmodalError, ValueError):
    def __init__(self, message: str, offset: int, expected=()):
        self.message = message
        self.offset = offset
        self.expected = tuple(sorted(expected))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class ExprEvaluationError(BernmodalError, ArithmeticError):
    """Domain error while evaluating an expression (log of a negative, x/0, ...)."""


class SingularSystemError(BernmodalError, ArithmeticError):
    def __init__(self, message: str, condition: float | None = None, step: int | None = None):
        self.message = message
        self.condition = condition
        self.step = step
        parts = [message]
        if condition is not None:
            parts.append(f"condition estimate {condition:.3e}")
        if step is not None:
            parts.append(f"time step {step}")
        super().__init__("; ".join(parts))


class ConfigError(BernmodalError, ValueError):
    """Invalid problem configuration."""
