"""Exception types shared across the toolchain."""


class QcpuError(Exception):
    """Base class for every error raised by this package."""


class WidthError(QcpuError, ValueError):
    """Register, instruction or matrix widths do not agree."""


class MemoryGuardError(QcpuError):
    """A dense simulation would exceed the configured qubit budget."""


class AsmSyntaxError(QcpuError, ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
        self.message = message


class BoundViolationError(QcpuError, AssertionError):
    """An observed probability deviation exceeded the analytic bound."""
