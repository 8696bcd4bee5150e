"""Exception hierarchy shared by every module in the package."""

from __future__ import annotations


class CagError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfig(CagError, ValueError):
    """A configuration value violates its constraints.

    ``field`` names the offending parameter (or ``"budget"`` for the
    combined token-budget check).
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class InvalidTemplate(CagError, ValueError):
    pass


class InvalidArg(CagError, ValueError):
    pass


class BackendError(CagError):
    pass


class BackendUnavailable(BackendError):
    pass


class ContextOverflow(BackendError):
    def __init__(self, needed: int, available: int):
        super().__init__(f"prompt needs {needed} tokens but only {available} are left")
        self.needed = needed
        self.available = available


class GenerationFailed(BackendError):
    def __init__(self, message: str, status: int | None = None, body: str | None = None):
        super().__init__(message)
        self.status = status
        self.body = body


class SessionClosed(BackendError):
    pass


class FormatError(CagError, ValueError):
    """Malformed corpus input; ``index`` locates the bad record when known."""

    def __init__(self, message: str, index: int | None = None):
        prefix = f"record {index}: " if index is not None else ""
        super().__init__(prefix + message)
        self.index = index


class IoError(CagError, OSError):
    pass
