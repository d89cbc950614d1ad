"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes (config 2, backend 3, input 4).
"""


class ScopeError(Exception):
    """Base class for all package errors."""


class ConfigError(ScopeError, ValueError):
    """Invalid configuration: bad backend spec, out-of-range parameter, dimension mismatch."""


class InputError(ScopeError, ValueError):
    """The text or corpus handed to the pipeline is unusable."""


class BackendError(ScopeError, RuntimeError):
    """A model backend failed. ``retryable`` marks transport-level failures."""

    def __init__(self, message: str, *, provider: str = "", retryable: bool = True):
        super().__init__(message)
        self.provider = provider
        self.retryable = retryable


class GenerationError(BackendError):
    """The summarizer answered but produced no usable text."""

    def __init__(self, message: str, *, provider: str = ""):
        super().__init__(message, provider=provider, retryable=False)
