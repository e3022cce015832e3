"""Exception types shared across the package."""


class CausalKGError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(CausalKGError):
    """Bad or missing configuration (including absent credentials)."""


class GraphError(CausalKGError, ValueError):
    """A concept graph or graph document violates an invariant."""


class BackendError(CausalKGError):
    """The chat backend failed after exhausting transport retries."""


class TruncatedResponse(BackendError):
    """The backend cut the completion short (length limit)."""


class MalformedResponse(CausalKGError):
    """Model output did not follow the requested bracket format."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class ValidationError(CausalKGError, ValueError):
    """Input data (reviews, reference graph, mappings) failed validation."""
