"""Exception types shared across the package."""


class GestureGraphError(Exception):
    """Base class for all domain errors raised by this package."""


class DocumentError(GestureGraphError):
    """A document on disk is malformed, inconsistent, or the wrong version."""


class ConfigError(GestureGraphError):
    """A configuration file or parameter value is invalid."""


class GraphError(GestureGraphError):
    """Motion-graph construction or validation failed."""


class SearchError(GestureGraphError):
    """Path retrieval could not produce a valid result."""


class SamplingError(GestureGraphError):
    """Diffusion sampling failed or produced non-finite values."""
