"""Exception hierarchy shared by the library and the command line."""


class KappaSensError(Exception):
    """Base class for all errors raised by kappasens."""


class GraphError(KappaSensError, ValueError):
    """Structurally invalid graph (size, self-loops, bad vertex indices)."""


class EdgeListParseError(GraphError):
    """Malformed or inconsistent edge-list file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class AssumptionError(KappaSensError):
    """A graph violates one of the spectral standing assumptions A1-A3.

    ``assumption`` names the first failing check ("A1", "A2" or "A3") and
    ``report`` carries the full :class:`~kappasens.spectral.AssumptionReport`
    when one could be computed.
    """

    def __init__(self, message, assumption=None, report=None):
        super().__init__(message)
        self.assumption = assumption
        self.report = report


class BranchAmbiguityError(KappaSensError):
    """The eigenvalue branch attaining gamma is not locally unique."""

    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class StaleFactorizationError(KappaSensError):
    """A bordered factorization was used with a graph it was not built from."""


class IntegrationError(KappaSensError):
    """Adaptive integration failed; ``t_last`` is the last accepted time."""

    def __init__(self, message, t_last=None):
        super().__init__(message)
        self.t_last = t_last


class ConfigError(KappaSensError, ValueError):
    """Invalid or inconsistent algorithm / simulation configuration."""
