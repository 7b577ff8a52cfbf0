"""Exception types shared across the package."""


class RbeSlabError(Exception):
    pass


class ConfigError(RbeSlabError, ValueError):
    """Invalid configuration value or grid construction request.

    ``key`` names the offending configuration key when there is one.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class DegeneratePairError(RbeSlabError, ValueError):
    pass


class ConvergenceError(RbeSlabError):
    """The fixed-point iteration hit ``max_iter`` without reaching ``tol``."""

    def __init__(self, message, trace=None, field=None):
        super().__init__(message)
        self.trace = trace
        self.field = field


class StateCorruptionError(RbeSlabError):
    def __init__(self, message, iteration, trace=None):
        super().__init__(message)
        self.iteration = iteration
        self.trace = trace


class RatioUndefinedError(RbeSlabError, ValueError):
    pass
