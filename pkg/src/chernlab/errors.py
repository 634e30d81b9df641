"""Exception hierarchy shared by the numerical modules."""


class ChernlabError(Exception):
    """Base class for library errors."""


class NotHermitianError(ChernlabError, ValueError):
    pass


class ConvergenceError(ChernlabError, ArithmeticError):
    """Iterative routine hit its cap before reaching the requested accuracy."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class GaplessError(ChernlabError, ValueError):
    """The bands touch (or come numerically too close) where a gap is required."""


class UnderResolvedError(ChernlabError, ValueError):
    """A discretization is too coarse for the requested quantity; refine it."""


class IllConditionedError(ChernlabError, ArithmeticError):
    """A linear system is too close to singular to be trusted."""
