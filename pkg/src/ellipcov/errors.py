"""Exception hierarchy shared by every module of the package."""


class EllipcovError(Exception):
    """Base class for all errors raised by ellipcov."""


class InvalidInput(EllipcovError, ValueError):
    """Malformed numerical input (wrong shape, non-finite entries, asymmetry)."""


class DegenerateScale(EllipcovError, ValueError):
    """A trace that must be positive is zero or negative."""


class InvalidShape(EllipcovError, ValueError):
    """A shape matrix handed to the sampler is not positive semidefinite."""


class DegenerateSample(EllipcovError, ValueError):
    """A sample vector is exactly zero and cannot be normalized."""


class InvalidSpec(EllipcovError, ValueError):
    """A structure specification is inconsistent with its dimension."""


class UnsupportedSpec(EllipcovError, NotImplementedError):
    """The requested operation has no implementation for this structure."""


class SingularMatrix(EllipcovError, ValueError):
    """A matrix that must be inverted is (numerically) singular."""


class NotExist(EllipcovError):
    """The estimator is not defined for the given sample size."""


class DegenerateData(EllipcovError):
    """Samples are confined to a proper subspace."""


class NoConvergence(EllipcovError):
    """An iterative method ran out of iterations.

    The best available iterate is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class Infeasible(EllipcovError):
    """The conic program has no feasible point."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class SolverFailure(EllipcovError):
    """The conic solver ended in a status other than optimal or infeasible."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution
