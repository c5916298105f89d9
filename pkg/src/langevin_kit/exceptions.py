"""Exception and warning types raised across the package."""


class LangevinKitError(Exception):
    """Base class for all package errors."""


class DimensionError(LangevinKitError, ValueError):
    """A vector or matrix does not have the expected dimension."""


class HypothesisError(LangevinKitError, ValueError):
    """A hard step-size or constant hypothesis is violated."""


class HypothesisWarning(UserWarning):
    """A soft hypothesis of a guarantee does not hold for the requested run."""


class MissingOracleError(LangevinKitError, AttributeError):
    """The target lacks an oracle (Hessian, minimizer, lower bound) needed here."""


class InfeasibleError(LangevinKitError):
    """The requested precision is below the floor of the chosen bound.

    Attributes
    ----------
    bound : str
        Name of the bound that was inverted.
    floor : float
        Infimum of the bound over all admissible step sizes and iteration counts.
    epsilon : float
        The requested precision.
    """

    def __init__(self, bound, floor, epsilon):
        self.bound = bound
        self.floor = float(floor)
        self.epsilon = float(epsilon)
        super().__init__(
            f"precision {epsilon!r} unreachable with bound {bound!r}: floor is {floor!r}"
        )


class ConfigError(LangevinKitError, ValueError):
    """An experiment configuration could not be parsed or validated."""
