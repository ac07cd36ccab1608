"""Exception types shared across the package."""


class MairlError(Exception):
    """Base class for package errors."""


class DimensionMismatchError(MairlError, ValueError):
    """Shapes of games, rewards, or policies do not line up."""


class StochasticityError(MairlError, ValueError):
    """A probability table row is not a distribution."""


class StaleValuesError(MairlError, ValueError):
    """A ValueBundle's residual exceeds its tolerance."""


class OutOfRangeError(MairlError, ValueError):
    """A constructed reward left the [0, rmax] box."""


class NotFeasibleError(MairlError, ValueError):
    """A reward/policy pair fails the equilibrium feasibility conditions."""


class InfeasibleLPError(MairlError, RuntimeError):
    """A linear program has an empty feasible region."""


class UnboundedLPError(MairlError, RuntimeError):
    """A linear program's objective is unbounded over the feasible region."""


class ConvergenceError(MairlError, RuntimeError):
    """An iterative solver exhausted its budget before converging."""


class ConfigError(MairlError, ValueError):
    """An experiment configuration file is missing or malformed."""
