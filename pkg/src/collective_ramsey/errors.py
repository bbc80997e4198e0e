"""Exception types raised across the package."""


class DomainError(ValueError):
    """Input lies outside the admissible domain of a utility or technology."""


class InteriorityError(ValueError):
    """A sharing outcome would put some agent below its consumption bound.

    ``agents`` lists the offending (zero-based) agent indices.
    """

    def __init__(self, message, agents=()):
        super().__init__(message)
        self.agents = tuple(agents)


class BracketError(RuntimeError):
    """Bisection could not bracket the shadow price."""


class SolverError(RuntimeError):
    """Raised when backward induction or value iteration cannot proceed."""


class PathError(RuntimeError):
    """A simulated capital path left the solution grid."""


class ConfigError(ValueError):
    """Invalid run configuration. ``path`` names the offending field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
