"""Exception types shared across the package."""


class CoopBanditError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(CoopBanditError):
    """A configuration file or override is malformed or inconsistent."""


class InvalidEdge(CoopBanditError):
    """An edge references an agent outside the graph."""


class NotStronglyConnected(CoopBanditError):
    """The communication digraph has at least one unreachable ordered pair."""

    def __init__(self, message, unreachable=None):
        super().__init__(message)
        # (source, destination) witness with no directed path, 0-based
        self.unreachable = unreachable


class NoConvergence(CoopBanditError):
    """An iterative solver did not reach its tolerance within the iteration cap."""


class DimensionMismatch(CoopBanditError):
    """Array shapes passed together do not agree."""


class OrphanArm(CoopBanditError):
    """An arm is accessible to no agent, so it could never be sampled."""

    def __init__(self, message, arm=None):
        super().__init__(message)
        self.arm = arm


class IsolatedAgent(CoopBanditError):
    """An agent has no accessible arms and could never act."""

    def __init__(self, message, agent=None):
        super().__init__(message)
        self.agent = agent


class InaccessibleArm(CoopBanditError):
    """A pull was requested for an arm the agent cannot access (policy bug)."""


class MalformedInbox(CoopBanditError):
    """A consensus round received messages from the wrong sender set (engine bug)."""
