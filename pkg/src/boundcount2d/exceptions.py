class ConfigurationError(ValueError):
    """Invalid parameters, grids or configuration documents."""


class DomainError(ValueError):
    """A point or argument lies outside the domain of definition."""


class EmptyActiveSetError(ConfigurationError):
    """The negative part of the potential vanishes on every node."""
