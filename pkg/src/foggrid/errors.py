"""Shared exception base classes.

Every error raised by this package derives from :class:`FogGridError` so
callers (and the CLI) can distinguish our failures from genuine bugs.
"""


class FogGridError(Exception):
    """Base class for all foggrid errors."""


class ConfigError(FogGridError):
    """A scenario configuration is malformed or inconsistent.

    Carries the full list of problems found, one human-readable message
    per problem, each prefixed with its location in the config.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
