"""Exception types shared across the simulator."""


class SimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(SimError):
    """A config document or value violates the schema.

    Carries the dotted path of the offending field when known, so CLI and
    loaders can report "profiles[0].main_memory.bw_gbps: must be > 0".
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class UnknownNameError(SimError):
    """Lookup of a profile or model name that is not registered."""


class MappingError(SimError):
    """A mapping scheme cannot be resolved against a graph or registry."""
