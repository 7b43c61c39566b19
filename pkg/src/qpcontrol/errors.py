"""Exception types shared across the package."""


class InputDomainError(ValueError):
    """An argument is outside the domain an operation accepts."""


class SequencingError(RuntimeError):
    """Frame-stepping operations were invoked out of order."""


class TraceDomainError(LookupError):
    """A trace-table lookup fell outside the tabulated frames or QPs."""


class DegenerateInputError(ValueError):
    """Input is structurally valid but carries no usable information."""


class ConfigError(Exception):
    """Base class for configuration failures."""


class MissingConfigFile(ConfigError):
    """The configuration file does not exist."""


class ConfigParseError(ConfigError):
    """A configuration line or value could not be parsed."""


class UnknownConfigKey(ConfigError):
    """A configuration key is not part of the schema."""


class ConfigInvariantError(ConfigError):
    """Parsed configuration values violate a domain invariant."""
