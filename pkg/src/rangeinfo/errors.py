"""Exception hierarchy. ``category`` is the machine-readable tag the CLI prints."""


class RangeInfoError(Exception):
    category = "runtime"


class ConfigError(RangeInfoError, ValueError):
    category = "config"


class SchemaError(RangeInfoError, ValueError):
    category = "schema"


class CacheError(RangeInfoError):
    category = "cache"


class DegeneratePosteriorError(RangeInfoError, ValueError):
    category = "posterior"
