"""Exception types shared across the package."""


class InputError(ValueError):
    """Bad arguments or malformed input data (CLI exit code 2)."""


class ConfigError(InputError):
    """Configuration document failed to parse or validate."""


class SystemIntegrityError(RuntimeError):
    """A declared system property was violated at runtime (e.g. a map image
    landed outside its target part)."""
