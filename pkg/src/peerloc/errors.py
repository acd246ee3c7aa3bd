"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value or combination."""


class DataError(ValueError):
    """Malformed or inconsistent input data (logs, truth files, streams)."""


class LogParseError(DataError):
    """A log or CSV file failed to parse; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class OutOfOrderError(DataError):
    """An event's timestamp precedes already-processed data."""


class RegistrationError(DataError):
    """A user id was registered twice or referenced before registration."""


class DegenerateCorrection(RuntimeError):
    """Every particle is incompatible with the current ranging batch."""
