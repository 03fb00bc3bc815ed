"""Exception types shared across the package."""


class CalibrationError(RuntimeError):
    """Grain map calibration did not converge.

    Carries the achieved and target intercept lengths per phase so the caller
    can report how far off the last attempt was.
    """

    def __init__(self, message, achieved=None, target=None):
        super().__init__(message)
        self.achieved = dict(achieved or {})
        self.target = dict(target or {})


class ModelViolationError(ArithmeticError):
    """Inputs produced a physically inconsistent state (e.g. negative recovery)."""


class ConfigError(ValueError):
    """Scenario configuration could not be parsed or validated."""

    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.key = key
        self.line = line
