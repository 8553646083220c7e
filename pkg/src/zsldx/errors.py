"""Exception types shared across the package."""


class DataError(ValueError):
    """Input data violates a format or invariant (bad file, bad shape, bad value)."""


class ConfigError(ValueError):
    """A run configuration is malformed or internally inconsistent."""


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names which one."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
