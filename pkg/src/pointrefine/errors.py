"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    pass


class CorruptMaskError(ValueError):
    pass


class ParseError(ValueError):
    """Malformed input document. ``path`` names the offending file or field."""

    def __init__(self, message, path=None):
        self.path = path
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class UnsupportedShapeError(ParseError):
    pass


class UnsupportedFormatError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class TrainingDivergedError(RuntimeError):
    def __init__(self, step, loss):
        self.step = step
        self.loss = loss
        super().__init__(f"training diverged at step {step} (loss={loss})")
