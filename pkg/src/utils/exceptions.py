from typing import Optional


class ByelError(Exception):
    """Base class for framework errors"""


class ConfigError(ByelError, ValueError):
    """Invalid configuration value or profile"""


class ManifestError(ByelError, ValueError):
    """Malformed or invalid dataset manifest"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        super().__init__(message)
        self.line_number = line_number


class DegenerateInputError(ByelError, ValueError):
    """Loss input with a zero-norm row"""


class MissingArtifactError(ByelError, FileNotFoundError):
    """Required checkpoint, manifest or pointer file is absent"""


class NonFiniteLossError(ByelError, RuntimeError):
    """Training produced a NaN or infinite loss"""

    def __init__(self, message: str, step: Optional[int] = None,
                 last_checkpoint: Optional[str] = None):
        super().__init__(message)
        self.step = step
        self.last_checkpoint = last_checkpoint
