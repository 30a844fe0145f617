"""
Utilities module - errors, logging, seeding and monitoring

Run configuration lives in utils.config (imported directly; it depends on
the section dataclasses of the other packages)
"""

from .exceptions import (ByelError, ConfigError, ManifestError, DegenerateInputError,
                         MissingArtifactError, NonFiniteLossError)
from .logging_utils import setup_logging
from .seeding import set_seed, derive_rng, derive_seeds
from .monitoring import ResourceMonitor, PerformanceProfiler

__all__ = [
    'ByelError',
    'ConfigError',
    'ManifestError',
    'DegenerateInputError',
    'MissingArtifactError',
    'NonFiniteLossError',
    'setup_logging',
    'set_seed',
    'derive_rng',
    'derive_seeds',
    'ResourceMonitor',
    'PerformanceProfiler'
]
