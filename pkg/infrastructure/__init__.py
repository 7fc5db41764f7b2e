"""
Infrastructure layer - shared plumbing

Provides:
- Error hierarchy (machine codes and CLI exit codes)
- Retry utilities (exponential backoff around atomic file replacement)
- Observability (LMNR/Laminar tracing)
"""
from .errors import (
    SimPinnError,
    ConfigError,
    ContractError,
    DimensionError,
    DomainError,
    NumericError,
    DataError,
    BadMagicError,
    VersionMismatchError,
    ChecksumError,
    TruncatedFileError,
    ArchitectureMismatchError,
)
from .retry_utils import (
    with_retry,
    calculate_backoff_delay,
    atomic_write_bytes,
    atomic_write_text,
)
from .observability import (
    init_observability,
    observe,
    get_observability_status,
)

__all__ = [
    # Errors
    "SimPinnError",
    "ConfigError",
    "ContractError",
    "DimensionError",
    "DomainError",
    "NumericError",
    "DataError",
    "BadMagicError",
    "VersionMismatchError",
    "ChecksumError",
    "TruncatedFileError",
    "ArchitectureMismatchError",
    # Retry utilities
    "with_retry",
    "calculate_backoff_delay",
    "atomic_write_bytes",
    "atomic_write_text",
    # Observability
    "init_observability",
    "observe",
    "get_observability_status",
]
