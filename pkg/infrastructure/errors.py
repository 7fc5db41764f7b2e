"""
Error hierarchy for the SimPINNs orbit-restitution toolkit.

Every error carries a stable machine code (printed by the CLI as
``error[<CODE>]: <message>``) and a process exit code.
"""
from typing import Optional


class SimPinnError(Exception):
    """Base class for all toolkit errors"""
    code: str = "INTERNAL"
    exit_code: int = 1

    def __init__(self, message: str, *, detail: Optional[dict] = None):
        super().__init__(message)
        self.message = message
        self.detail = detail or {}

    def one_line(self) -> str:
        """Single-line, machine-parseable rendering used by the CLI"""
        text = " ".join(self.message.split())
        return f"error[{self.code}]: {text}"


# =============================================================================
# Configuration / contract
# =============================================================================

class ConfigError(SimPinnError):
    """Unknown key, malformed value or inconsistent experiment settings"""
    code = "CONFIG"
    exit_code = 2


class ContractError(SimPinnError):
    """A documented precondition was violated by the caller"""
    code = "CONTRACT"
    exit_code = 5


class DimensionError(ContractError):
    """Operand shapes do not conform"""
    code = "DIMENSION"


class DomainError(ContractError):
    """Orbital elements (or another input) outside the operator domain"""
    code = "DOMAIN"


# =============================================================================
# Numerics
# =============================================================================

class NumericError(SimPinnError):
    """Non-convergence, non-finite derivative or non-finite loss"""
    code = "NUMERIC"
    exit_code = 4


# =============================================================================
# Persistence
# =============================================================================

class DataError(SimPinnError):
    """Dataset / checkpoint could not be read or does not match the run"""
    code = "DATA"
    exit_code = 3


class BadMagicError(DataError):
    code = "BAD_MAGIC"


class VersionMismatchError(DataError):
    code = "VERSION"


class ChecksumError(DataError):
    code = "CRC"


class TruncatedFileError(DataError):
    code = "TRUNCATED"


class ArchitectureMismatchError(DataError):
    code = "ARCH"
