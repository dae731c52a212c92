"""
Error hierarchy shared by every package.

The CLI maps ContractError / ParseError / ExtractionError to exit code 1 and
I/O failures (IngestionError, CheckpointFormatError, OSError) to exit code 2.
"""

from typing import Optional, Sequence


class T2FError(Exception):
    pass


class ContractError(T2FError):
    """A caller violated an operation's precondition."""


class DimensionError(ContractError):
    pass


class DegenerateBatchError(ContractError):
    pass


class NonFiniteError(ContractError):
    pass


class ConfigError(ContractError):
    pass


class ParseError(T2FError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class ExtractionError(T2FError):
    def __init__(self, message: str, tokens: Sequence[str] = ()):
        self.tokens = list(tokens)
        super().__init__(message)


class IngestionError(T2FError):
    def __init__(self, message: str, missing: Sequence[str] = ()):
        self.missing = list(missing)
        super().__init__(message)


class CheckpointFormatError(T2FError):
    pass
