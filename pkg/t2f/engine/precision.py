"""
Float width for the tensor engine.

Training runs in 32-bit; every finite-difference oracle switches to 64-bit
because gradient checks are meaningless at 32-bit tolerances. The default comes
from T2F_PRECISION.
"""

import threading
from contextlib import contextmanager
from typing import Iterator

import numpy as np

from t2f.config.settings import settings
from t2f.errors import ConfigError

_DTYPES = {32: np.float32, 64: np.float64}

_state = threading.local()


def _bits() -> int:
    return getattr(_state, "bits", settings.precision)


def get_precision() -> int:
    return _bits()


def get_dtype() -> type:
    return _DTYPES[_bits()]


def set_precision(bits: int) -> None:
    if bits not in _DTYPES:
        raise ConfigError(f"precision must be 32 or 64, got {bits}")
    _state.bits = bits


@contextmanager
def precision(bits: int) -> Iterator[None]:
    """Temporarily switch the engine's float width for the current thread."""
    previous = _bits()
    set_precision(bits)
    try:
        yield
    finally:
        _state.bits = previous
