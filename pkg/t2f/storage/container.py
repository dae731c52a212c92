"""
Binary tensor container shared by model checkpoints and probe classifiers.

    magic(4) || version(u16) || float_width(u8) || meta_len(u32) || meta JSON
    || n_tensors(u32) || tensor*
    || n_adam(u32) || adam*

    tensor := name_len(u16) || name || ndim(u8) || dims(u32 × ndim) || data
    adam   := name_len(u16) || name || step(u64) || beta1, beta2, eps (f64)
              || n_tensors(u32) || tensor*           (m:<param>, v:<param>)

All integers and floats little-endian; tensor data is f32 or f64 per the
float_width byte. Meta JSON is written with sorted keys, so identical content
gives identical bytes. Writes go to a temp file that is renamed into place.
"""

import io
import json
import logging
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Mapping, Union

import numpy as np

from t2f.engine.optim import AdamState
from t2f.errors import CheckpointFormatError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
_WIDTHS = {4: "<f4", 8: "<f8"}


@dataclass
class Container:
    meta: dict
    tensors: dict[str, np.ndarray]
    adam: dict[str, AdamState] = field(default_factory=dict)
    float_width: int = 4


# ── Writing ──────────────────────────────────────────────────────────────────

def _write_name(f: BinaryIO, name: str) -> None:
    raw = name.encode("utf-8")
    f.write(struct.pack("<H", len(raw)))
    f.write(raw)


def _write_tensor(f: BinaryIO, name: str, array: np.ndarray, dtype: str) -> None:
    _write_name(f, name)
    f.write(struct.pack("<B", array.ndim))
    for d in array.shape:
        f.write(struct.pack("<I", d))
    f.write(np.ascontiguousarray(array, dtype=dtype).tobytes())


def encode(magic: bytes, container: Container) -> bytes:
    dtype = _WIDTHS.get(container.float_width)
    if dtype is None:
        raise CheckpointFormatError(f"unsupported float width {container.float_width}")
    buf = io.BytesIO()
    buf.write(magic)
    buf.write(struct.pack("<H", FORMAT_VERSION))
    buf.write(struct.pack("<B", container.float_width))
    meta = json.dumps(container.meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    buf.write(struct.pack("<I", len(meta)))
    buf.write(meta)

    buf.write(struct.pack("<I", len(container.tensors)))
    for name, array in container.tensors.items():
        _write_tensor(buf, name, array, dtype)

    buf.write(struct.pack("<I", len(container.adam)))
    for name, state in container.adam.items():
        _write_name(buf, name)
        buf.write(struct.pack("<Q", state.step_count))
        buf.write(struct.pack("<ddd", state.beta1, state.beta2, state.epsilon))
        moments = [(f"m:{k}", v) for k, v in state.m.items()] + [(f"v:{k}", v) for k, v in state.v.items()]
        buf.write(struct.pack("<I", len(moments)))
        for mname, array in moments:
            _write_tensor(buf, mname, array, dtype)
    return buf.getvalue()


def write_container(path: Union[str, Path], magic: bytes, container: Container) -> Path:
    path = Path(path)
    payload = encode(magic, container)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug(f"Wrote {magic.decode()} container {path} ({len(payload)} bytes)")
    return path


# ── Reading ──────────────────────────────────────────────────────────────────

class _Reader:
    def __init__(self, data: bytes, source: str):
        self.data = data
        self.pos = 0
        self.source = source

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointFormatError(f"{self.source}: truncated at byte {self.pos}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def name(self) -> str:
        (length,) = self.unpack("<H")
        return self.take(length).decode("utf-8")

    def tensor(self, dtype: str) -> tuple[str, np.ndarray]:
        name = self.name()
        (ndim,) = self.unpack("<B")
        shape = self.unpack(f"<{ndim}I") if ndim else ()
        count = int(np.prod(shape)) if shape else 1
        raw = self.take(count * np.dtype(dtype).itemsize)
        return name, np.frombuffer(raw, dtype=dtype).reshape(shape).copy()


def decode(data: bytes, magic: bytes, source: str = "<bytes>") -> Container:
    r = _Reader(data, source)
    found = r.take(4)
    if found != magic:
        raise CheckpointFormatError(f"{source}: bad magic {found!r}, expected {magic!r}")
    (version,) = r.unpack("<H")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"{source}: unsupported format version {version}")
    (width,) = r.unpack("<B")
    dtype = _WIDTHS.get(width)
    if dtype is None:
        raise CheckpointFormatError(f"{source}: unsupported float width {width}")
    (meta_len,) = r.unpack("<I")
    try:
        meta = json.loads(r.take(meta_len).decode("utf-8"))
    except ValueError as exc:
        raise CheckpointFormatError(f"{source}: corrupt metadata") from exc

    (n_tensors,) = r.unpack("<I")
    tensors = dict(r.tensor(dtype) for _ in range(n_tensors))

    adam: dict[str, AdamState] = {}
    (n_adam,) = r.unpack("<I")
    for _ in range(n_adam):
        name = r.name()
        (step,) = r.unpack("<Q")
        beta1, beta2, eps = r.unpack("<ddd")
        state = AdamState(step_count=step, beta1=beta1, beta2=beta2, epsilon=eps)
        (n_moments,) = r.unpack("<I")
        for _ in range(n_moments):
            mname, array = r.tensor(dtype)
            kind, _, pname = mname.partition(":")
            (state.m if kind == "m" else state.v)[pname] = array
        adam[name] = state

    if r.pos != len(data):
        raise CheckpointFormatError(f"{source}: {len(data) - r.pos} trailing bytes")
    return Container(meta=meta, tensors=tensors, adam=adam, float_width=width)


def read_container(path: Union[str, Path], magic: bytes) -> Container:
    path = Path(path)
    return decode(path.read_bytes(), magic, source=str(path))


def cast_arrays(arrays: Mapping[str, np.ndarray], dtype) -> dict[str, np.ndarray]:
    return {k: np.asarray(v, dtype=dtype) for k, v in arrays.items()}
