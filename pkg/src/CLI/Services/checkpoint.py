# src/CLI/Services/checkpoint.py
# Binary checkpoint format, all integers little-endian, no padding:
#
#   "DHR1"  version:u32  count:u32
#   count x { name_len:u16  name:utf8  dtype:u8  ndim:u8  extents:u32*ndim  payload }
#   config_len:u32  config:utf8 (YAML echo of {step, config})
#
# dtype 0 is float32, 1 is float64.

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
import yaml

from src.Core.Models.configs import RunConfig
from src.Core.Models.errors import FormatError
from src.Core.Tools.Tensor.tensor import Tensor
from Utils.Logger.logfire import logfire

MAGIC = b"DHR1"
VERSION = 1
DTYPE_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}
CODE_DTYPES = {code: dtype for dtype, code in DTYPE_CODES.items()}


@dataclass
class Checkpoint:
    tensors: dict[str, np.ndarray]
    config: RunConfig
    step: int = 0

    @classmethod
    def from_named(cls, named: Mapping[str, Tensor], config: RunConfig, step: int) -> Checkpoint:
        return cls(tensors={name: t.numpy() for name, t in named.items()}, config=config, step=step)


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    parts = [MAGIC, struct.pack("<II", VERSION, len(ckpt.tensors))]
    for name, array in ckpt.tensors.items():
        array = np.asarray(array)
        dtype = array.dtype.newbyteorder("<")
        if dtype not in DTYPE_CODES:
            raise FormatError(f"tensor '{name}' has unsupported dtype {array.dtype}")
        raw_name = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw_name)))
        parts.append(raw_name)
        parts.append(struct.pack("<BB", DTYPE_CODES[dtype], array.ndim))
        parts.append(struct.pack(f"<{array.ndim}I", *array.shape))
        parts.append(np.ascontiguousarray(array, dtype=dtype).tobytes())
    echo = yaml.safe_dump(
        {"step": ckpt.step, "config": ckpt.config.model_dump(mode="json")}, sort_keys=False
    ).encode("utf-8")
    parts.append(struct.pack("<I", len(echo)))
    parts.append(echo)
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, count: int, what: str) -> bytes:
        if self.pos + count > len(self.data):
            raise FormatError(f"checkpoint truncated while reading {what} at byte {self.pos}")
        chunk = self.data[self.pos : self.pos + count]
        self.pos += count
        return chunk

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_checkpoint(data: bytes) -> Checkpoint:
    reader = _Reader(data)
    if reader.take(4, "magic") != MAGIC:
        raise FormatError("not a checkpoint: bad magic")
    version, count = reader.unpack("<II", "header")
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = reader.unpack("<H", "name length")
        try:
            name = reader.take(name_len, "name").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError("tensor name is not valid UTF-8") from exc
        if name in tensors:
            raise FormatError(f"duplicate tensor name '{name}'")
        code, ndim = reader.unpack("<BB", f"header of '{name}'")
        if code not in CODE_DTYPES:
            raise FormatError(f"tensor '{name}' has unknown dtype code {code}")
        shape = reader.unpack(f"<{ndim}I", f"extents of '{name}'")
        dtype = CODE_DTYPES[code]
        payload = reader.take(int(np.prod(shape, dtype=np.int64)) * dtype.itemsize, f"payload of '{name}'")
        tensors[name] = np.frombuffer(payload, dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))
    (echo_len,) = reader.unpack("<I", "config length")
    echo_raw = reader.take(echo_len, "config")
    if reader.pos != len(data):
        raise FormatError(f"{len(data) - reader.pos} unexpected trailing bytes")
    try:
        echo = yaml.safe_load(echo_raw.decode("utf-8")) or {}
        config = RunConfig.model_validate(echo.get("config", {}))
        step = int(echo.get("step", 0))
    except (yaml.YAMLError, UnicodeDecodeError, ValueError, AttributeError) as exc:
        raise FormatError(f"checkpoint config echo is unreadable: {exc}") from exc
    return Checkpoint(tensors=tensors, config=config, step=step)


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> Path:
    """Write atomically: a reader never sees a half-written file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = encode_checkpoint(ckpt)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)
    logfire.info("checkpoint saved", path=str(path), tensors=len(ckpt.tensors), bytes=len(data), step=ckpt.step)
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"checkpoint {path} does not exist")
    return decode_checkpoint(path.read_bytes())
