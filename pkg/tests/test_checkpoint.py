import struct

import numpy as np
import pytest

from src.CLI.Services.checkpoint import (
    MAGIC,
    VERSION,
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from src.Core.Models.configs import RunConfig
from src.Core.Models.errors import ConfigurationError, FormatError
from src.Core.Models.model_params import ModelParams


def entry(name: str, array: np.ndarray, code: int = 0) -> bytes:
    raw = name.encode("utf-8")
    return (
        struct.pack("<H", len(raw))
        + raw
        + struct.pack("<BB", code, array.ndim)
        + struct.pack(f"<{array.ndim}I", *array.shape)
        + array.astype("<f4").tobytes()
    )


def trailer() -> bytes:
    echo = b"step: 0\nconfig: {}\n"
    return struct.pack("<I", len(echo)) + echo


@pytest.fixture
def checkpoint(tiny_config) -> Checkpoint:
    params = ModelParams.init(tiny_config.model, seed=4)
    return Checkpoint.from_named(params.named_tensors(), tiny_config, step=17)


def test_roundtrip_is_bit_exact(checkpoint, tmp_path):
    path = save_checkpoint(tmp_path / "run" / "model.ckpt", checkpoint)
    loaded = load_checkpoint(path)
    assert list(loaded.tensors) == list(checkpoint.tensors)
    for name, array in checkpoint.tensors.items():
        assert loaded.tensors[name].dtype == array.dtype
        assert loaded.tensors[name].tobytes() == array.tobytes()
    assert loaded.config == checkpoint.config
    assert loaded.step == 17
    assert not (tmp_path / "run" / "model.ckpt.tmp").exists()


def test_float64_tensors_and_scalars_survive():
    ckpt = Checkpoint(tensors={"a": np.arange(6.0).reshape(2, 3), "s": np.array(2.5)}, config=RunConfig())
    loaded = decode_checkpoint(encode_checkpoint(ckpt))
    assert loaded.tensors["a"].dtype == np.float64
    assert np.array_equal(loaded.tensors["a"], ckpt.tensors["a"])
    assert loaded.tensors["s"].shape == ()


def test_header_layout(checkpoint):
    data = encode_checkpoint(checkpoint)
    assert data[:4] == MAGIC
    assert struct.unpack("<II", data[4:12]) == (VERSION, len(checkpoint.tensors))


def test_bad_magic(checkpoint):
    data = bytearray(encode_checkpoint(checkpoint))
    data[0:4] = b"NOPE"
    with pytest.raises(FormatError):
        decode_checkpoint(bytes(data))


@pytest.mark.parametrize("cut", [3, 11, 40, -5, -1])
def test_truncation(checkpoint, cut):
    data = encode_checkpoint(checkpoint)
    with pytest.raises(FormatError):
        decode_checkpoint(data[:cut])


def test_trailing_bytes(checkpoint):
    with pytest.raises(FormatError):
        decode_checkpoint(encode_checkpoint(checkpoint) + b"\x00")


def test_duplicate_names():
    data = MAGIC + struct.pack("<II", VERSION, 2) + entry("w", np.ones(2)) + entry("w", np.ones(2)) + trailer()
    with pytest.raises(FormatError):
        decode_checkpoint(data)


def test_unknown_dtype_and_version():
    with pytest.raises(FormatError):
        decode_checkpoint(MAGIC + struct.pack("<II", VERSION, 1) + entry("w", np.ones(2), code=7) + trailer())
    with pytest.raises(FormatError):
        decode_checkpoint(MAGIC + struct.pack("<II", VERSION + 1, 0) + trailer())


def test_hand_written_file_decodes():
    ckpt = decode_checkpoint(MAGIC + struct.pack("<II", VERSION, 1) + entry("w", np.array([1.5, -2.0])) + trailer())
    assert np.array_equal(ckpt.tensors["w"], np.array([1.5, -2.0], dtype=np.float32))
    assert ckpt.config == RunConfig()


def test_missing_file(tmp_path):
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "absent.ckpt")


def test_loading_into_a_different_model(checkpoint, tiny_config):
    params = ModelParams.init(tiny_config.model, seed=99)
    params.load_named(checkpoint.tensors)
    for name, t in params.named_tensors().items():
        assert np.array_equal(t.data, checkpoint.tensors[name])
    bigger = ModelParams.init(tiny_config.model.model_copy(update={"c": 8}), seed=0)
    with pytest.raises(ConfigurationError):
        bigger.load_named(checkpoint.tensors)
    with pytest.raises(ConfigurationError):
        params.load_named({**checkpoint.tensors, "extra.weight": np.zeros(1)})
