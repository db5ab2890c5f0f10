"""Checkpoint binary format: round trips, corruption detection."""

import struct

import numpy as np
import pytest

from graphtcn.checkpoint import MAGIC, load_checkpoint, save_checkpoint
from graphtcn.config import ModelConfig
from graphtcn.data import SequenceWindow
from graphtcn.errors import CheckpointCorruptError, CheckpointFormatError
from graphtcn.model import GraphTCN
from graphtcn.tensor import ParameterStore
from graphtcn.training import model_from_checkpoint


def small_cfg():
    return ModelConfig(t_obs=4, t_pred=2, embed_dim=6, gal1_heads=1, gal1_out=3,
                       gal2_heads=1, gal2_out=4, tcn_channels=3, tcn_layers=1,
                       tcn_kernel=2, noise_dim=2, samples=2, epochs=1, seed=3)


def toy_store():
    s = ParameterStore()
    s.add("alpha.W", np.arange(6, dtype=float).reshape(2, 3))
    s.add("alpha.b", np.array([0.5, -0.5, 0.25]))
    s.add("beta", np.full((2, 2, 2), np.pi))
    return s


def test_round_trip_values_and_config(tmp_path):
    path = tmp_path / "m.ckpt"
    cfg = small_cfg()
    save_checkpoint(path, toy_store(), cfg)
    ckpt = load_checkpoint(path)
    assert ckpt.config.to_text() == cfg.to_text()
    assert list(ckpt.arrays) == ["alpha.W", "alpha.b", "beta"]
    for name, arr in ckpt.arrays.items():
        assert arr.dtype == np.float64
    np.testing.assert_array_equal(ckpt.arrays["beta"], np.full((2, 2, 2), np.pi))


def test_save_load_save_byte_identical(tmp_path):
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    cfg = small_cfg()
    save_checkpoint(p1, toy_store(), cfg)
    ckpt = load_checkpoint(p1)
    store = ParameterStore()
    for name, arr in ckpt.arrays.items():
        store.add(name, arr)
    save_checkpoint(p2, store, ckpt.config)
    assert p1.read_bytes() == p2.read_bytes()


def test_bad_magic(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, toy_store(), small_cfg())
    blob = path.read_bytes()
    path.write_bytes(b"NOPE" + blob[4:])
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(path)


def test_bad_version(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, toy_store(), small_cfg())
    blob = path.read_bytes()
    path.write_bytes(blob[:4] + struct.pack("<I", 99) + blob[8:])
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(path)


def test_truncation_detected(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, toy_store(), small_cfg())
    blob = path.read_bytes()
    for cut in (3, len(blob) // 2, len(blob) - 1):
        path.write_bytes(blob[:cut])
        with pytest.raises(CheckpointCorruptError):
            load_checkpoint(path)


def test_trailing_bytes_detected(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, toy_store(), small_cfg())
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(CheckpointCorruptError):
        load_checkpoint(path)


def test_duplicate_parameter_detected(tmp_path):
    # Handcraft a file whose parameter table lists the same name twice.
    cfg_bytes = small_cfg().to_text().encode()
    name = b"w"
    arr = np.array([1.0])
    entry = (struct.pack("<H", len(name)) + name + struct.pack("<B", 1)
             + struct.pack("<I", 1) + arr.tobytes())
    blob = (MAGIC + struct.pack("<I", 1) + struct.pack("<I", len(cfg_bytes))
            + cfg_bytes + struct.pack("<I", 2) + entry + entry)
    path = tmp_path / "dup.ckpt"
    path.write_bytes(blob)
    with pytest.raises(CheckpointCorruptError):
        load_checkpoint(path)


def test_model_round_trip_predicts_identically(tmp_path):
    cfg = small_cfg()
    model = GraphTCN(cfg)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model.params, cfg)
    clone = model_from_checkpoint(load_checkpoint(path))

    rng = np.random.default_rng(1)
    pos = rng.normal(size=(3, 6, 2))
    w = SequenceWindow("s", 0, pos, (1, 2, 3))
    a, _ = model.predict(w, 3, np.random.default_rng(7))
    b, _ = clone.predict(w, 3, np.random.default_rng(7))
    assert np.array_equal(a.trajectories, b.trajectories)


def test_model_round_trip_all_params_exact(tmp_path):
    cfg = small_cfg()
    model = GraphTCN(cfg)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model.params, cfg)
    ckpt = load_checkpoint(path)
    assert set(ckpt.arrays) == set(model.params.names())
    for name in model.params.names():
        assert np.array_equal(ckpt.arrays[name], model.params[name].data), name
