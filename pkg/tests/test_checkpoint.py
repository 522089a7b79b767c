import json
import struct

import numpy as np
import pytest

from glyphembed.errors import Corrupt, VersionMismatch
from glyphembed.nn.checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    Checkpoint,
    load_checkpoint,
    pack_container,
    save_checkpoint,
    unpack_container,
)
from glyphembed.nn.layers import Linear, ParamStore


def _tensors():
    rng = np.random.default_rng(0)
    return {
        "a.W": rng.standard_normal((3, 4)).astype(np.float32),
        "a.b": rng.standard_normal(3).astype(np.float32),
        "deep.conv.W": rng.standard_normal((2, 1, 3, 3)).astype(np.float32),
    }


def test_container_roundtrip():
    tensors = _tensors()
    raw = pack_container(MAGIC, FORMAT_VERSION, tensors, {"kind": "t", "n": 3})
    header, back = unpack_container(raw, MAGIC, FORMAT_VERSION, "<mem>")
    assert header["kind"] == "t" and header["n"] == 3
    assert set(back) == set(tensors)
    for name in tensors:
        assert back[name].dtype == np.float32
        assert np.array_equal(back[name], tensors[name])
    # Packing is deterministic byte-for-byte.
    assert raw == pack_container(MAGIC, FORMAT_VERSION, tensors, {"kind": "t", "n": 3})


def test_container_f64_input_stored_as_f32():
    t = {"x": np.array([1.0, 2.0, 3.0], dtype=np.float64)}
    _, back = unpack_container(pack_container(MAGIC, 1, t, {}), MAGIC, 1, "<mem>")
    assert back["x"].dtype == np.float32
    assert np.array_equal(back["x"], t["x"].astype(np.float32))


def test_container_corrupt_cases():
    tensors = _tensors()
    raw = pack_container(MAGIC, FORMAT_VERSION, tensors, {})

    with pytest.raises(Corrupt):
        unpack_container(raw[:8], MAGIC, FORMAT_VERSION, "p")
    with pytest.raises(Corrupt):
        unpack_container(b"XXXX" + raw[4:], MAGIC, FORMAT_VERSION, "p")
    with pytest.raises(Corrupt):
        unpack_container(raw[:-10], MAGIC, FORMAT_VERSION, "p")  # truncated blob

    bad_version = MAGIC + struct.pack("<I", 99) + raw[8:]
    with pytest.raises(VersionMismatch):
        unpack_container(bad_version, MAGIC, FORMAT_VERSION, "p")

    hjson = b"{not json"
    garbage = MAGIC + struct.pack("<I", 1) + struct.pack("<Q", len(hjson)) + hjson
    with pytest.raises(Corrupt):
        unpack_container(garbage, MAGIC, FORMAT_VERSION, "p")

    # Header length pointing past the end of file.
    overlong = MAGIC + struct.pack("<I", 1) + struct.pack("<Q", 1 << 40) + b"{}"
    with pytest.raises(Corrupt):
        unpack_container(overlong, MAGIC, FORMAT_VERSION, "p")

    # Well-formed JSON but no tensor table.
    hjson = json.dumps({"x": 1}).encode()
    no_table = MAGIC + struct.pack("<I", 1) + struct.pack("<Q", len(hjson)) + hjson
    with pytest.raises(Corrupt):
        unpack_container(no_table, MAGIC, FORMAT_VERSION, "p")

    # Malformed table entry.
    hjson = json.dumps({"tensors": [{"name": "x"}]}).encode()
    bad_entry = MAGIC + struct.pack("<I", 1) + struct.pack("<Q", len(hjson)) + hjson
    with pytest.raises(Corrupt):
        unpack_container(bad_entry, MAGIC, FORMAT_VERSION, "p")


def test_checkpoint_file_roundtrip(tmp_path):
    ck = Checkpoint(
        model_kind="trainer",
        config={"steps": 10, "tau": 0.1},
        metadata={"step": 3, "rng_state": {"state": 2**96 + 17}},
        tensors=_tensors(),
    )
    path = tmp_path / "ck.gemb"
    save_checkpoint(ck, path)
    assert path.exists()
    assert not path.with_suffix(".gemb.tmp").exists()
    back = load_checkpoint(path)
    assert back.model_kind == "trainer"
    assert back.config == ck.config
    # Big integers in metadata (rng state words) survive the JSON roundtrip.
    assert back.metadata["rng_state"]["state"] == 2**96 + 17
    for name in ck.tensors:
        assert np.array_equal(back.tensors[name], ck.tensors[name])
    # Saving the loaded checkpoint reproduces identical bytes.
    path2 = tmp_path / "ck2.gemb"
    save_checkpoint(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_checkpoint_missing_header_fields(tmp_path):
    raw = pack_container(MAGIC, FORMAT_VERSION, {}, {"model_kind": "x"})  # no config
    p = tmp_path / "bad.gemb"
    p.write_bytes(raw)
    with pytest.raises(Corrupt):
        load_checkpoint(p)
    with pytest.raises(Corrupt):
        load_checkpoint(tmp_path / "nonexistent.gemb")


def test_checkpoint_from_store():
    lin = Linear(2, 3, dtype=np.float32)
    lin.W[...] = 7.0
    store = ParamStore.collect([("m", lin)])
    ck = Checkpoint.from_store("probe", {"d": 2}, store, {"note": 1})
    assert set(ck.tensors) == {"m.W", "m.b"}
    assert np.all(ck.tensors["m.W"] == 7.0)
    # Snapshot is a copy, not a live view.
    lin.W[...] = 0.0
    assert np.all(ck.tensors["m.W"] == 7.0)
