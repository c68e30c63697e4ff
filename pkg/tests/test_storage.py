import json

import numpy as np
import pytest

from udddm import tensorio
from udddm.estimate_store import EstimateBuffer, footprint_for, init_buffer, memory_footprint


def test_tensor_round_trip_bit_exact(tmp_path, rng):
    tensors = {"a": rng.standard_normal((3, 4)), "b": np.arange(5, dtype=np.int64),
               "c": rng.standard_normal(7).astype(np.float32), "empty": np.zeros((0, 2))}
    mpath = tensorio.save_tensors(tmp_path / "t", tensors, {"note": "x"})
    got, meta = tensorio.load_tensors(mpath)
    assert meta == {"note": "x"}
    for k, v in tensors.items():
        assert got[k].dtype == v.dtype and got[k].shape == v.shape
        assert got[k].tobytes() == v.tobytes()
    manifest = json.loads(mpath.read_text())
    assert manifest["format"] == "udddm-tensors" and manifest["blob"] == "t.bin"
    assert [e["offset"] for e in manifest["tensors"]] == [0, 96, 136, 164]


def test_blob_is_little_endian_float64(tmp_path):
    tensorio.save_tensors(tmp_path / "x", {"v": np.array([1.0, -2.5])})
    assert (tmp_path / "x.bin").read_bytes() == np.array([1.0, -2.5], dtype="<f8").tobytes()


def test_corrupt_files_raise(tmp_path):
    mpath = tensorio.save_tensors(tmp_path / "t", {"a": np.ones(4)})
    blob = tmp_path / "t.bin"
    blob.write_bytes(blob.read_bytes()[:-8])
    with pytest.raises(tensorio.TensorFileError):
        tensorio.load_tensors(mpath)
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(tensorio.TensorFileError):
        tensorio.load_tensors(tmp_path / "bad.json")
    with pytest.raises(tensorio.TensorFileError):
        tensorio.save_tensors(tmp_path / "s", {"s": np.array(["x"])})


def test_content_id_is_location_independent(tmp_path):
    a = tensorio.save_tensors(tmp_path / "a" / "t", {"v": np.arange(3.0)})
    b = tensorio.save_tensors(tmp_path / "b" / "u", {"v": np.arange(3.0)})
    assert tensorio.content_id(a) == tensorio.content_id(b)


def test_init_buffer_statistics_and_determinism():
    buf = init_buffer(50_000, 2, seed=7)
    assert abs(buf.estimates.mean()) < 0.02
    assert buf.estimates.var() == pytest.approx(1.0, rel=0.05)
    assert np.all(buf.visit_count == 0) and buf.epoch == 0
    np.testing.assert_array_equal(buf.estimates, init_buffer(50_000, 2, seed=7).estimates)
    one = init_buffer(1, 2, seed=0)
    assert one.estimates.shape == (1, 2)
    with pytest.raises(ValueError):
        init_buffer(0, 2, seed=0)


def test_read_write_semantics(rng):
    buf = init_buffer(10, 3, seed=0)
    new = rng.standard_normal((2, 3))
    buf.write([4, 7], new)
    np.testing.assert_array_equal(buf.read([4, 7]), new)
    assert buf.visit_count.tolist() == [0, 0, 0, 0, 1, 0, 0, 1, 0, 0]
    before = buf.estimates.copy()
    buf.read([1, 2])
    np.testing.assert_array_equal(buf.estimates, before)
    with pytest.raises(ValueError):
        buf.write([1, 1], rng.standard_normal((2, 3)))
    with pytest.raises(IndexError):
        buf.read([10])
    with pytest.raises(IndexError):
        buf.write([-1], rng.standard_normal((1, 3)))
    with pytest.raises(ValueError):
        buf.write([0], rng.standard_normal((1, 2)))


def test_disk_spill_round_trip_across_reopen(tmp_path, rng):
    buf = init_buffer(100, 4, seed=3, backing="disk", path=tmp_path / "est")
    assert buf.backing == "disk"
    new = rng.standard_normal((5, 4))
    buf.write([0, 10, 20, 30, 99], new)
    buf.epoch = 3
    buf.flush()
    del buf
    again = EstimateBuffer.open(tmp_path / "est")
    assert again.read([0, 10, 20, 30, 99]).tobytes() == new.tobytes()
    assert again.epoch == 3 and again.visit_count[99] == 1
    loaded = EstimateBuffer.load(tmp_path / "est")
    np.testing.assert_array_equal(loaded.estimates, np.asarray(again.estimates))
    with pytest.raises(ValueError):
        init_buffer(3, 2, seed=0, backing="disk")


def test_snapshot_restore():
    buf = init_buffer(20, 2, seed=1)
    snap = buf.snapshot()
    buf.write([3], np.ones((1, 2)))
    buf.epoch = 5
    buf.restore(snap)
    np.testing.assert_array_equal(buf.estimates, snap["estimates"])
    assert buf.visit_count.sum() == 0 and buf.epoch == 0


def test_footprint_formula():
    fp = footprint_for(50_000, 3072, 4)
    assert fp.estimates == 614_400_000
    assert fp.bookkeeping == 8 * 50_000 + 8
    assert footprint_for(50_000, 3072, 2).estimates == 307_200_000
    empty = footprint_for(0, 3072, 4)
    assert empty.estimates == 0 and empty.total == 8


def test_footprint_matches_allocation():
    buf = init_buffer(1234, 5, seed=0)
    fp = memory_footprint(buf)
    assert fp.estimates == buf.estimates.nbytes
    assert fp.bookkeeping == buf.visit_count.nbytes + 8
    half = init_buffer(1234, 5, seed=0, dtype=np.float16)
    assert memory_footprint(half).estimates * 4 == fp.estimates
