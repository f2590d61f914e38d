"""Binary operator cache: format round-trips, keying, concurrency basics."""

import threading

import numpy as np
import pytest

from gkpphase import opcache


def test_roundtrip_float64(tmp_path):
    cache = opcache.OperatorCache(tmp_path)
    arr = np.linspace(0.0, 1.0, 12).reshape(3, 4)
    cache.put("qeig-values", {"d": 3}, arr)
    # fresh instance forces the disk path
    cache2 = opcache.OperatorCache(tmp_path)
    got = cache2.get("qeig-values", {"d": 3})
    assert got is not None and got.dtype == np.float64
    assert np.array_equal(got, arr)


def test_roundtrip_complex(tmp_path):
    cache = opcache.OperatorCache(tmp_path)
    arr = (np.arange(6) + 1j * np.arange(6)).reshape(2, 3)
    cache.put("pauli-diag-zx", {"lam": 2.0, "delta": 0.25}, arr)
    got = opcache.OperatorCache(tmp_path).get("pauli-diag-zx", {"lam": 2.0, "delta": 0.25})
    assert np.array_equal(got, arr)


def test_distinct_params_distinct_entries(tmp_path):
    cache = opcache.OperatorCache(tmp_path)
    cache.put("k", {"d": 1}, np.array([1.0]))
    cache.put("k", {"d": 2}, np.array([2.0]))
    assert cache.get("k", {"d": 1})[0] == 1.0
    assert cache.get("k", {"d": 2})[0] == 2.0
    assert len(cache.entries()) == 2


def test_header_matches_on_disk(tmp_path):
    cache = opcache.OperatorCache(tmp_path)
    arr = np.ones((4, 4), dtype=np.complex128)
    cache.put("probe", {"x": 1}, arr)
    (entry,) = cache.entries()
    assert entry.kind == "probe"
    assert entry.shape == (4, 4)
    assert entry.digest_hex == opcache.param_digest({"x": 1}).hex()
    blob = entry.path.read_bytes()
    assert blob[:8] == opcache.MAGIC


def test_miss_returns_none(tmp_path):
    cache = opcache.OperatorCache(tmp_path)
    assert cache.get("nothing", {"a": 1}) is None
    memory_only = opcache.OperatorCache(None)
    assert memory_only.get("nothing", {}) is None
    memory_only.put("k", {}, np.array([3.0]))
    assert memory_only.get("k", {})[0] == 3.0


def test_purge_empty_and_full(tmp_path):
    cache = opcache.OperatorCache(tmp_path)
    assert cache.purge() == 0
    cache.put("k", {"d": 1}, np.array([1.0]))
    assert cache.purge() == 1
    assert cache.get("k", {"d": 1}) is None


def test_get_or_create_builds_once(tmp_path):
    cache = opcache.OperatorCache(tmp_path)
    calls = []

    def builder():
        calls.append(1)
        return np.array([7.0])

    a = cache.get_or_create("k", {"d": 9}, builder)
    b = cache.get_or_create("k", {"d": 9}, builder)
    assert np.array_equal(a, b)
    assert len(calls) == 1


def test_concurrent_reads_and_inserts(tmp_path):
    cache = opcache.OperatorCache(tmp_path)
    errs = []

    def worker(i):
        try:
            for k in range(20):
                cache.put("t", {"i": i, "k": k}, np.full(8, float(i)))
                got = cache.get("t", {"i": i, "k": k})
                assert got is not None and got[0] == float(i)
        except Exception as exc:  # pragma: no cover
            errs.append(exc)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errs


def test_rejects_unsupported_dtype(tmp_path):
    cache = opcache.OperatorCache(tmp_path)
    with pytest.raises(ValueError):
        cache.put("k", {}, np.array([1], dtype=np.int32))
