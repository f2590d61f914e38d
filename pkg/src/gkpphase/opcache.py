"""Binary operator cache shared by sweep workers and across runs.

File layout (little endian), one operator per file:

    offset  size  field
    0       8     magic  b"GKPOPC1\\0"
    8       4     format version (u32, currently 1)
    12      2     kind length K (u16)
    14      K     kind, utf-8 (e.g. "qeig-values", "pauli-diag-z")
    14+K    1     dtype code (u8: 1=float64, 2=complex128, 3=complex64)
    +1      1     number of dimensions R (u8)
    +1      8*R   dims (u64 each)
    +8R     32    sha-256 digest of the canonical parameter string
    ...           payload, row-major

Files are keyed by kind plus the parameter digest, written to a temp file
and renamed into place, so concurrent readers never see partial data and
concurrent writers race benignly (last rename wins with identical bytes).
An in-process dict fronts the disk copy.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"GKPOPC1\0"
FORMAT_VERSION = 1

_DTYPE_CODES = {
    np.dtype(np.float64): 1,
    np.dtype(np.complex128): 2,
    np.dtype(np.complex64): 3,
}
_CODE_DTYPES = {v: k for k, v in _DTYPE_CODES.items()}


def param_digest(params: dict) -> bytes:
    """sha-256 over a canonical (sorted-key, repr-stable) parameter encoding."""
    canon = json.dumps(params, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).digest()


def _encode(kind: str, digest: bytes, array: np.ndarray) -> bytes:
    dtype = np.dtype(array.dtype)
    if dtype not in _DTYPE_CODES:
        raise ValueError(f"unsupported cache dtype {dtype}")
    kind_b = kind.encode()
    head = MAGIC + struct.pack("<IH", FORMAT_VERSION, len(kind_b)) + kind_b
    head += struct.pack("<BB", _DTYPE_CODES[dtype], array.ndim)
    head += struct.pack(f"<{array.ndim}Q", *array.shape)
    head += digest
    return head + np.ascontiguousarray(array).tobytes()


def _decode(blob: bytes) -> tuple[str, bytes, np.ndarray]:
    if blob[:8] != MAGIC:
        raise ValueError("bad cache magic")
    version, klen = struct.unpack_from("<IH", blob, 8)
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported cache version {version}")
    off = 14
    kind = blob[off : off + klen].decode()
    off += klen
    code, ndim = struct.unpack_from("<BB", blob, off)
    off += 2
    dims = struct.unpack_from(f"<{ndim}Q", blob, off)
    off += 8 * ndim
    digest = blob[off : off + 32]
    off += 32
    arr = np.frombuffer(blob[off:], dtype=_CODE_DTYPES[code]).reshape(dims).copy()
    return kind, digest, arr


@dataclass(frozen=True)
class CacheEntry:
    path: Path
    kind: str
    digest_hex: str
    shape: tuple[int, ...]
    nbytes: int


class OperatorCache:
    """Concurrent-read / exclusive-insert operator store."""

    def __init__(self, directory: str | os.PathLike | None):
        self.directory = Path(directory) if directory else None
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._mem: dict[tuple[str, bytes], np.ndarray] = {}
        self._lock = threading.Lock()

    def _path(self, kind: str, digest: bytes) -> Path:
        assert self.directory is not None
        return self.directory / f"{kind}-{digest.hex()[:16]}.opc"

    def get(self, kind: str, params: dict) -> np.ndarray | None:
        digest = param_digest(params)
        with self._lock:
            hit = self._mem.get((kind, digest))
        if hit is not None:
            return hit
        if self.directory is None:
            return None
        path = self._path(kind, digest)
        if not path.exists():
            return None
        kind_read, digest_read, arr = _decode(path.read_bytes())
        if kind_read != kind or digest_read != digest:
            return None  # hash-prefix collision; treat as a miss
        with self._lock:
            self._mem[(kind, digest)] = arr
        return arr

    def put(self, kind: str, params: dict, array: np.ndarray) -> None:
        digest = param_digest(params)
        with self._lock:
            self._mem[(kind, digest)] = array
        if self.directory is None:
            return
        blob = _encode(kind, digest, array)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(blob)
            os.replace(tmp, self._path(kind, digest))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def get_or_create(self, kind: str, params: dict, builder) -> np.ndarray:
        arr = self.get(kind, params)
        if arr is None:
            arr = np.asarray(builder())
            self.put(kind, params, arr)
        return arr

    def entries(self) -> list[CacheEntry]:
        if self.directory is None:
            return []
        out = []
        for path in sorted(self.directory.glob("*.opc")):
            kind, digest, arr = _decode(path.read_bytes())
            out.append(
                CacheEntry(path, kind, digest.hex(), tuple(arr.shape), arr.nbytes)
            )
        return out

    def purge(self) -> int:
        with self._lock:
            self._mem.clear()
        if self.directory is None:
            return 0
        n = 0
        for path in self.directory.glob("*.opc"):
            path.unlink()
            n += 1
        return n
