"""On-disk cache of sieved segments.

File layout (little-endian): magic b"LAFS", format version u16, lo u64,
hi u64, then hi - lo packed records

    P u64, beta u64, B u64, B1 u64, omega u8, Omega u8, squarefree u8,
    squarefull_part u64

Files that fail any check are ignored, recomputed and rewritten.
"""
from __future__ import annotations

import logging
import os
import struct
import threading
from pathlib import Path

import numpy as np

from .sieve import SieveSegment

log = logging.getLogger(__name__)

MAGIC = b"LAFS"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sHQQ")
RECORD = np.dtype(
    [
        ("P", "<u8"),
        ("beta", "<u8"),
        ("B", "<u8"),
        ("B1", "<u8"),
        ("omega", "u1"),
        ("Omega", "u1"),
        ("squarefree", "u1"),
        ("squarefull_part", "<u8"),
    ]
)  # unaligned: 43 bytes per record


class CacheFormatError(ValueError):
    pass


def encode(seg: SieveSegment, version: int = FORMAT_VERSION) -> bytes:
    rec = np.empty(len(seg), dtype=RECORD)
    for f in ("P", "beta", "B", "B1", "omega", "Omega", "squarefull_part"):
        rec[f] = getattr(seg, f)
    rec["squarefree"] = seg.is_squarefree
    return HEADER.pack(MAGIC, version, seg.lo, seg.hi) + rec.tobytes()


def decode(blob: bytes, lo: int | None = None, hi: int | None = None, version: int = FORMAT_VERSION) -> SieveSegment:
    if len(blob) < HEADER.size:
        raise CacheFormatError("truncated header")
    magic, ver, flo, fhi = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CacheFormatError(f"bad magic {magic!r}")
    if ver != version:
        raise CacheFormatError(f"version {ver} != {version}")
    if (lo is not None and flo != lo) or (hi is not None and fhi != hi) or fhi <= flo:
        raise CacheFormatError(f"range [{flo}, {fhi}) does not match request")
    body = blob[HEADER.size :]
    if len(body) != (fhi - flo) * RECORD.itemsize:
        raise CacheFormatError("record block has wrong length")
    rec = np.frombuffer(body, dtype=RECORD)
    seg = SieveSegment(
        flo,
        fhi,
        rec["P"].astype(np.int64),
        rec["beta"].astype(np.int64),
        rec["B"].astype(np.int64),
        rec["B1"].astype(np.int64),
        rec["omega"].astype(np.int8),
        rec["Omega"].astype(np.int8),
        rec["squarefull_part"].astype(np.int64),
    )
    if not np.array_equal(rec["squarefree"].astype(bool), seg.is_squarefree):
        raise CacheFormatError("squarefree column inconsistent")
    return seg


class SegmentCache:
    """Directory of segment files keyed by (lo, hi, version)."""

    def __init__(self, directory, version: int = FORMAT_VERSION):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.version = version
        self.hits = 0
        self.misses = 0
        self.recovered = 0
        self._lock = threading.Lock()

    def path(self, lo: int, hi: int) -> Path:
        return self.dir / f"seg_{lo}_{hi}_v{self.version}.lafs"

    def get_or_compute(self, lo: int, hi: int, compute) -> SieveSegment:
        p = self.path(lo, hi)
        if p.exists():
            try:
                seg = decode(p.read_bytes(), lo, hi, self.version)
                with self._lock:
                    self.hits += 1
                return seg
            except CacheFormatError as exc:
                log.warning("ignoring cache file %s: %s", p, exc)
                with self._lock:
                    self.recovered += 1
        seg = compute(lo, hi)
        tmp = p.with_suffix(f".tmp{threading.get_ident()}")
        tmp.write_bytes(encode(seg, self.version))
        os.replace(tmp, p)
        with self._lock:
            self.misses += 1
        return seg
