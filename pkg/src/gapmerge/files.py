"""On-disk formats for BWT and LCP arrays.

.bwt: magic "GAPBWT1\\n", u64-le n, u64-le k (string count), n payload
bytes with every terminator stored as 0x00.  Which terminator is which is
implicit in left-to-right order; a merge only ever needs "all left
terminators sort below all right terminators", so per-string identity is
reassigned by appearance on load.

.lcp: magic "GAPLCP1\\n", u64-le n, n u32-le values.  Slot 0 is stored as 0
(the in-memory -1 bookend is a notation convenience, not representable
unsigned).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from gapmerge.textcore import SENTINEL_LIMIT, BwtString, LcpArray

BWT_MAGIC = b"GAPBWT1\n"
LCP_MAGIC = b"GAPLCP1\n"


class FormatError(ValueError):
    """A .bwt or .lcp file does not match its declared format."""


def externalize_bwt(bwt: BwtString) -> bytes:
    """Symbol sequence in file form: every terminator as 0x00."""
    out = bwt.symbols.copy()
    out[out < SENTINEL_LIMIT] = 0
    return out.tobytes()


def write_bwt(path: str | Path, bwt: BwtString) -> None:
    with open(path, "wb") as fh:
        fh.write(BWT_MAGIC)
        fh.write(struct.pack("<QQ", bwt.n, bwt.string_count))
        fh.write(externalize_bwt(bwt))


def read_bwt(path: str | Path) -> BwtString:
    data = Path(path).read_bytes()
    if len(data) < len(BWT_MAGIC) + 16 or not data.startswith(BWT_MAGIC):
        raise FormatError(f"{path}: not a .bwt file")
    n, k = struct.unpack_from("<QQ", data, len(BWT_MAGIC))
    body = data[len(BWT_MAGIC) + 16 :]
    if len(body) != n:
        raise FormatError(f"{path}: expected {n} symbols, file holds {len(body)}")
    symbols = np.frombuffer(body, dtype=np.uint8).copy()
    if np.count_nonzero(symbols == 1):
        raise FormatError(f"{path}: byte 0x01 is not a valid stored symbol")
    terminators = int(np.count_nonzero(symbols == 0))
    if terminators != k:
        raise FormatError(
            f"{path}: header declares {k} strings but {terminators} terminators present"
        )
    return BwtString(symbols=symbols, string_count=int(k))


def write_lcp(path: str | Path, lcp: LcpArray) -> None:
    values = lcp.values
    out = values[:-1].astype(np.uint32)  # drop the trailing bookend
    out[0] = 0  # leading bookend stored as 0
    with open(path, "wb") as fh:
        fh.write(LCP_MAGIC)
        fh.write(struct.pack("<Q", out.size))
        fh.write(out.astype("<u4").tobytes())


def read_lcp(path: str | Path) -> LcpArray:
    data = Path(path).read_bytes()
    if len(data) < len(LCP_MAGIC) + 8 or not data.startswith(LCP_MAGIC):
        raise FormatError(f"{path}: not a .lcp file")
    (n,) = struct.unpack_from("<Q", data, len(LCP_MAGIC))
    body = data[len(LCP_MAGIC) + 8 :]
    if len(body) != 4 * n:
        raise FormatError(f"{path}: expected {n} values, file holds {len(body) // 4}")
    ext = np.frombuffer(body, dtype="<u4").astype(np.int32)
    if n and ext[0] != 0:
        raise FormatError(f"{path}: slot 1 must be stored as 0")
    values = np.empty(n + 1, dtype=np.int32)
    values[0] = -1
    values[-1] = -1
    if n > 1:
        values[1:n] = ext[1:]
    return LcpArray(values=values)
