"""Core string types: texts, suffix arrays, BWTs, LCP arrays, and the merge oracle.

Symbol encoding
---------------
Internally every string is an array of 8-bit codes.  Codes 0 and 1 are
reserved for the terminators of the first and second string of a merge pair;
payload bytes keep their raw values 2..255.  Input bytes 0x00 and 0x01 are
rejected so the reserved codes stay unique.  Under plain integer comparison
this makes terminator-0 < terminator-1 < every payload symbol, which is the
ordering every algorithm in this package relies on.

Index conventions
-----------------
``SuffixArray.sa`` holds 1-based text positions (the classic presentation).
``LcpArray.values`` has length n+1 with ``values[0] == values[n] == -1`` as
bookends; ``values[i]`` for 1 <= i <= n-1 is the longest-common-prefix length
of the suffixes ranked i-1 and i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

SENTINEL_LIMIT = 2  # codes below this are string terminators


class ReservedByte(ValueError):
    """Raw input contains byte 0x00 or 0x01, which are reserved codes."""


class LengthMismatch(ValueError):
    """Paired arrays disagree on the underlying text length."""


class MalformedBwt(ValueError):
    """A byte sequence that cannot be inverted as a single-string BWT."""


@dataclass
class Text:
    """A payload plus its unique terminator, smaller than all payload symbols."""

    payload: bytes
    sentinel_rank: int
    codes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.sentinel_rank not in (0, 1):
            raise ValueError(f"sentinel_rank must be 0 or 1, got {self.sentinel_rank}")
        raw = np.frombuffer(self.payload, dtype=np.uint8)
        if raw.size and raw.min() < SENTINEL_LIMIT:
            raise ReservedByte("payload contains a reserved byte (0x00 or 0x01)")
        codes = np.empty(raw.size + 1, dtype=np.uint8)
        codes[:-1] = raw
        codes[-1] = self.sentinel_rank
        self.codes = codes

    @property
    def n(self) -> int:
        """Length in symbols, terminator included."""
        return len(self.payload) + 1


@dataclass
class SuffixArray:
    """Permutation of [1, n] listing suffix start positions in sorted order."""

    sa: np.ndarray


@dataclass
class LcpArray:
    """LCP values between ranked-adjacent suffixes, with -1 bookends."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.size - 1


@dataclass
class BwtString:
    """A BWT over one or more strings; codes below 2 are terminators."""

    symbols: np.ndarray
    string_count: int

    def __post_init__(self):
        self.symbols = np.ascontiguousarray(self.symbols, dtype=np.uint8)
        found = int(np.count_nonzero(self.symbols < SENTINEL_LIMIT))
        if found != self.string_count:
            raise ValueError(
                f"expected {self.string_count} terminator symbols, found {found}"
            )

    @property
    def n(self) -> int:
        return self.symbols.size


def remap_alphabet(raw: bytes, sentinel_rank: int = 0) -> Text:
    """Turn a raw byte string into a Text, appending the terminator.

    Payload bytes are used as-is (the identity mapping over 2..255 is
    trivially bijective); bytes 0x00/0x01 raise ReservedByte because they
    would collide with the terminator codes.
    """
    return Text(payload=raw, sentinel_rank=sentinel_rank)


def _suffix_array_codes(codes: np.ndarray) -> np.ndarray:
    """0-based suffix array of an integer sequence, by prefix doubling.

    O(n log^2 n); fine up to a few MiB.  Any total order works as input, so
    the same routine serves both single texts and pair/collection
    concatenations.
    """
    n = codes.size
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    rank = codes.astype(np.int64)
    k = 1
    while True:
        lo = np.full(n, -1, dtype=np.int64)
        lo[: n - k] = rank[k:]
        order = np.lexsort((lo, rank))
        hi_s = rank[order]
        lo_s = lo[order]
        bump = np.empty(n, dtype=np.int64)
        bump[0] = 0
        bump[1:] = (hi_s[1:] != hi_s[:-1]) | (lo_s[1:] != lo_s[:-1])
        new_rank = np.empty(n, dtype=np.int64)
        new_rank[order] = np.cumsum(bump)
        rank = new_rank
        if rank[order[-1]] == n - 1:
            return order
        k <<= 1


def build_suffix_array(t: Text) -> SuffixArray:
    """Suffix array of a Text, 1-based positions."""
    order = _suffix_array_codes(t.codes)
    return SuffixArray(sa=(order + 1).astype(np.int64))


def bwt_from_sa(t: Text, sa: SuffixArray) -> BwtString:
    """BWT of a single Text given its suffix array."""
    if sa.sa.size != t.n:
        raise LengthMismatch(f"suffix array has {sa.sa.size} entries for text of length {t.n}")
    prev = sa.sa - 2  # symbol preceding each suffix, 0-based
    prev[sa.sa == 1] = t.n - 1  # rank of the full string wraps to the terminator
    return BwtString(symbols=t.codes[prev], string_count=1)


@njit(cache=True)
def _kasai(codes, sa0):  # pragma: no cover - exercised through lcp_from_sa
    n = sa0.size
    isa = np.empty(n, dtype=np.int64)
    for i in range(n):
        isa[sa0[i]] = i
    lcp = np.zeros(n, dtype=np.int64)
    h = 0
    for i in range(n):
        r = isa[i]
        if r > 0:
            j = sa0[r - 1]
            while i + h < n and j + h < n and codes[i + h] == codes[j + h]:
                h += 1
            lcp[r] = h
            if h > 0:
                h -= 1
        else:
            h = 0
    return lcp


def _lcp_values(codes: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Internal LCP representation (length n+1, -1 bookends) for any SA."""
    n = order.size
    values = np.empty(n + 1, dtype=np.int32)
    values[0] = -1
    values[n] = -1
    if n > 1:
        values[1:n] = _kasai(codes, order.astype(np.int64))[1:]
    return values


def lcp_from_sa(t: Text, sa: SuffixArray) -> LcpArray:
    """LCP array of a Text given its suffix array (Kasai's scan)."""
    if sa.sa.size != t.n:
        raise LengthMismatch(f"suffix array has {sa.sa.size} entries for text of length {t.n}")
    return LcpArray(values=_lcp_values(t.codes, sa.sa - 1))


def build_bwt_lcp(t: Text) -> tuple[BwtString, LcpArray]:
    """Convenience: suffix array, BWT and LCP of a Text in one call."""
    sa = build_suffix_array(t)
    return bwt_from_sa(t, sa), lcp_from_sa(t, sa)


def oracle_merge(t0: Text, t1: Text) -> tuple[BwtString, LcpArray, np.ndarray]:
    """Ground truth for a pair merge, straight from the concatenation's SA.

    Returns the multi-string BWT, its LCP array, and the source-id bit
    sequence (0 = symbol from t0, 1 = from t1).  The BWT stores each
    string's own terminator at the rank of that string's full suffix, so it
    differs from the plain BWT of the concatenation only by the terminator
    swap.
    """
    if t0.sentinel_rank != 0 or t1.sentinel_rank != 1:
        raise ValueError("oracle_merge needs sentinel ranks 0 and 1 in order")
    n0 = t0.n
    concat = np.concatenate([t0.codes, t1.codes])
    order = _suffix_array_codes(concat)
    mbwt = np.where(order > 0, concat[order - 1], np.uint8(0))
    mbwt[order == n0] = 1  # rank of t1's full suffix carries t1's terminator
    z = (order >= n0).astype(np.uint8)
    lcp = LcpArray(values=_lcp_values(concat, order))
    return BwtString(symbols=mbwt.astype(np.uint8), string_count=2), lcp, z


def oracle_merge_many(payloads: list[bytes]) -> tuple[np.ndarray, LcpArray, np.ndarray]:
    """Ground truth for a k-string collection merge.

    Each string gets a distinct terminator ordered by its position in the
    collection.  Returns the merged BWT in external byte form (every
    terminator as 0x00), the LCP array, and the per-position source string
    index.
    """
    k = len(payloads)
    if k < 1:
        raise ValueError("need at least one string")
    parts = []
    starts = []
    pos = 0
    for i, raw in enumerate(payloads):
        data = np.frombuffer(raw, dtype=np.uint8)
        if data.size and data.min() < SENTINEL_LIMIT:
            raise ReservedByte("payload contains a reserved byte (0x00 or 0x01)")
        codes = np.empty(data.size + 1, dtype=np.int64)
        codes[:-1] = data.astype(np.int64) + k  # shift payload above the terminators
        codes[-1] = i
        parts.append(codes)
        starts.append(pos)
        pos += codes.size
    concat = np.concatenate(parts)
    n = concat.size
    order = _suffix_array_codes(concat)
    mbwt = np.where(order > 0, concat[order - 1], np.int64(0))
    start_arr = np.asarray(starts, dtype=np.int64)
    for i, s in enumerate(starts):
        mbwt[order == s] = i  # full-suffix rank of string i carries terminator i
    ids = (np.searchsorted(start_arr, order, side="right") - 1).astype(np.int64)
    ext = np.where(mbwt < k, 0, mbwt - k).astype(np.uint8)
    lcp = LcpArray(values=_lcp_values(concat, order))
    return ext, lcp, ids


def invert_bwt(b: BwtString) -> Text:
    """Invert a single-string BWT back to its Text (round-trip utility)."""
    if b.string_count != 1:
        raise MalformedBwt("only single-string BWTs can be inverted")
    n = b.n
    order = np.argsort(b.symbols, kind="stable")
    lf = np.empty(n, dtype=np.int64)
    lf[order] = np.arange(n)
    codes = np.empty(n, dtype=np.uint8)
    codes[n - 1] = b.symbols[order[0]]  # smallest rank is the terminator's row
    row = 0
    seen = np.zeros(n, dtype=bool)
    for p in range(n - 1, 0, -1):
        if seen[row]:
            raise MalformedBwt("LF mapping does not form a single cycle")
        seen[row] = True
        codes[p - 1] = b.symbols[row]
        row = lf[row]
    if seen[row] or lf[row] != 0:
        raise MalformedBwt("LF mapping does not form a single cycle")
    sentinel = int(codes[n - 1])
    if sentinel >= SENTINEL_LIMIT or (n > 1 and codes[:-1].min() < SENTINEL_LIMIT):
        raise MalformedBwt("terminator is not the unique smallest symbol")
    return Text(payload=codes[:-1].tobytes(), sentinel_rank=sentinel)
