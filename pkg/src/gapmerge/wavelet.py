"""Static rank/access structure over a symbol sequence.

Layout is the level-wise "matrix" variant: at level l every element is
routed by bit (L-1-l) of its dense code, zeros first, with a global stable
partition between levels.  Each level is one packed bit plane with a
per-word rank directory, so ``rank`` costs one word-popcount per level,
O(log sigma) total.  Symbols are densely remapped first, so DNA-like inputs
get 2-3 levels instead of 8.

The numba helpers at the bottom operate on the raw arrays so the merge
kernels can call them without going through Python objects; the
:class:`WaveletTree` methods are thin wrappers over the same functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from gapmerge.textcore import BwtString

_U64 = np.uint64
_EMPTY_TREE = None  # set after WaveletTree is defined


@dataclass
class WaveletTree:
    """Bit planes with rank support over a fixed sequence."""

    n: int
    symbols: np.ndarray        # sorted distinct symbols (the alphabet map)
    lookup: np.ndarray         # symbol -> dense code, -1 when absent
    planes: np.ndarray         # uint64[levels, words]
    rank_dir: np.ndarray       # uint32[levels, words], ones before each word
    zeros: np.ndarray          # int64[levels], total zeros per level
    starts: np.ndarray         # int64[dense codes], bucket start at the last level

    @property
    def levels(self) -> int:
        return self.planes.shape[0]

    def rank(self, c: int, i: int) -> int:
        """Occurrences of symbol ``c`` in the first ``i`` sequence positions.

        Unknown symbols have zero occurrences by definition.
        """
        if not 0 <= i <= self.n:
            raise IndexError(f"prefix length {i} out of range [0, {self.n}]")
        return int(
            wm_rank(self.planes, self.rank_dir, self.zeros, self.starts, self.lookup, c, i)
        )

    def access(self, i: int) -> int:
        """The symbol stored at position ``i``."""
        if not 0 <= i < self.n:
            raise IndexError(f"position {i} out of range [0, {self.n})")
        code = wm_access(self.planes, self.rank_dir, self.zeros, i)
        return int(self.symbols[code])

    def kernel_args(self) -> tuple:
        """The raw arrays, in the order the merge kernels expect."""
        return (self.planes, self.rank_dir, self.zeros, self.starts, self.lookup)


def _pack_bits(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pack a 0/1 array into uint64 words plus an exclusive ones-count directory.

    The directory has one entry per word plus a final total, so rank at
    prefix length n (a whole-word boundary when 64 | n) stays in bounds.
    """
    packed = np.packbits(bits, bitorder="little")
    pad = (-packed.size) % 8
    if pad:
        packed = np.pad(packed, (0, pad))
    words = packed.view(_U64)
    csum = np.cumsum(bits, dtype=np.int64)
    rank_dir = np.zeros(words.size + 1, dtype=np.uint32)
    rank_dir[1:-1] = csum[63::64][: words.size - 1]
    rank_dir[-1] = csum[-1]
    return words, rank_dir


def build(seq) -> WaveletTree:
    """Build a WaveletTree over a BwtString or plain integer array."""
    if isinstance(seq, BwtString):
        seq = seq.symbols
    data = np.asarray(seq)
    n = data.size
    if n == 0:
        raise ValueError("cannot build a wavelet tree over an empty sequence")
    symbols, dense = np.unique(data, return_inverse=True)
    symbols = symbols.astype(np.int64)
    sigma = symbols.size
    lookup = np.full(int(symbols[-1]) + 1, -1, dtype=np.int32)
    lookup[symbols] = np.arange(sigma, dtype=np.int32)
    levels = max(int(sigma - 1).bit_length(), 0)
    words_per_level = (n + 63) // 64
    planes = np.zeros((levels, words_per_level), dtype=_U64)
    rank_dir = np.zeros((levels, words_per_level + 1), dtype=np.uint32)
    zeros = np.zeros(levels, dtype=np.int64)
    cur = dense.astype(np.int64)
    for lvl in range(levels):
        bits = ((cur >> (levels - 1 - lvl)) & 1).astype(np.uint8)
        planes[lvl], rank_dir[lvl] = _pack_bits(bits)
        zeros[lvl] = n - int(bits.sum())
        mask = bits == 0
        cur = np.concatenate((cur[mask], cur[~mask]))
    # starts[code]: route an imaginary prefix of length 0 down code's path;
    # the landing offset is where code's bucket begins at the deepest level.
    starts = np.empty(sigma, dtype=np.int64)
    for code in range(sigma):
        lo = 0
        for lvl in range(levels):
            if (code >> (levels - 1 - lvl)) & 1:
                lo = int(zeros[lvl]) + int(_rank1(planes[lvl], rank_dir[lvl], lo))
            else:
                lo = lo - int(_rank1(planes[lvl], rank_dir[lvl], lo))
        starts[code] = lo
    return WaveletTree(
        n=n,
        symbols=symbols,
        lookup=lookup,
        planes=planes,
        rank_dir=rank_dir,
        zeros=zeros,
        starts=starts,
    )


def empty_kernel_args() -> tuple:
    """Placeholder arrays matching kernel_args() types, for counts-mode runs."""
    return (
        np.zeros((0, 0), dtype=_U64),
        np.zeros((0, 0), dtype=np.uint32),
        np.zeros(0, dtype=np.int64),
        np.zeros(0, dtype=np.int64),
        np.zeros(0, dtype=np.int32),
    )


@njit(cache=True)
def _popcount(x):  # pragma: no cover - numba helper
    x = x - ((x >> _U64(1)) & _U64(0x5555555555555555))
    x = (x & _U64(0x3333333333333333)) + ((x >> _U64(2)) & _U64(0x3333333333333333))
    x = (x + (x >> _U64(4))) & _U64(0x0F0F0F0F0F0F0F0F)
    return int((x * _U64(0x0101010101010101)) >> _U64(56))


@njit(cache=True)
def _rank1(plane, rank_dir, p):  # pragma: no cover - numba helper
    w = p >> 6
    rem = p & 63
    ones = np.int64(rank_dir[w])
    if rem:
        mask = (_U64(1) << _U64(rem)) - _U64(1)
        ones += _popcount(plane[w] & mask)
    return ones


@njit(cache=True)
def wm_rank(planes, rank_dir, zeros, starts, lookup, sym, i):  # pragma: no cover
    """rank(sym, i) over the packed representation; 0 for unknown symbols."""
    if i <= 0:
        return np.int64(0)
    if sym < 0 or sym >= lookup.size:
        return np.int64(0)
    code = lookup[sym]
    if code < 0:
        return np.int64(0)
    levels = planes.shape[0]
    hi = np.int64(i)
    for lvl in range(levels):
        ones = _rank1(planes[lvl], rank_dir[lvl], hi)
        if (code >> (levels - 1 - lvl)) & 1:
            hi = zeros[lvl] + ones
        else:
            hi = hi - ones
    return hi - starts[code]


@njit(cache=True)
def wm_access(planes, rank_dir, zeros, i):  # pragma: no cover
    """Dense code stored at position i."""
    levels = planes.shape[0]
    code = 0
    p = np.int64(i)
    for lvl in range(levels):
        bit = (planes[lvl][p >> 6] >> _U64(p & 63)) & _U64(1)
        ones = _rank1(planes[lvl], rank_dir[lvl], p)
        if bit:
            code = (code << 1) | 1
            p = zeros[lvl] + ones
        else:
            code = code << 1
            p = p - ones
    return code
