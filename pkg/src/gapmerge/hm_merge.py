"""Baseline pairwise BWT merge: iterate the counting pass to a fixed point.

Each pass reads the current interleaving bit vector, consumes the next
symbol of the corresponding input BWT for every bit, and writes the bit back
at that symbol's next free slot (a stable counting sort keyed by symbol).
After pass h the bit vector orders entries by the first h symbols of their
contexts, so iterating to a fixed point yields the interleaving of the
multi-string BWT.  No LCP output here; see hm_lcp and gap_merge for that.

Multi-string inputs are handled by the effective pair coding of
:func:`pair_codes`: every terminator of the left input sorts below every
terminator of the right input, which sorts below all payload symbols.
Individual terminator identities within one input never need comparing
because a merge keeps each input's entries in their original relative
order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gapmerge.textcore import SENTINEL_LIMIT, BwtString


class NonConvergence(RuntimeError):
    """Merge did not settle within the phase bound; inputs are not valid BWTs."""


class CountMismatch(ValueError):
    """Bit counts of the interleaving vector disagree with the input lengths."""


@dataclass
class MergeBitVector:
    """Interleaving of two BWTs: bit 0 = entry of the left input, 1 = right."""

    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.ascontiguousarray(self.bits, dtype=np.uint8)

    @property
    def zero_count(self) -> int:
        return int(self.bits.size - np.count_nonzero(self.bits))

    @property
    def one_count(self) -> int:
        return int(np.count_nonzero(self.bits))


@dataclass
class FTable:
    """Per-symbol write cursors for one pass.

    Before a pass, ``f[c]`` is 1 + the number of occurrences of symbols
    smaller than ``c`` across both inputs (1-based destination of c's first
    entry); during the pass it only increments.
    """

    f: np.ndarray

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "FTable":
        f = np.empty(counts.size, dtype=np.int64)
        f[0] = 1
        np.cumsum(counts[:-1], out=f[1:])
        f[1:] += 1
        return cls(f=f)


def pair_codes(bwt0: BwtString, bwt1: BwtString) -> tuple[np.ndarray, np.ndarray, int]:
    """Effective symbol codes for merging bwt0 (left) with bwt1 (right).

    Left terminators take codes 0..k0-1 in order of appearance, right
    terminators k0..k0+k1-1, and payload byte b becomes k0+k1-2+b.  Returns
    the two recoded sequences and the table size (max code + 1).  For two
    single-string inputs this is the identity on the stored codes.
    """
    k0, k1 = bwt0.string_count, bwt1.string_count
    shift = k0 + k1 - 2
    eff0 = bwt0.symbols.astype(np.int32) + shift
    sent0 = np.flatnonzero(bwt0.symbols < SENTINEL_LIMIT)
    eff0[sent0] = np.arange(k0, dtype=np.int32)
    eff1 = bwt1.symbols.astype(np.int32) + shift
    sent1 = np.flatnonzero(bwt1.symbols < SENTINEL_LIMIT)
    eff1[sent1] = np.arange(k0, k0 + k1, dtype=np.int32)
    return eff0, eff1, shift + 256


def symbol_counts(eff0: np.ndarray, eff1: np.ndarray, sigma: int) -> np.ndarray:
    counts = np.bincount(eff0, minlength=sigma)
    counts += np.bincount(eff1, minlength=sigma)
    return counts.astype(np.int64)


def init_z(n0: int, n1: int) -> MergeBitVector:
    """Phase-0 interleaving: all left entries, then all right entries."""
    if n0 < 1 or n1 < 1:
        raise ValueError("both inputs must be nonempty (every string has a terminator)")
    bits = np.zeros(n0 + n1, dtype=np.uint8)
    bits[n0:] = 1
    return MergeBitVector(bits=bits)


def _interleaved_symbols(z: np.ndarray, eff0: np.ndarray, eff1: np.ndarray) -> np.ndarray:
    """Symbols consumed by a pass, in scan order."""
    s = np.empty(z.size, dtype=np.int32)
    mask = z == 0
    s[mask] = eff0
    s[~mask] = eff1
    return s


def _phase(z: np.ndarray, eff0: np.ndarray, eff1: np.ndarray) -> np.ndarray:
    # Stable argsort by consumed symbol is exactly the counting pass: the
    # destination of scan position k is its rank among (symbol, k) pairs,
    # which is what the f[c]++ cursor walk produces.
    s = _interleaved_symbols(z, eff0, eff1)
    order = np.argsort(s, kind="stable")
    return z[order]


def hm_phase(zprev: MergeBitVector, bwt0: BwtString, bwt1: BwtString) -> MergeBitVector:
    """One pass: refine the interleaving by one more context symbol."""
    if zprev.zero_count != bwt0.n or zprev.one_count != bwt1.n:
        raise CountMismatch("bit vector does not match input lengths")
    eff0, eff1, _ = pair_codes(bwt0, bwt1)
    return MergeBitVector(bits=_phase(zprev.bits, eff0, eff1))


def hm_merge_stats(bwt0: BwtString, bwt1: BwtString) -> tuple[MergeBitVector, BwtString, int]:
    """hm_merge plus the number of passes run to confirm the fixed point.

    A pass is a deterministic function of the bit vector, so a fixed point
    is terminal; with distinct terminators it is reached after maxlcp+2
    passes at the latest.
    """
    eff0, eff1, _ = pair_codes(bwt0, bwt1)
    z = init_z(bwt0.n, bwt1.n).bits
    limit = bwt0.n + bwt1.n + 1
    for phases in range(1, limit + 1):
        znext = _phase(z, eff0, eff1)
        if np.array_equal(znext, z):
            merged = apply_merge(MergeBitVector(bits=znext), bwt0, bwt1)
            return MergeBitVector(bits=znext), merged, phases
        z = znext
    raise NonConvergence(f"no fixed point within {limit} passes; corrupt input BWTs")


def hm_merge(bwt0: BwtString, bwt1: BwtString) -> tuple[MergeBitVector, BwtString]:
    """Merge two BWTs, returning the interleaving vector and the merged BWT."""
    z, merged, _ = hm_merge_stats(bwt0, bwt1)
    return z, merged


def apply_merge(z: MergeBitVector, bwt0: BwtString, bwt1: BwtString) -> BwtString:
    """Stably un-interleave: position k takes the next unconsumed symbol of side z[k]."""
    if z.zero_count != bwt0.n or z.one_count != bwt1.n:
        raise CountMismatch("bit vector does not match input lengths")
    out = np.empty(z.bits.size, dtype=np.uint8)
    mask = z.bits == 0
    out[mask] = bwt0.symbols
    out[~mask] = bwt1.symbols
    return BwtString(symbols=out, string_count=bwt0.string_count + bwt1.string_count)
