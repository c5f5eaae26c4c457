"""Pairwise BWT merge that also produces the merged LCP array.

Extends the counting pass of :mod:`gapmerge.hm_merge` with an integer block
array ``B`` of length n+1 (0-based here; entry i sits before merged position
i).  Nonzero entries mark boundaries between groups of entries whose
contexts share a prefix, and the value records the pass that first
discovered the boundary.  Entries are set at most once.  When every entry is
nonzero the interleaving is fully resolved and the merged LCP is simply
``B[i] - 1`` at every interior position.

A pass scans the previous bit vector left to right.  A fresh block id is
taken at every boundary known before this pass (values equal to the current
pass number count as unset, so this pass's own writes cannot affect it), and
the first time each symbol occurs inside a block the destination it writes
to is a boundary of the refined partition.

This module deliberately rescans the whole vector every pass; it serves as
the reference engine that gap_merge's skipping is checked against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from gapmerge.hm_merge import (
    FTable,
    MergeBitVector,
    NonConvergence,
    apply_merge,
    init_z,
    pair_codes,
    symbol_counts,
)
from gapmerge.textcore import BwtString, LcpArray, LengthMismatch

BID_NONE = -2  # "no block seen yet" marker; real block ids are -1 or scan positions


@dataclass
class BlockArray:
    """Boundary-discovery passes, index i = boundary before merged position i.

    values[0] and values[n] are bookends set at initialization; 0 means the
    boundary has not been discovered yet.
    """

    values: np.ndarray

    @property
    def unset_count(self) -> int:
        return int(np.count_nonzero(self.values == 0))


@dataclass
class BidTable:
    """Last block id in which each symbol was consumed during the current pass."""

    last_block: np.ndarray

    @classmethod
    def for_alphabet(cls, sigma: int) -> "BidTable":
        return cls(last_block=np.full(sigma, BID_NONE, dtype=np.int64))

    def reset(self):
        self.last_block.fill(BID_NONE)


def init_b(n0: int, n1: int) -> BlockArray:
    """Initial block array: one all-encompassing block."""
    if n0 + n1 < 2:
        raise ValueError("need at least two merged positions")
    values = np.zeros(n0 + n1 + 1, dtype=np.uint32)
    values[0] = 1
    values[n0 + n1] = 1
    return BlockArray(values=values)


@njit(cache=True)
def _hmlcp_pass(h, zprev, znext, b, eff0, eff1, f, bid_of):  # pragma: no cover
    """One boundary-tracking pass; returns the number of new boundaries."""
    n = zprev.size
    k0 = 0
    k1 = 0
    bid = np.int64(-1)
    written = 0
    for k in range(n):
        bk = b[k]
        if bk != 0 and bk != h:
            bid = k  # a block known before this pass starts here
        bit = zprev[k]
        if bit == 0:
            c = eff0[k0]
            k0 += 1
        else:
            c = eff1[k1]
            k1 += 1
        j = f[c]
        f[c] += 1
        znext[j] = bit
        if bid_of[c] != bid:
            bid_of[c] = bid
            if b[j] == 0:
                b[j] = h
                written += 1
    return written


class HmLcpRun:
    """Stepwise driver for the boundary-tracking merge.

    Exposes the bit vector and block array after every pass so differential
    and invariant tests can look inside; ``hmlcp_merge`` is the one-shot
    wrapper.
    """

    def __init__(self, bwt0: BwtString, bwt1: BwtString):
        self.bwt0 = bwt0
        self.bwt1 = bwt1
        self.n = bwt0.n + bwt1.n
        self.eff0, self.eff1, sigma = pair_codes(bwt0, bwt1)
        counts = symbol_counts(self.eff0, self.eff1, sigma)
        self._base_f = FTable.from_counts(counts).f - 1  # 0-based destinations
        self._f = np.empty_like(self._base_f)
        self._bid = BidTable.for_alphabet(sigma)
        self._zprev = init_z(bwt0.n, bwt1.n).bits
        self._znext = np.empty_like(self._zprev)
        self.block_array = init_b(bwt0.n, bwt1.n)
        self.unset = self.n + 1 - 2
        self.phase = 0

    @property
    def z(self) -> np.ndarray:
        """Bit vector after the last completed pass."""
        return self._zprev

    @property
    def b(self) -> np.ndarray:
        return self.block_array.values

    @property
    def done(self) -> bool:
        return self.unset == 0

    def step(self) -> int:
        """Run one pass; returns the number of boundaries discovered."""
        self.phase += 1
        np.copyto(self._f, self._base_f)
        self._bid.reset()
        written = _hmlcp_pass(
            np.uint32(self.phase),
            self._zprev,
            self._znext,
            self.b,
            self.eff0,
            self.eff1,
            self._f,
            self._bid.last_block,
        )
        self.unset -= written
        self._zprev, self._znext = self._znext, self._zprev
        return written

    def run(self):
        limit = self.n + 1
        while not self.done:
            if self.phase >= limit:
                raise NonConvergence(
                    f"boundaries still unset after {limit} passes; corrupt input BWTs"
                )
            self.step()

    def result(self) -> tuple[BwtString, LcpArray, MergeBitVector]:
        z = MergeBitVector(bits=self._zprev)
        merged = apply_merge(z, self.bwt0, self.bwt1)
        values = np.empty(self.n + 1, dtype=np.int32)
        values[0] = -1
        values[self.n] = -1
        values[1 : self.n] = self.b[1 : self.n].astype(np.int32) - 1
        return merged, LcpArray(values=values), z


def hmlcp_phase(
    h: int,
    zprev: MergeBitVector,
    b: BlockArray,
    bwt0: BwtString,
    bwt1: BwtString,
) -> MergeBitVector:
    """One standalone pass; mutates ``b`` and returns the refined bit vector."""
    eff0, eff1, sigma = pair_codes(bwt0, bwt1)
    f = FTable.from_counts(symbol_counts(eff0, eff1, sigma)).f - 1
    bid = BidTable.for_alphabet(sigma)
    znext = np.empty_like(zprev.bits)
    _hmlcp_pass(np.uint32(h), zprev.bits, znext, b.values, eff0, eff1, f, bid.last_block)
    return MergeBitVector(bits=znext)


def hmlcp_merge(
    bwt0: BwtString,
    lcp0: LcpArray,
    bwt1: BwtString,
    lcp1: LcpArray,
) -> tuple[BwtString, LcpArray, MergeBitVector]:
    """Merge two BWT+LCP pairs into the pair BWT, LCP and interleaving.

    The input LCP arrays only validate the pairing; the merged LCP is read
    off the completed block array.
    """
    if lcp0.n != bwt0.n or lcp1.n != bwt1.n:
        raise LengthMismatch("LCP arrays do not match BWT lengths")
    run = HmLcpRun(bwt0, bwt1)
    run.run()
    return run.result()
