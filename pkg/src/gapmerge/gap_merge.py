"""Block-skipping pairwise merge of BWT+LCP pairs.

Same per-position processing as :mod:`gapmerge.hm_lcp`, but a pass only
scans *active* blocks.  A block whose bits all come from one input
("monochrome") can never change again: after processing it one final time
it is marked irrelevant and every later pass jumps over it in O(1), keeping
the global cursors consistent through a per-range record of its 0/1 bit
counts.  Adjacent irrelevant ranges are coalesced, so between two active
blocks there is at most one skip.  The pass ends when irrelevant ranges
cover everything; the merged LCP then comes from the block array where
boundaries were discovered and from the input LCP arrays inside monochrome
ranges.

Cursor consistency across skips has two flavors:

* ``counts`` mode stores per-range symbol occurrence counts and adds them
  to the write cursors F when the range is skipped (O(alphabet) per skip;
  cheap for small alphabets).
* ``wavelet`` mode (default) stores only the bit counts and repairs F
  lazily: at the first occurrence of a symbol inside an active block, rank
  queries over wavelet trees of the two inputs count how many occurrences
  were skipped since F[c] was last touched.

Buffer discipline: the bit vector is double-buffered, which needs two
repairs to stay consistent with skipping.  First, a range is copied into the
write buffer when it is marked, so both buffers hold its final bits forever
after.  Second, the positions a marked block *writes to* would go stale in
the alternate buffer once the block stops being processed, so the block's
destination runs (contiguous per symbol: the write cursor minus the
in-block count gives each run start) are recorded at marking time and
patched into the other buffer at the start of the next pass.  Both repairs
write values that are already final, so later legitimate writes into the
same positions are harmless repeats.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from gapmerge import wavelet
from gapmerge.hm_lcp import BID_NONE, BlockArray, init_b
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
from gapmerge.wavelet import WaveletTree, wm_rank


class NotConverged(RuntimeError):
    """finalize() was called while active blocks remain."""


# counter slots filled by the pass kernel
C_ACTIVE = 0       # positions scanned in active blocks
C_BLOCKS = 1       # active blocks processed
C_MARKED = 2       # blocks found monochrome and marked
C_SKIPS = 3        # irrelevant ranges skipped
C_SYNCS = 4        # lazy F repairs (each is O(log alphabet))
C_BWRITES = 5      # new block boundaries recorded
N_COUNTERS = 6


@dataclass
class IrrelevantRecord:
    """Bookkeeping carried by a skipped range."""

    r0: int
    r1: int
    occ: np.ndarray | None = None  # per-symbol counts, counts mode only


@dataclass
class BlockMap:
    """Boundary array plus the ordered skipped ranges between active blocks."""

    boundaries: BlockArray
    irrelevant: list[tuple[int, int, IrrelevantRecord]]


@dataclass
class LazyFState:
    """Write cursors plus the read positions at each cursor's last repair."""

    f: np.ndarray
    l0: np.ndarray
    l1: np.ndarray


@dataclass
class GapStats:
    """Work accounting for one merge."""

    phases: int = 0
    active_work: list[int] = field(default_factory=list)
    blocks_processed: int = 0
    blocks_marked: int = 0
    ranges_skipped: int = 0
    rank_syncs: int = 0
    boundary_writes: int = 0

    @property
    def total_active_work(self) -> int:
        return sum(self.active_work)


@dataclass
class PhaseTrace:
    """Instrumented snapshot of one pass (small inputs only)."""

    phase: int
    z_in: np.ndarray
    b_in: np.ndarray
    ranges_in: list[tuple[int, int]]
    z_out: np.ndarray
    b_out: np.ndarray
    ranges_out: list[tuple[int, int]]
    dest: np.ndarray  # destination written from each scanned position, -1 if skipped


@njit(cache=True)
def _skip_irrelevant(f, occ, row, r0, r1, k0, k1, counts_mode):  # pragma: no cover
    """Advance the read cursors past a skipped range; eager F update in counts mode."""
    if counts_mode:
        for c in range(occ.shape[1]):
            f[c] += occ[row, c]
    return k0 + r0, k1 + r1


@njit(cache=True)
def _lazy_sync(c, p0, p1, f, l0, l1,
               planes0, rdir0, zeros0, starts0, lookup0,
               planes1, rdir1, zeros1, starts1, lookup1):  # pragma: no cover
    """Repair f[c] with the occurrences skipped since its last update."""
    f[c] += (
        wm_rank(planes0, rdir0, zeros0, starts0, lookup0, c, p0)
        - wm_rank(planes0, rdir0, zeros0, starts0, lookup0, c, l0[c])
        + wm_rank(planes1, rdir1, zeros1, starts1, lookup1, c, p1)
        - wm_rank(planes1, rdir1, zeros1, starts1, lookup1, c, l1[c])
    )
    l0[c] = p0
    l1[c] = p1
    return f[c]


@njit(cache=True)
def _gap_pass(h, zprev, znext, b, eff0, eff1, f, bid_of, l0, l1,
              in_start, in_end, in_r0, in_r1, in_occ,
              out_start, out_end, out_r0, out_r1, out_occ,
              fix_start, fix_len, fix_color,
              blk_syms, blk_cnt,
              counts_mode,
              planes0, rdir0, zeros0, starts0, lookup0,
              planes1, rdir1, zeros1, starts1, lookup1,
              trace_dest, counters):  # pragma: no cover
    """One pass over active blocks only.

    Returns (ranges out, fixup runs out, status); nonzero status means an
    output array overflowed (1 = ranges, 2 = fixups) and the pass must be
    retried with more room.
    """
    n = zprev.size
    rin = in_start.size
    cap = out_start.size
    fcap = fix_start.size
    tracing = trace_dest.size > 0
    sigma = f.size
    ri = 0
    ro = 0
    nfix = 0
    k = 0
    k0 = 0
    k1 = 0
    while k < n:
        if ri < rin and in_start[ri] == k:
            r0 = in_r0[ri]
            r1 = in_r1[ri]
            k0, k1 = _skip_irrelevant(f, in_occ, ri, r0, r1, k0, k1, counts_mode)
            counters[C_SKIPS] += 1
            e = in_end[ri]
            if ro > 0 and out_end[ro - 1] == k - 1:
                out_end[ro - 1] = e
                out_r0[ro - 1] += r0
                out_r1[ro - 1] += r1
                if counts_mode:
                    for c in range(sigma):
                        out_occ[ro - 1, c] += in_occ[ri, c]
            else:
                if ro == cap:
                    return ro, nfix, 1
                out_start[ro] = k
                out_end[ro] = e
                out_r0[ro] = r0
                out_r1[ro] = r1
                if counts_mode:
                    for c in range(sigma):
                        out_occ[ro, c] = in_occ[ri, c]
                ro += 1
            k = e + 1
            ri += 1
            continue

        # active block starting at k; its id is its start position
        blk = k
        bid = np.int64(k)
        k0s = k0
        k1s = k1
        nsyms = 0
        saw0 = False
        saw1 = False
        while True:
            bit = zprev[k]
            if bit == 0:
                c = eff0[k0]
                k0 += 1
                saw0 = True
            else:
                c = eff1[k1]
                k1 += 1
                saw1 = True
            first = bid_of[c] != bid
            if first:
                bid_of[c] = bid
                blk_syms[nsyms] = c
                blk_cnt[c] = 0
                nsyms += 1
                if not counts_mode:
                    p0 = k0
                    p1 = k1
                    if bit == 0:
                        p0 -= 1
                    else:
                        p1 -= 1
                    _lazy_sync(c, p0, p1, f, l0, l1,
                               planes0, rdir0, zeros0, starts0, lookup0,
                               planes1, rdir1, zeros1, starts1, lookup1)
                    counters[C_SYNCS] += 1
            blk_cnt[c] += 1
            j = f[c]
            f[c] += 1
            if not counts_mode:
                l0[c] = k0
                l1[c] = k1
            znext[j] = bit
            if first and b[j] == 0:
                b[j] = h
                counters[C_BWRITES] += 1
            if tracing:
                trace_dest[k] = j
            counters[C_ACTIVE] += 1
            k += 1
            if k >= n:
                break
            bk = b[k]
            if bk != 0 and bk != h:
                break
        counters[C_BLOCKS] += 1

        if not (saw0 and saw1):
            # monochrome: its own bits are final, so freeze the write buffer
            # and record the range for skipping; its destination runs must be
            # replayed into the other buffer next pass, so record those too
            color = np.uint8(0) if saw0 else np.uint8(1)
            for q in range(blk, k):
                znext[q] = zprev[q]
            if nfix + nsyms > fcap:
                return ro, nfix, 2
            for s in range(nsyms):
                c = blk_syms[s]
                fix_start[nfix] = f[c] - blk_cnt[c]
                fix_len[nfix] = blk_cnt[c]
                fix_color[nfix] = color
                nfix += 1
            nr0 = k0 - k0s
            nr1 = k1 - k1s
            counters[C_MARKED] += 1
            if ro > 0 and out_end[ro - 1] == blk - 1:
                out_end[ro - 1] = k - 1
                out_r0[ro - 1] += nr0
                out_r1[ro - 1] += nr1
                if counts_mode:
                    for q in range(k0s, k0):
                        out_occ[ro - 1, eff0[q]] += 1
                    for q in range(k1s, k1):
                        out_occ[ro - 1, eff1[q]] += 1
            else:
                if ro == cap:
                    return ro, nfix, 1
                out_start[ro] = blk
                out_end[ro] = k - 1
                out_r0[ro] = nr0
                out_r1[ro] = nr1
                if counts_mode:
                    for c in range(sigma):
                        out_occ[ro, c] = 0
                    for q in range(k0s, k0):
                        out_occ[ro, eff0[q]] += 1
                    for q in range(k1s, k1):
                        out_occ[ro, eff1[q]] += 1
                ro += 1
    return ro, nfix, 0


class GapRun:
    """Stepwise driver for the block-skipping merge."""

    def __init__(
        self,
        bwt0: BwtString,
        lcp0: LcpArray,
        bwt1: BwtString,
        lcp1: LcpArray,
        skip_mode: str = "wavelet",
        instrument: bool = False,
    ):
        if skip_mode not in ("counts", "wavelet"):
            raise ValueError(f"unknown skip_mode {skip_mode!r}")
        if lcp0.n != bwt0.n or lcp1.n != bwt1.n:
            raise LengthMismatch("LCP arrays do not match BWT lengths")
        self.bwt0 = bwt0
        self.bwt1 = bwt1
        self.lcp0 = lcp0
        self.lcp1 = lcp1
        self.skip_mode = skip_mode
        self.counts_mode = skip_mode == "counts"
        self.n = bwt0.n + bwt1.n
        self.eff0, self.eff1, self.sigma = pair_codes(bwt0, bwt1)
        base = FTable.from_counts(symbol_counts(self.eff0, self.eff1, self.sigma))
        self._base_f = base.f - 1  # 0-based destinations
        self.lazy = LazyFState(
            f=np.empty_like(self._base_f),
            l0=np.zeros(self.sigma, dtype=np.int64),
            l1=np.zeros(self.sigma, dtype=np.int64),
        )
        self._bid_of = np.full(self.sigma, BID_NONE, dtype=np.int64)
        if self.counts_mode:
            self._wt0_args = wavelet.empty_kernel_args()
            self._wt1_args = wavelet.empty_kernel_args()
            self.wt0 = self.wt1 = None
        else:
            self.wt0 = wavelet.build(self.eff0)
            self.wt1 = wavelet.build(self.eff1)
            self._wt0_args = self.wt0.kernel_args()
            self._wt1_args = self.wt1.kernel_args()
        self._zprev = init_z(bwt0.n, bwt1.n).bits
        self._znext = np.empty_like(self._zprev)
        self.block_array = init_b(bwt0.n, bwt1.n)
        self.unset = self.n + 1 - 2
        occ_width = self.sigma if self.counts_mode else 0
        self._in_start = np.zeros(0, dtype=np.int64)
        self._in_end = np.zeros(0, dtype=np.int64)
        self._in_r0 = np.zeros(0, dtype=np.int64)
        self._in_r1 = np.zeros(0, dtype=np.int64)
        self._in_occ = np.zeros((0, occ_width), dtype=np.int32)
        self._cap_hint = 64
        self._fix_hint = 64
        # destination runs of blocks marked last pass, to replay into the
        # buffer they are missing from
        self._pending_fix: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self._blk_syms = np.zeros(self.sigma, dtype=np.int32)
        self._blk_cnt = np.zeros(self.sigma, dtype=np.int64)
        self.phase = 0
        self.stats = GapStats()
        self.instrument = instrument
        self.traces: list[PhaseTrace] = []
        self._trace_dest = np.empty(self.n if instrument else 0, dtype=np.int64)

    @property
    def z(self) -> np.ndarray:
        """Bit vector after the last completed pass."""
        return self._zprev

    @property
    def b(self) -> np.ndarray:
        return self.block_array.values

    @property
    def covered(self) -> bool:
        """True when irrelevant ranges span every position (no active blocks)."""
        return (
            self._in_start.size == 1
            and self._in_start[0] == 0
            and self._in_end[0] == self.n - 1
        )

    @property
    def block_map(self) -> BlockMap:
        ranges = []
        for i in range(self._in_start.size):
            occ = self._in_occ[i].copy() if self.counts_mode else None
            ranges.append(
                (
                    int(self._in_start[i]),
                    int(self._in_end[i]),
                    IrrelevantRecord(r0=int(self._in_r0[i]), r1=int(self._in_r1[i]), occ=occ),
                )
            )
        return BlockMap(boundaries=self.block_array, irrelevant=ranges)

    def _ranges_list(self) -> list[tuple[int, int]]:
        return [
            (int(s), int(e)) for s, e in zip(self._in_start, self._in_end)
        ]

    def step(self) -> int:
        """Run one pass; returns the number of positions scanned (0 if covered)."""
        if self.covered:
            return 0
        self.phase += 1
        if self._pending_fix is not None:
            # replay last pass's marked destination runs into the buffer
            # about to be written, which missed them
            starts, lens, colors = self._pending_fix
            for s, l, col in zip(starts, lens, colors):
                self._znext[s : s + l] = col
            self._pending_fix = None
        if self.instrument:
            z_in = self._zprev.copy()
            b_in = self.b.copy()
            ranges_in = self._ranges_list()
            self._trace_dest.fill(-1)
        occ_width = self.sigma if self.counts_mode else 0
        counters = np.zeros(N_COUNTERS, dtype=np.int64)
        cap = self._cap_hint
        fcap = self._fix_hint
        overflowed = False
        while True:
            out_start = np.empty(cap, dtype=np.int64)
            out_end = np.empty(cap, dtype=np.int64)
            out_r0 = np.empty(cap, dtype=np.int64)
            out_r1 = np.empty(cap, dtype=np.int64)
            out_occ = np.empty((cap if self.counts_mode else 0, occ_width), dtype=np.int32)
            fix_start = np.empty(fcap, dtype=np.int64)
            fix_len = np.empty(fcap, dtype=np.int64)
            fix_color = np.empty(fcap, dtype=np.uint8)
            np.copyto(self.lazy.f, self._base_f)
            self._bid_of.fill(BID_NONE)
            self.lazy.l0.fill(0)
            self.lazy.l1.fill(0)
            counters.fill(0)
            ro, nfix, status = _gap_pass(
                np.uint32(self.phase),
                self._zprev,
                self._znext,
                self.b,
                self.eff0,
                self.eff1,
                self.lazy.f,
                self._bid_of,
                self.lazy.l0,
                self.lazy.l1,
                self._in_start,
                self._in_end,
                self._in_r0,
                self._in_r1,
                self._in_occ,
                out_start,
                out_end,
                out_r0,
                out_r1,
                out_occ,
                fix_start,
                fix_len,
                fix_color,
                self._blk_syms,
                self._blk_cnt,
                self.counts_mode,
                *self._wt0_args,
                *self._wt1_args,
                self._trace_dest,
                counters,
            )
            if status == 0:
                break
            overflowed = True
            if status == 1:
                cap *= 2
            else:
                fcap *= 2
        if overflowed:
            self.unset = int(np.count_nonzero(self.b == 0))
        else:
            self.unset -= int(counters[C_BWRITES])
        self._zprev, self._znext = self._znext, self._zprev
        self._in_start = out_start[:ro]
        self._in_end = out_end[:ro]
        self._in_r0 = out_r0[:ro]
        self._in_r1 = out_r1[:ro]
        self._in_occ = out_occ[:ro] if self.counts_mode else self._in_occ
        if nfix:
            self._pending_fix = (fix_start[:nfix], fix_len[:nfix], fix_color[:nfix])
        self._cap_hint = max(64, 2 * ro)
        self._fix_hint = max(64, 2 * nfix)
        active = int(counters[C_ACTIVE])
        self.stats.phases = self.phase
        self.stats.active_work.append(active)
        self.stats.blocks_processed += int(counters[C_BLOCKS])
        self.stats.blocks_marked += int(counters[C_MARKED])
        self.stats.ranges_skipped += int(counters[C_SKIPS])
        self.stats.rank_syncs += int(counters[C_SYNCS])
        self.stats.boundary_writes += int(counters[C_BWRITES])
        if self.instrument:
            self.traces.append(
                PhaseTrace(
                    phase=self.phase,
                    z_in=z_in,
                    b_in=b_in,
                    ranges_in=ranges_in,
                    z_out=self._zprev.copy(),
                    b_out=self.b.copy(),
                    ranges_out=self._ranges_list(),
                    dest=self._trace_dest.copy(),
                )
            )
        return active

    def run(self):
        limit = self.n + 1
        while not self.covered:
            if self.phase >= limit:
                raise NonConvergence(
                    f"active blocks remain after {limit} passes; corrupt input BWTs"
                )
            self.step()


def gap_phase(state: GapRun) -> tuple[GapRun, int]:
    """Advance one pass; returns the state and the positions actually scanned."""
    active = state.step()
    return state, active


def skip_irrelevant(rec: IrrelevantRecord, f: np.ndarray, k0: int, k1: int) -> tuple[int, int]:
    """Apply a skip record to the scan cursors; mutates f in counts mode."""
    if rec.r0 + rec.r1 < 1:
        raise ValueError("empty irrelevant range")
    if rec.occ is not None:
        occ = rec.occ.reshape(1, -1).astype(np.int32)
        nk0, nk1 = _skip_irrelevant(f, occ, 0, rec.r0, rec.r1, k0, k1, True)
    else:
        occ = np.zeros((0, 0), dtype=np.int32)
        nk0, nk1 = _skip_irrelevant(f, occ, 0, rec.r0, rec.r1, k0, k1, False)
    return int(nk0), int(nk1)


def lazy_f_lookup(
    c: int,
    state: LazyFState,
    k0: int,
    k1: int,
    wt0: WaveletTree,
    wt1: WaveletTree,
) -> int:
    """Repair f[c] against read positions (k0, k1); returns the next destination."""
    return int(
        _lazy_sync(
            c,
            k0,
            k1,
            state.f,
            state.l0,
            state.l1,
            *wt0.kernel_args(),
            *wt1.kernel_args(),
        )
    )


def finalize(state: GapRun) -> tuple[BwtString, LcpArray, MergeBitVector]:
    """Assemble the merged BWT, LCP and interleaving once no active blocks remain.

    Positions with a recorded boundary take value boundary-1; positions
    inside monochrome ranges are between two entries of the same input, so
    their LCP is read straight out of that input's LCP array.
    """
    if not state.covered:
        raise NotConverged("active blocks remain")
    n = state.n
    z = state.z
    merged = apply_merge(MergeBitVector(bits=z), state.bwt0, state.bwt1)
    values = np.empty(n + 1, dtype=np.int32)
    values[0] = -1
    values[n] = -1
    interior_b = state.b[1:n]
    resolved = interior_b != 0
    values[1:n][resolved] = interior_b[resolved].astype(np.int32) - 1
    unresolved = np.flatnonzero(~resolved) + 1  # positions in [1, n)
    if unresolved.size:
        if not np.array_equal(z[unresolved], z[unresolved - 1]):
            raise NotConverged("gap interior straddles both inputs")
        zero_rank = np.cumsum(z == 0)  # 1-based rank of the entry at each position
        side = z[unresolved]
        pos0 = unresolved[side == 0]
        pos1 = unresolved[side == 1]
        values[pos0] = state.lcp0.values[zero_rank[pos0] - 1]
        one_rank = unresolved + 1 - zero_rank[unresolved]
        values[pos1] = state.lcp1.values[one_rank[side == 1] - 1]
    return merged, LcpArray(values=values), MergeBitVector(bits=z)


def gap_merge(
    bwt0: BwtString,
    lcp0: LcpArray,
    bwt1: BwtString,
    lcp1: LcpArray,
    skip_mode: str = "wavelet",
) -> tuple[BwtString, LcpArray, MergeBitVector, GapStats]:
    """Merge two BWT+LCP pairs with block skipping; also returns work stats."""
    run = GapRun(bwt0, lcp0, bwt1, lcp1, skip_mode=skip_mode)
    run.run()
    # release scan-only structures before building the outputs
    run.eff0 = run.eff1 = None
    run.wt0 = run.wt1 = None
    run._wt0_args = run._wt1_args = None
    merged, lcp, z = finalize(run)
    return merged, lcp, z, run.stats
