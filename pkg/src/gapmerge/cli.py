"""Command-line front end.

Subcommands: build | merge | merge-collection | verify | bench.  Diagnostics
go to stderr; tables and stats go to stdout.  Exit codes: 0 success,
1 usage, 2 input format problem, 3 verification failure or non-convergence.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gapmerge import files
from gapmerge.files import FormatError, read_bwt, read_lcp, write_bwt, write_lcp
from gapmerge.gap_merge import gap_merge
from gapmerge.hm_lcp import hmlcp_merge, HmLcpRun
from gapmerge.hm_merge import NonConvergence, hm_merge_stats
from gapmerge.textcore import (
    BwtString,
    LcpArray,
    ReservedByte,
    build_bwt_lcp,
    oracle_merge,
    remap_alphabet,
)

ALGOS = ("hm", "hm-lcp", "gap")
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FORMAT = 2
EXIT_VERIFY = 3

MASK64 = (1 << 64) - 1


class SplitMix64:
    """64-bit splitmix stream; fixed constants so runs are reproducible."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def payload(self, length: int, sigma: int) -> bytes:
        """Random payload over sigma symbols (byte values 2 .. sigma+1)."""
        out = bytearray(length)
        for i in range(length):
            out[i] = 2 + self.next() % sigma
        return bytes(out)


@dataclass
class CollectionJob:
    """A whole-collection merge: pair up adjacent items round by round."""

    inputs: list[bytes]
    algorithm: str = "gap"
    skip_mode: str = "wavelet"
    rounds: list[int] = field(default_factory=list)  # live item counts per round

    def run(self) -> tuple[BwtString, LcpArray | None]:
        texts = [remap_alphabet(raw, 0) for raw in self.inputs]
        if self.algorithm == "hm":
            items = [(build_bwt_lcp(t)[0], None) for t in texts]
        else:
            items = [build_bwt_lcp(t) for t in texts]
        while len(items) > 1:
            self.rounds.append(len(items))
            merged_items = []
            for i in range(0, len(items) - 1, 2):
                merged_items.append(self._merge_pair(items[i], items[i + 1]))
            if len(items) % 2:
                merged_items.append(items[-1])
            items = merged_items
        return items[0]

    def _merge_pair(self, left, right):
        bwt0, lcp0 = left
        bwt1, lcp1 = right
        if self.algorithm == "hm":
            _, merged, _ = hm_merge_stats(bwt0, bwt1)
            return merged, None
        if self.algorithm == "hm-lcp":
            merged, lcp, _ = hmlcp_merge(bwt0, lcp0, bwt1, lcp1)
            return merged, lcp
        merged, lcp, _, _ = gap_merge(bwt0, lcp0, bwt1, lcp1, skip_mode=self.skip_mode)
        return merged, lcp


def merge_collection(
    payloads: list[bytes], algorithm: str = "gap", skip_mode: str = "wavelet"
) -> tuple[BwtString, LcpArray | None]:
    """Merge a whole collection in mergesort-style rounds, all in memory."""
    return CollectionJob(inputs=payloads, algorithm=algorithm, skip_mode=skip_mode).run()


def _read_payload(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror or exc}") from exc


def cmd_build(args) -> int:
    raw = _read_payload(args.text)
    text = remap_alphabet(raw, 0)
    bwt, lcp = build_bwt_lcp(text)
    write_bwt(args.out_prefix + ".bwt", bwt)
    write_lcp(args.out_prefix + ".lcp", lcp)
    print(f"built {args.out_prefix}.bwt and .lcp (n={text.n})")
    return EXIT_OK


def _run_merge(algo, skip, bwt0, lcp0, bwt1, lcp1):
    """Run one pairwise merge; returns (bwt, lcp|None, phases, scanned)."""
    n = bwt0.n + bwt1.n
    if algo == "hm":
        _, merged, phases = hm_merge_stats(bwt0, bwt1)
        return merged, None, phases, phases * n
    if algo == "hm-lcp":
        run = HmLcpRun(bwt0, bwt1)
        run.run()
        merged, lcp, _ = run.result()
        return merged, lcp, run.phase, run.phase * n
    merged, lcp, _, stats = gap_merge(bwt0, lcp0, bwt1, lcp1, skip_mode=skip)
    return merged, lcp, stats.phases, stats.total_active_work


def cmd_merge(args) -> int:
    bwt0 = read_bwt(args.a_prefix + ".bwt")
    bwt1 = read_bwt(args.b_prefix + ".bwt")
    lcp0 = lcp1 = None
    if args.algo != "hm":
        lcp0 = read_lcp(args.a_prefix + ".lcp")
        lcp1 = read_lcp(args.b_prefix + ".lcp")
    merged, lcp, phases, scanned = _run_merge(args.algo, args.skip, bwt0, lcp0, bwt1, lcp1)
    write_bwt(args.out_prefix + ".bwt", merged)
    if lcp is not None:
        write_lcp(args.out_prefix + ".lcp", lcp)
    print(f"algo={args.algo} n={merged.n} phases={phases} active_work={scanned}")
    return EXIT_OK


def cmd_merge_collection(args) -> int:
    list_path = Path(args.list_file)
    try:
        lines = [ln.strip() for ln in list_path.read_text().splitlines()]
    except OSError as exc:
        raise FormatError(f"{args.list_file}: {exc.strerror or exc}") from exc
    paths = [ln for ln in lines if ln]
    if len(paths) < 2:
        print("error: merge-collection needs at least two input files", file=sys.stderr)
        return EXIT_USAGE
    payloads = [_read_payload(p) for p in paths]
    job = CollectionJob(inputs=payloads, algorithm=args.algo, skip_mode=args.skip)
    merged, lcp = job.run()
    write_bwt(args.out_prefix + ".bwt", merged)
    if lcp is not None:
        write_lcp(args.out_prefix + ".lcp", lcp)
    rounds = " ".join(str(r) for r in job.rounds)
    print(f"algo={args.algo} strings={len(paths)} n={merged.n} rounds=[{rounds}]")
    return EXIT_OK


def cmd_verify(args) -> int:
    t0 = remap_alphabet(_read_payload(args.text0), 0)
    t1 = remap_alphabet(_read_payload(args.text1), 1)
    want_bwt, want_lcp, _ = oracle_merge(t0, t1)
    want_bytes = files.externalize_bwt(want_bwt)
    got_bwt = read_bwt(args.merged_prefix + ".bwt")
    got_bytes = files.externalize_bwt(got_bwt)
    if got_bytes != want_bytes:
        idx = next(
            (i for i, (a, b) in enumerate(zip(got_bytes, want_bytes)) if a != b),
            min(len(got_bytes), len(want_bytes)),
        )
        print(f"bwt mismatch at index {idx}", file=sys.stderr)
        return EXIT_VERIFY
    lcp_path = Path(args.merged_prefix + ".lcp")
    if lcp_path.exists():
        got_lcp = read_lcp(lcp_path)
        if not np.array_equal(got_lcp.values, want_lcp.values):
            idx = int(np.flatnonzero(got_lcp.values != want_lcp.values)[0])
            print(f"lcp mismatch at index {idx}", file=sys.stderr)
            return EXIT_VERIFY
    print("verify: ok")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.length < 1 or args.sigma < 1 or args.sigma > 254 or args.pairs < 0:
        print("error: --len and --sigma must be positive (sigma <= 254), --pairs >= 0",
              file=sys.stderr)
        return EXIT_USAGE
    algos = [a.strip() for a in args.algo_set.split(",") if a.strip()]
    for a in algos:
        if a not in ALGOS:
            print(f"error: unknown algorithm {a!r}", file=sys.stderr)
            return EXIT_USAGE
    rng = SplitMix64(args.seed)
    cols = ["pair", "n", "maxlcp", "avelcp"]
    for a in algos:
        cols += [f"{a}_phases", f"{a}_work"]
    print(" ".join(cols))
    for pair in range(args.pairs):
        t0 = remap_alphabet(rng.payload(args.length, args.sigma), 0)
        t1 = remap_alphabet(rng.payload(args.length, args.sigma), 1)
        bwt0, lcp0 = build_bwt_lcp(t0)
        bwt1, lcp1 = build_bwt_lcp(t1)
        n = t0.n + t1.n
        row = None
        cells = []
        for a in algos:
            _, lcp, phases, scanned = _run_merge(a, args.skip, bwt0, lcp0, bwt1, lcp1)
            if lcp is not None:
                row = lcp
            cells += [str(phases), str(scanned)]
        if row is None:
            _, row, _ = oracle_merge(t0, t1)
        interior = row.values[1:-1]
        maxlcp = int(interior.max()) if interior.size else 0
        avelcp = float(interior.sum()) / n
        print(" ".join([str(pair), str(n), str(maxlcp), f"{avelcp:.4f}"] + cells))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; usage errors are exit 1 here
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    p = _Parser(prog="gapmerge", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build .bwt and .lcp from a raw text file")
    b.add_argument("text")
    b.add_argument("out_prefix")
    b.set_defaults(func=cmd_build)

    m = sub.add_parser("merge", help="merge two prefix pairs into one")
    m.add_argument("a_prefix")
    m.add_argument("b_prefix")
    m.add_argument("out_prefix")
    m.add_argument("--algo", choices=ALGOS, default="gap")
    m.add_argument("--skip", choices=("counts", "wavelet"), default="wavelet")
    m.set_defaults(func=cmd_merge)

    c = sub.add_parser("merge-collection", help="merge many texts in mergesort rounds")
    c.add_argument("list_file")
    c.add_argument("out_prefix")
    c.add_argument("--algo", choices=ALGOS, default="gap")
    c.add_argument("--skip", choices=("counts", "wavelet"), default="wavelet")
    c.set_defaults(func=cmd_merge_collection)

    v = sub.add_parser("verify", help="check merged files against the direct oracle")
    v.add_argument("text0")
    v.add_argument("text1")
    v.add_argument("merged_prefix")
    v.set_defaults(func=cmd_verify)

    be = sub.add_parser("bench", help="random-pair benchmark of the merge engines")
    be.add_argument("--len", dest="length", type=int, default=1000)
    be.add_argument("--sigma", type=int, default=4)
    be.add_argument("--pairs", type=int, default=5)
    be.add_argument("--seed", type=int, default=1)
    be.add_argument("--algo-set", dest="algo_set", default="hm-lcp,gap")
    be.add_argument("--skip", choices=("counts", "wavelet"), default="wavelet")
    be.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (FormatError, ReservedByte) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
