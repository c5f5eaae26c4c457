"""BWT and LCP construction and lightweight merging for string collections.

The package builds single-string Burrows-Wheeler transforms and LCP arrays,
merges two BWT+LCP pairs into the multi-string BWT and LCP of the pair, and
drives whole-collection merges in mergesort-style rounds.  Three merge
engines are provided: the plain interleaving pass (``hm_merge``), the
block-tracking variant that also emits LCP values (``hm_lcp``), and the
block-skipping engine (``gap_merge``) that avoids rescanning resolved
regions.
"""

from gapmerge.textcore import (
    BwtString,
    LcpArray,
    SuffixArray,
    Text,
    build_suffix_array,
    bwt_from_sa,
    invert_bwt,
    lcp_from_sa,
    oracle_merge,
    remap_alphabet,
)
from gapmerge.hm_merge import apply_merge, hm_merge
from gapmerge.hm_lcp import hmlcp_merge
from gapmerge.gap_merge import gap_merge

__all__ = [
    "BwtString",
    "LcpArray",
    "SuffixArray",
    "Text",
    "apply_merge",
    "build_suffix_array",
    "bwt_from_sa",
    "gap_merge",
    "hm_merge",
    "hmlcp_merge",
    "invert_bwt",
    "lcp_from_sa",
    "oracle_merge",
    "remap_alphabet",
]
