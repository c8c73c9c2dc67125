"""
Single-Block MAWs
Minimal absent words of length <= ℓ of one indexed text, read off its suffix tree
"""

from bisect import bisect_left
from dataclasses import dataclass
from itertools import accumulate
from typing import FrozenSet, Iterator, List, Optional, Tuple

import structlog
from langsmith import traceable

from tracing.langsmith_monitor import summarize_stage_payload

from .errors import ConfigError
from .suffix_tree import ROOT, SuffixTree, build
from .text_model import Alphabet, Block, MawSet, MawTupleRef, materialize

logger = structlog.get_logger()


@dataclass(frozen=True)
class SingleMawOutput:
    """M^ℓ of one block: length >= 2 words as tuples, length 1 as absent letters"""

    block_id: int
    tuples: Tuple[MawTupleRef, ...]
    absent_letters: FrozenSet[int]

    def __len__(self) -> int:
        return len(self.tuples) + len(self.absent_letters)

    def materialize(self, block: Block) -> MawSet:
        words = [materialize(t, block) for t in self.tuples]
        words.extend(bytes((c,)) for c in self.absent_letters)
        return MawSet.from_words(words)


def absent_letters(block: Block, alphabet: Alphabet) -> FrozenSet[int]:
    return alphabet.letter_set - frozenset(block.data)


def enumerate_maw_contexts(tree: SuffixTree, alphabet: Alphabet,
                           ell: int) -> Iterator[Tuple[int, int, int, int]]:
    """
    Yield (a, s, d, b) for every MAW a·text[s:s+d]·b with 2 <= d+2 <= ℓ

    For a branching node u, a letter a preceding some occurrence of u and a child
    edge b of u, aub is absent exactly when no occurrence in the b-subtree is
    preceded by a. Each MAW has a unique u, so nothing is emitted twice. s is the
    start of one occurrence of u preceded by a. Labels containing a non-letter
    symbol (a separator) are skipped.
    """
    if ell < 2:
        return

    text = tree.text
    depth, children, suffix_of = tree.depth, tree.children, tree.suffix_of
    order, pre, parent = tree.order, tree.pre, tree.parent
    rank = alphabet.rank_table
    letters = alphabet.letters

    # left-context letter masks, plus preorder positions of leaves by left letter
    mask = [0] * tree.node_count
    by_letter: List[List[int]] = [[] for _ in range(alphabet.sigma)]
    for k, v in enumerate(order):
        s = suffix_of[v]
        if s > 0:
            left = text[s - 1]
            if left < 256 and rank[left] >= 0:
                mask[v] = 1 << rank[left]
                by_letter[rank[left]].append(k)
    for v in reversed(order):
        if v != ROOT:
            mask[parent[v]] |= mask[v]

    dirty = None
    if any(sym >= 256 or rank[sym] < 0 for sym in text[:-1]):
        dirty = [0, *accumulate(1 if (sym >= 256 or rank[sym] < 0) else 0 for sym in text)]

    def witness(r: int, v: int) -> int:
        leaves = by_letter[r]
        return suffix_of[order[leaves[bisect_left(leaves, pre[v])]]]

    limit = ell - 2
    for v in order:
        d = depth[v]
        if d > limit or suffix_of[v] >= 0:
            continue
        lc = mask[v]
        if not lc:
            continue
        if dirty is not None and d:
            s = witness((lc & -lc).bit_length() - 1, v)
            if dirty[s + d] - dirty[s]:
                continue

        for b, child in children[v].items():
            if b >= 256 or rank[b] < 0:
                continue
            missing = lc & ~mask[child]
            while missing:
                low = missing & -missing
                missing ^= low
                r = low.bit_length() - 1
                yield letters[r], witness(r, v), d, b


@traceable(
    name="single_block_maws",
    tags=["maw", "single_block"],
    metadata={"component": "maw_single"},
    process_inputs=summarize_stage_payload,
    process_outputs=summarize_stage_payload,
)
def compute_maws(block: Block, ell: int, alphabet: Alphabet,
                 tree: Optional[SuffixTree] = None) -> SingleMawOutput:
    """
    M^ℓ of one block in constant-space form

    Args:
        tree: suffix tree of block.data, built here when not supplied
    """
    if ell < 1:
        raise ConfigError("ell must be >= 1")

    tuples: List[MawTupleRef] = []
    if ell >= 2:
        tree = tree or build(block.data)
        for a, s, d, b in enumerate_maw_contexts(tree, alphabet, ell):
            tuples.append(MawTupleRef(block.id, s - 1, s - 1 + d, b))

    output = SingleMawOutput(block.id, tuple(tuples), absent_letters(block, alphabet))
    logger.debug("Block MAWs computed", block_id=block.id, length=len(block.data),
                 ell=ell, tuples=len(output.tuples), absent_letters=len(output.absent_letters))
    return output
