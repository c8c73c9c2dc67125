"""
Merge Step
Combine M^ℓ of y1#...#y(N-1) with M^ℓ of a new block y_N.

Case 1 words already belong to one of the two input sets and survive exactly when
they contain a word of the other set. Case 2 words are new MAWs of some y_i#y_N
that start with a surviving new-side word and end with a surviving previous-side
word (or the converse), with |u| >= max(|r1|, |r2|) - 1.
"""

import time
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Set, Tuple

import structlog
from langsmith import traceable

from tracing.langsmith_monitor import summarize_stage_payload

from .errors import InvariantViolation
from .maw_single import SingleMawOutput, compute_maws, enumerate_maw_contexts
from .queries import WeightedAncestorQuery, batch_weighted_ancestors, follow_suffix_link, matching_statistics
from .suffix_tree import (
    ROOT,
    Locus,
    NodeAggregates,
    SuffixTree,
    build,
    build_generalized,
    compute_aggregates,
    locate_prefix_free_patterns,
    spell,
)
from .text_model import Alphabet, Block, MawSet, MawTupleRef, MawWord, materialize

logger = structlog.get_logger()


class PairMaw(NamedTuple):
    """a·x[i1..i2]·b; the middle part is empty when i2 == i1 - 1"""

    a: int
    i1: int
    i2: int
    b: int

    def word(self, x: bytes) -> MawWord:
        return bytes((self.a,)) + x[self.i1:self.i2 + 1] + bytes((self.b,))


class Case2Word(NamedTuple):
    word: MawWord
    ref: MawTupleRef


@dataclass(frozen=True)
class NewMarks:
    tuples: FrozenSet[MawTupleRef]
    letters: FrozenSet[int]


@dataclass(frozen=True)
class ReducedSets:
    r_prev: MawSet
    r_new: Tuple[MawTupleRef, ...]
    r_new_letters: FrozenSet[int] = frozenset()

    def new_words(self, block: Block) -> List[MawWord]:
        words = [materialize(t, block) for t in self.r_new]
        words.extend(bytes((c,)) for c in self.r_new_letters)
        return words

    @property
    def empty(self) -> bool:
        return not self.r_prev or not (self.r_new or self.r_new_letters)


@dataclass(frozen=True)
class Case1Result:
    kept: MawSet
    reduced: ReducedSets


@dataclass(frozen=True)
class OccurrenceIndex:
    """Occurrences of a prefix-free, suffix-free word set: start -> length, end -> length"""

    starts: Dict[int, int] = field(default_factory=dict)
    ends: Dict[int, int] = field(default_factory=dict)

    @classmethod
    def from_occurrences(cls, words: Sequence[bytes], occurrences: Sequence[List[int]],
                         shift: int = 0, below: Optional[int] = None) -> "OccurrenceIndex":
        starts: Dict[int, int] = {}
        ends: Dict[int, int] = {}
        for word, positions in zip(words, occurrences):
            n = len(word)
            for p in positions:
                if below is not None and p >= below:
                    continue
                starts[p + shift] = n
                ends[p + shift + n - 1] = n
        return cls(starts, ends)


@dataclass(frozen=True)
class MergeOutcome:
    merged: MawSet
    case1: Case1Result
    case2: FrozenSet[MawWord]
    new_output: SingleMawOutput
    # constant-space form of every merged word; None for letters
    refs: Dict[MawWord, Optional[MawTupleRef]] = field(default_factory=dict)


def sort_tuples(tuples: Iterable[MawTupleRef]) -> List[MawTupleRef]:
    return sorted(tuples, key=lambda t: (t.i1, t.i2))


def mark_prev_superwords(prev_set: MawSet, new_block: Block,
                         new_output: SingleMawOutput) -> FrozenSet[MawWord]:
    """Elements of prev_set having some word of M^ℓ(new_block) as a factor"""
    if not prev_set:
        return frozenset()

    prev_words = sorted(prev_set.words)
    tree = build_generalized([*prev_words, new_block.data])
    block_offset = tree.offsets[-1]

    queries = [WeightedAncestorQuery(tree.leaf_at[block_offset + t.i1], t.i2 - t.i1 + 1)
               for t in new_output.tuples]
    marked_nodes: Set[int] = set()
    for t, locus in zip(new_output.tuples, batch_weighted_ancestors(tree, queries)):
        hit = spell(tree, locus, t.alpha)
        if hit is not None:
            marked_nodes.add(hit.node)
    for c in new_output.absent_letters:
        hit = spell(tree, Locus(ROOT, 0), c)
        if hit is not None:
            marked_nodes.add(hit.node)

    marked: Set[MawWord] = set()
    for node in marked_nodes:
        for pos in tree.subtree_leaves(node):
            t, _ = tree.terminal_label(tree.leaf_at[pos])
            if t < len(prev_words):
                marked.add(prev_words[t])

    logger.debug("Previous-set superwords marked", block_id=new_block.id,
                 prev_size=len(prev_set), marked=len(marked))
    return frozenset(marked)


def _word_end_depths(tree: SuffixTree, words: Sequence[bytes]) -> List[int]:
    # end_depth[v] = length of the word ending on the root path of v, 0 if none;
    # antifactoriality leaves at most one such word per path
    loci = batch_weighted_ancestors(
        tree, [WeightedAncestorQuery(tree.leaf_at[tree.offsets[t]], len(w)) for t, w in enumerate(words)])
    end_depth = [0] * tree.node_count
    for locus in loci:
        end_depth[locus.node] = locus.depth
    parent = tree.parent
    for v in tree.order:
        if v != ROOT and not end_depth[v]:
            end_depth[v] = end_depth[parent[v]]
    return end_depth


def mark_new_superwords(prev_set: MawSet, new_block: Block, new_tuples: Sequence[MawTupleRef],
                        new_letters: Iterable[int] = ()) -> NewMarks:
    """
    Tuples (and absent letters) of M^ℓ(new_block) having a prev_set element as a factor

    Args:
        new_tuples: tuples into new_block, sorted by (i1, i2)
    """
    if not prev_set:
        return NewMarks(frozenset(), frozenset())

    letters_marked = frozenset(c for c in new_letters if bytes((c,)) in prev_set)
    prev_words = sorted(prev_set.words)
    tree = build_generalized(prev_words)
    end_depth = _word_end_depths(tree, prev_words)

    y = new_block.data
    n = len(y)
    ms = matching_statistics(y, tree)
    f, ms_nodes = ms.lengths, ms.nodes

    # earliest end of a prev element starting at j or later
    inf = n + 1
    suffix_min = [inf] * (n + 1)
    for j in range(n - 1, -1, -1):
        e = end_depth[ms_nodes[j]]
        end = j + e - 1 if 0 < e <= f[j] else inf
        suffix_min[j] = min(end, suffix_min[j + 1])
    reach = [j + f[j] for j in range(n)]

    marked: Set[MawTupleRef] = set()
    pending: List[Tuple[MawTupleRef, int]] = []
    for t in new_tuples:
        if suffix_min[t.i1] <= t.i2:
            marked.add(t)
        else:
            # longest suffix y[j..i2] of the au part that occurs in the prev words
            pending.append((t, max(bisect_right(reach, t.i2), t.i1)))

    queries = [WeightedAncestorQuery(ms_nodes[j], t.i2 - j + 1) for t, j in pending if j <= t.i2]
    answers = iter(batch_weighted_ancestors(tree, queries))
    for t, j in pending:
        locus = next(answers) if j <= t.i2 else Locus(ROOT, 0)
        while True:
            hit = spell(tree, locus, t.alpha)
            if hit is not None:
                if end_depth[hit.node] == hit.depth:
                    marked.add(t)
                break
            if locus.depth == 0:
                break
            locus = follow_suffix_link(tree, locus, y, j)
            j += 1

    logger.debug("New-block superwords marked", block_id=new_block.id,
                 tuples=len(new_tuples), marked=len(marked), letters=len(letters_marked))
    return NewMarks(frozenset(marked), letters_marked)


def build_case1(prev_set: MawSet, new_block: Block, new_output: SingleMawOutput,
                prev_marks: FrozenSet[MawWord], new_marks: NewMarks,
                seen_before: FrozenSet[int], alphabet: Alphabet) -> Case1Result:
    """
    Kept words and reduced sets

    Letters follow the seen-letter bookkeeping: a letter stays a MAW iff it occurs
    neither in y1..y(N-1) nor in y_N.
    """
    present_new = alphabet.letter_set - new_output.absent_letters
    absent_prev = alphabet.letter_set - seen_before

    kept = [w for w in prev_set if len(w) > 1 and w in prev_marks]
    kept.extend(materialize(t, new_block) for t in new_output.tuples if t in new_marks.tuples)
    kept.extend(bytes((c,)) for c in absent_prev - present_new)

    r_prev = [w for w in prev_set if len(w) > 1 and w not in prev_marks]
    r_prev.extend(bytes((c,)) for c in absent_prev & present_new)
    r_new = tuple(t for t in new_output.tuples if t not in new_marks.tuples)
    r_new_letters = frozenset(new_output.absent_letters & seen_before)

    return Case1Result(
        kept=MawSet.from_words(kept),
        reduced=ReducedSets(MawSet.from_words(r_prev), r_new, r_new_letters),
    )


def compute_pair_maws(x: bytes, ell: int, alphabet: Alphabet,
                      tree: Optional[SuffixTree] = None) -> List[PairMaw]:
    """MAWs of x = y_i # y_N of length 2..ℓ over the alphabet"""
    if ell < 2:
        return []
    tree = tree or build(x)
    return [PairMaw(a, s, s + d - 1, b) for a, s, d, b in enumerate_maw_contexts(tree, alphabet, ell)]


def classify_and_filter_case2(x: bytes, separator_at: int, pair_maws: Sequence[PairMaw],
                              r_new_in_yi: OccurrenceIndex, r_prev_in_yn: OccurrenceIndex,
                              tree: SuffixTree, aggregates: NodeAggregates, ell: int,
                              block_ids: Tuple[int, int] = (1, 2)) -> List[Case2Word]:
    """
    Keep pair MAWs aub where au starts like a reduced word of one side and ub
    ends like a reduced word of the other side

    Occurrence indexes are in x coordinates; y_i is x[:separator_at]. Each accepted
    word comes with a tuple into the block holding its au occurrence, where
    block_ids names (y_i, y_N).
    """
    if not pair_maws:
        return []

    queries: List[WeightedAncestorQuery] = []
    for p in pair_maws:
        queries.append(WeightedAncestorQuery(tree.leaf_at[p.i1 - 1], p.i2 - p.i1 + 2))
        if p.i2 >= p.i1:
            queries.append(WeightedAncestorQuery(tree.leaf_at[p.i1], p.i2 - p.i1 + 1))
    answers = iter(batch_weighted_ancestors(tree, queries))

    min_start, max_start = aggregates.min_start, aggregates.max_start
    earlier_id, new_id = block_ids
    accepted: List[Case2Word] = []
    for p in pair_maws:
        au = next(answers)
        u = next(answers) if p.i2 >= p.i1 else Locus(ROOT, 0)
        ub = spell(tree, u, p.b)
        if ub is None:
            raise InvariantViolation(f"pair MAW suffix is not a factor at {p}")
        u_len = p.i2 - p.i1 + 1
        aub_len = u_len + 2

        # au in y_i, ub in y_N
        g = min_start[au.node]
        h = max_start[ub.node]
        if g < separator_at < h:
            r1 = r_new_in_yi.starts.get(g)
            r2 = r_prev_in_yn.ends.get(h + aub_len - 2)
            if r1 and r2 and u_len >= max(r1, r2) - 1:
                accepted.append(Case2Word(p.word(x), MawTupleRef(earlier_id, g, g + u_len, p.b)))
                continue

        # au in y_N, ub in y_i
        g = max_start[au.node]
        h = min_start[ub.node]
        if h < separator_at < g:
            r1 = r_prev_in_yn.starts.get(g)
            r2 = r_new_in_yi.ends.get(h + aub_len - 2)
            if r1 and r2 and u_len >= max(r1, r2) - 1:
                start = g - separator_at - 1
                accepted.append(Case2Word(p.word(x), MawTupleRef(new_id, start, start + u_len, p.b)))

    for w, _ in accepted:
        if len(w) > ell:
            raise InvariantViolation(f"case-2 word longer than ell: {w!r}")
    return accepted


@traceable(
    name="merge_step",
    tags=["maw", "merge"],
    metadata={"component": "merge"},
    process_inputs=summarize_stage_payload,
    process_outputs=summarize_stage_payload,
)
def merge_step_detailed(prev_set: MawSet, new_block: Block, earlier_blocks, ell: int,
                        seen_letters: FrozenSet[int], alphabet: Alphabet,
                        monitor=None, check_patterns: bool = False,
                        prev_refs: Optional[Mapping[MawWord, Optional[MawTupleRef]]] = None) -> MergeOutcome:
    """
    M^ℓ(y1#...#y_N) from M^ℓ(y1#...#y(N-1)) and y_N

    Args:
        earlier_blocks: accessor with read(i) for i in 1..N-1, read one at a time
        seen_letters: letters occurring in y1..y(N-1)
        monitor: optional SpaceMonitor sampled between stages
        prev_refs: tuple form of prev_set's words, carried into MergeOutcome.refs
    """
    started = time.perf_counter()
    n_new = len(new_block.data)

    new_tree = build(new_block.data)
    new_output = compute_maws(new_block, ell, alphabet, tree=new_tree)
    if monitor is not None:
        monitor.sample("single_block", block_bytes=n_new, tree_nodes=new_tree.node_count,
                       set_elements=prev_set.total_length + len(new_output))

    prev_marks = mark_prev_superwords(prev_set, new_block, new_output)
    new_marks = mark_new_superwords(prev_set, new_block, sort_tuples(new_output.tuples),
                                    new_output.absent_letters)
    case1 = build_case1(prev_set, new_block, new_output, prev_marks, new_marks,
                        frozenset(seen_letters), alphabet)
    reduced = case1.reduced
    if monitor is not None:
        monitor.sample("case1", block_bytes=n_new,
                       tree_nodes=new_tree.node_count + prev_set.total_length + n_new,
                       set_elements=prev_set.total_length + len(new_output) + case1.kept.total_length)

    case2: Dict[MawWord, MawTupleRef] = {}
    if reduced.empty or ell < 2:
        logger.debug("No case-2 candidates", block_id=new_block.id, ell=ell)
    else:
        r_prev_words = sorted(reduced.r_prev.words)
        r_prev_occ = locate_prefix_free_patterns(new_tree, r_prev_words, check=check_patterns)
        r_new_words = sorted(reduced.new_words(new_block))
        del new_tree

        for i in range(1, new_block.id):
            earlier = earlier_blocks.read(i)
            sep = len(earlier.data)
            x = earlier.data + bytes((alphabet.separator,)) + new_block.data
            pair_tree = build(x)
            aggregates = compute_aggregates(pair_tree)

            r_new_occ = locate_prefix_free_patterns(pair_tree, r_new_words, check=check_patterns)
            r_new_in_yi = OccurrenceIndex.from_occurrences(r_new_words, r_new_occ, below=sep)
            r_prev_in_yn = OccurrenceIndex.from_occurrences(r_prev_words, r_prev_occ, shift=sep + 1)

            pair_maws = compute_pair_maws(x, ell, alphabet, tree=pair_tree)
            found = classify_and_filter_case2(x, sep, pair_maws, r_new_in_yi, r_prev_in_yn,
                                              pair_tree, aggregates, ell, (i, new_block.id))
            case2.update(found)

            if monitor is not None:
                monitor.sample("case2", block_bytes=len(x),
                               tree_nodes=pair_tree.node_count,
                               set_elements=(prev_set.total_length + len(new_output)
                                             + case1.kept.total_length + len(pair_maws)
                                             + sum(map(len, case2))))
            logger.debug("Case-2 pair processed", block_id=new_block.id, earlier_block=i,
                         pair_maws=len(pair_maws), accepted=len(found))
            del pair_tree, aggregates, earlier, x

    overlap = case2.keys() & case1.kept.words
    if overlap:
        raise InvariantViolation(f"case-1 and case-2 outputs overlap: {sorted(overlap)[:3]}")

    merged = case1.kept.union(case2)
    logger.info("Merge step completed", block_id=new_block.id, ell=ell,
                kept=len(case1.kept), case2=len(case2), merged=len(merged),
                duration_ms=round((time.perf_counter() - started) * 1000, 2))
    prev_refs = prev_refs or {}
    refs: Dict[MawWord, Optional[MawTupleRef]] = {w: prev_refs.get(w) for w in case1.kept if len(w) > 1}
    refs.update((bytes((c,)), None) for c in case1.kept.letters())
    refs.update((materialize(t, new_block), t) for t in new_output.tuples if t in new_marks.tuples)
    refs.update(case2)
    return MergeOutcome(merged, case1, frozenset(case2), new_output, refs)


def merge_step(prev_set: MawSet, new_block: Block, earlier_blocks, ell: int,
               seen_letters: FrozenSet[int], alphabet: Alphabet, monitor=None,
               check_patterns: bool = False) -> MawSet:
    return merge_step_detailed(prev_set, new_block, earlier_blocks, ell, seen_letters,
                               alphabet, monitor, check_patterns).merged
