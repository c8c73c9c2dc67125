"""
Tree Queries
Matching statistics and off-line weighted ancestor queries over a SuffixTree
"""

from bisect import bisect_left
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import structlog

from .errors import IndexOutOfRange, InvariantViolation, WeightOutOfRange
from .suffix_tree import ROOT, Locus, NodeAggregates, SuffixTree, compute_aggregates, spell

logger = structlog.get_logger()


class WeightedAncestorQuery(NamedTuple):
    node: int
    weight: int


@dataclass(frozen=True)
class MatchingStatistics:
    """
    lengths[i]: longest prefix of x[i..] that occurs in the indexed text
    positions[i]: a starting position of that occurrence
    nodes[i]: explicit node at or below the match locus
    """

    lengths: List[int]
    positions: List[int]
    nodes: List[int]

    @property
    def entries(self) -> List[Tuple[int, int]]:
        return list(zip(self.lengths, self.positions))

    def locus(self, i: int) -> Locus:
        return Locus(self.nodes[i], self.lengths[i])


def _descend(tree: SuffixTree, node: int, node_depth: int, target: int,
             chars: Sequence[int], offset: int) -> Locus:
    # skip/count: chars[offset:offset+target] is known to spell a path from the root
    depth, children = tree.depth, tree.children
    while node_depth < target:
        child = children[node][chars[offset + node_depth]]
        child_depth = depth[child]
        if child_depth > target:
            return Locus(child, target)
        node, node_depth = child, child_depth
    return Locus(node, node_depth)


def follow_suffix_link(tree: SuffixTree, locus: Locus, chars: Sequence[int], start: int) -> Locus:
    """
    Locus of L(locus) without its first letter

    chars[start:start+locus.depth] must be the label of the locus.
    """
    node, depth = locus
    if depth == 0:
        raise IndexOutOfRange("the empty word has no suffix link")
    if depth == 1:
        return Locus(ROOT, 0)

    anchor = node if depth == tree.depth[node] else tree.parent[node]
    if anchor == ROOT:
        return _descend(tree, ROOT, 0, depth - 1, chars, start + 1)
    base = tree.link[anchor]
    if base < 0:
        raise InvariantViolation(f"node {anchor} has no suffix link")
    return _descend(tree, base, tree.depth[anchor] - 1, depth - 1, chars, start + 1)


def matching_statistics(x: bytes, tree: SuffixTree,
                        aggregates: Optional[NodeAggregates] = None) -> MatchingStatistics:
    """Longest match of every suffix of x against the tree's text, in O(|x|)"""
    aggregates = aggregates or compute_aggregates(tree)
    n = len(x)
    lengths = [0] * n
    positions = [0] * n
    nodes = [ROOT] * n

    locus = Locus(ROOT, 0)
    for i in range(n):
        j = i + locus.depth
        while j < n:
            extended = spell(tree, locus, x[j])
            if extended is None:
                break
            locus = extended
            j += 1

        f = locus.depth
        lengths[i] = f
        nodes[i] = locus.node
        if f:
            positions[i] = aggregates.min_start[locus.node]
            locus = follow_suffix_link(tree, locus, x, i)

    return MatchingStatistics(lengths, positions, nodes)


def _find(dsu: List[int], v: int) -> int:
    root = v
    while dsu[root] != root:
        root = dsu[root]
    while dsu[v] != root:
        dsu[v], v = root, dsu[v]
    return root


def batch_weighted_ancestors(tree: SuffixTree, queries: Sequence[WeightedAncestorQuery]) -> List[Locus]:
    """
    Answer all queries off-line

    Nodes are bucketed by their parent's depth and united with the parent in
    decreasing depth order; a query (v, w) is answered when every edge whose upper
    end has depth >= w is contracted, so the set representative of v is the
    highest ancestor of depth >= w.
    """
    if not queries:
        return []

    depth, parent = tree.depth, tree.parent
    max_weight = 0
    for q in queries:
        if q.weight < 1 or q.weight > depth[q.node]:
            raise WeightOutOfRange(
                f"weight {q.weight} outside 1..{depth[q.node]} for node {q.node}",
                {"node": q.node, "weight": q.weight},
            )
        if q.weight > max_weight:
            max_weight = q.weight

    m = tree.node_count
    dsu = list(range(m))
    node_buckets: List[List[int]] = [[] for _ in range(max_weight + 1)]
    for v in range(1, m):
        pd = depth[parent[v]]
        if pd > max_weight:
            dsu[v] = parent[v]
        elif pd >= 1:
            node_buckets[pd].append(v)

    query_buckets: List[List[int]] = [[] for _ in range(max_weight + 1)]
    for qi, q in enumerate(queries):
        query_buckets[q.weight].append(qi)

    answers: List[Optional[Locus]] = [None] * len(queries)
    for w in range(max_weight, 0, -1):
        for v in node_buckets[w]:
            dsu[v] = parent[v]
        for qi in query_buckets[w]:
            answers[qi] = Locus(_find(dsu, queries[qi].node), w)

    return answers


def weighted_ancestor_by_path(tree: SuffixTree, node: int, weight: int) -> Locus:
    """Single query by binary search over the root path"""
    if weight < 1 or weight > tree.depth[node]:
        raise WeightOutOfRange(f"weight {weight} outside 1..{tree.depth[node]} for node {node}")
    path = []
    v = node
    while v != ROOT:
        path.append(v)
        v = tree.parent[v]
    path.reverse()
    depths = [tree.depth[u] for u in path]
    return Locus(path[bisect_left(depths, weight)], weight)


def locate_factor_locus(tree: SuffixTree, i: int, j: int) -> Locus:
    """Locus of text[i..j] (inclusive)"""
    if not 0 <= i <= j < tree.size:
        raise IndexOutOfRange(f"factor [{i},{j}] outside text of length {tree.size}")
    return batch_weighted_ancestors(tree, [WeightedAncestorQuery(tree.leaf_at[i], j - i + 1)])[0]
