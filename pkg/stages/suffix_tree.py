"""
Suffix Tree
Online (Ukkonen) construction over integer symbols with suffix links, word-depths,
terminal labels, preorder subtree ranges and min/max start aggregates.

Symbols 0..255 are content bytes; sentinels are integers from TERMINATOR upwards,
so a generalized tree can index any number of texts.
"""

from bisect import bisect_right
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import structlog

from .errors import EmptyInput, PatternsNotPrefixFree, SentinelCollision

logger = structlog.get_logger()

TERMINATOR = 256
ROOT = 0

# Leaves never receive children during construction; they all share this read-only map.
_LEAF_CHILDREN = MappingProxyType({})


class Locus(NamedTuple):
    """Explicit or implicit node: depth letters down the edge into `node`"""

    node: int
    depth: int


@dataclass(frozen=True)
class NodeAggregates:
    min_start: List[int]
    max_start: List[int]


class SuffixTree:
    """
    Array-backed compact suffix tree

    Node v has edge label text[start[v]..end[v]] (inclusive), word-depth depth[v],
    parent[v], link[v] (suffix link, internal nodes only) and children[v] keyed by
    the first symbol of the child edge. Leaves carry suffix_of[v], the starting
    position of their suffix; leaf_at is the inverse map. order is a preorder of
    all nodes and the subtree of v occupies order[pre[v]:last[v]].
    """

    def __init__(self, text: List[int], offsets: Tuple[int, ...]):
        self.text = text
        self.size = len(text)
        self.offsets = offsets
        self._construct()
        self._index()

    def _construct(self) -> None:
        text = self.text
        n = self.size
        start = [-1]
        end = [-1]
        link = [ROOT]
        parent = [-1]
        children = [{}]

        active_node = ROOT
        active_edge = 0
        active_length = 0
        remainder = 0

        for pos in range(n):
            c = text[pos]
            remainder += 1
            last_new = -1
            while remainder:
                if active_length == 0:
                    active_edge = pos
                nxt = children[active_node].get(text[active_edge])
                if nxt is None:
                    children[active_node][text[active_edge]] = len(start)
                    start.append(pos)
                    end.append(-1)
                    link.append(-1)
                    parent.append(active_node)
                    children.append(_LEAF_CHILDREN)
                    if last_new >= 0:
                        link[last_new] = active_node
                        last_new = -1
                else:
                    edge_end = end[nxt] if end[nxt] >= 0 else pos
                    edge_len = edge_end - start[nxt] + 1
                    if active_length >= edge_len:
                        active_edge += edge_len
                        active_length -= edge_len
                        active_node = nxt
                        continue
                    if text[start[nxt] + active_length] == c:
                        if last_new >= 0 and active_node != ROOT:
                            link[last_new] = active_node
                            last_new = -1
                        active_length += 1
                        break

                    split = len(start)
                    split_start = start[nxt]
                    start.append(split_start)
                    end.append(split_start + active_length - 1)
                    link.append(ROOT)
                    parent.append(active_node)
                    children.append({})
                    children[active_node][text[active_edge]] = split

                    children[split][c] = len(start)
                    start.append(pos)
                    end.append(-1)
                    link.append(-1)
                    parent.append(split)
                    children.append(_LEAF_CHILDREN)

                    start[nxt] = split_start + active_length
                    parent[nxt] = split
                    children[split][text[start[nxt]]] = nxt
                    if last_new >= 0:
                        link[last_new] = split
                    last_new = split

                remainder -= 1
                if active_node == ROOT and active_length > 0:
                    active_length -= 1
                    active_edge = pos - remainder + 1
                elif active_node != ROOT:
                    active_node = link[active_node]

        for v in range(1, len(end)):
            if end[v] < 0:
                end[v] = n - 1

        self.start = start
        self.end = end
        self.link = link
        self.parent = parent
        self.children = children

    def _index(self) -> None:
        n = self.size
        m = len(self.start)
        start, end, children = self.start, self.end, self.children
        depth = [0] * m
        suffix_of = [-1] * m
        leaf_at = [0] * n
        order: List[int] = []

        stack = [ROOT]
        while stack:
            v = stack.pop()
            order.append(v)
            kids = children[v]
            if kids:
                dv = depth[v]
                for c in kids.values():
                    depth[c] = dv + end[c] - start[c] + 1
                    stack.append(c)
            elif v != ROOT:
                s = n - depth[v]
                suffix_of[v] = s
                leaf_at[s] = v

        pre = [0] * m
        for i, v in enumerate(order):
            pre[v] = i
        size = [1] * m
        parent = self.parent
        for v in reversed(order):
            if v != ROOT:
                size[parent[v]] += size[v]

        self.depth = depth
        self.suffix_of = suffix_of
        self.leaf_at = leaf_at
        self.order = order
        self.pre = pre
        self.last = [pre[v] + size[v] for v in range(m)]

    @property
    def node_count(self) -> int:
        return len(self.start)

    def is_leaf(self, v: int) -> bool:
        return self.suffix_of[v] >= 0

    def edge_length(self, v: int) -> int:
        return 0 if v == ROOT else self.end[v] - self.start[v] + 1

    def terminal_label(self, leaf: int) -> Tuple[int, int]:
        """(text index, offset in that text) of a leaf's suffix"""
        pos = self.suffix_of[leaf]
        t = bisect_right(self.offsets, pos) - 1
        return t, pos - self.offsets[t]

    def subtree_leaves(self, v: int) -> Iterator[int]:
        """Starting positions of all suffixes below v"""
        order, suffix_of = self.order, self.suffix_of
        for k in range(self.pre[v], self.last[v]):
            s = suffix_of[order[k]]
            if s >= 0:
                yield s

    def path_label(self, v: int) -> Tuple[int, ...]:
        s = next(self.subtree_leaves(v))
        return tuple(self.text[s:s + self.depth[v]])

    def to_dot(self) -> str:
        """Graphviz dump for documentation and debugging"""
        def show(sym: int) -> str:
            if sym >= TERMINATOR:
                return f"${sym - TERMINATOR}"
            return chr(sym) if 32 < sym < 127 and chr(sym) not in '"\\' else f"0x{sym:02x}"

        lines = ["digraph suffix_tree {", "  node [shape=circle, label=\"\"];"]
        for v in self.order:
            if self.is_leaf(v):
                lines.append(f'  n{v} [shape=box, label="{self.suffix_of[v]}"];')
            elif v != ROOT:
                lines.append(f"  n{v} -> n{self.link[v]} [style=dashed];")
            if v != ROOT:
                label = "".join(show(s) for s in self.text[self.start[v]:self.end[v] + 1])
                lines.append(f'  n{self.parent[v]} -> n{v} [label="{label}"];')
        lines.append("}")
        return "\n".join(lines)


def build(data: bytes, sentinel: int = TERMINATOR) -> SuffixTree:
    """Suffix tree of data followed by one sentinel symbol"""
    if not data:
        raise EmptyInput("cannot build a suffix tree of an empty text")
    if sentinel < 256 and sentinel in data:
        raise SentinelCollision(f"sentinel byte {sentinel} occurs in the text", {"sentinel": sentinel})

    symbols = list(data)
    symbols.append(sentinel)
    tree = SuffixTree(symbols, (0,))
    logger.debug("Suffix tree built", length=len(data), nodes=tree.node_count)
    return tree


def build_generalized(texts: Sequence[bytes]) -> SuffixTree:
    """Suffix tree of text_0 $0 text_1 $1 ... with a distinct terminator per text"""
    if not texts or any(not t for t in texts):
        raise EmptyInput("generalized suffix tree needs at least one text and no empty texts")

    symbols: List[int] = []
    offsets: List[int] = []
    for t, word in enumerate(texts):
        offsets.append(len(symbols))
        symbols.extend(word)
        symbols.append(TERMINATOR + t)

    tree = SuffixTree(symbols, tuple(offsets))
    logger.debug("Generalized suffix tree built", texts=len(texts),
                 length=len(symbols), nodes=tree.node_count)
    return tree


def compute_aggregates(tree: SuffixTree) -> NodeAggregates:
    """Smallest and largest suffix start in every subtree"""
    m = tree.node_count
    min_start = [tree.size] * m
    max_start = [-1] * m
    suffix_of, parent = tree.suffix_of, tree.parent

    for v in reversed(tree.order):
        s = suffix_of[v]
        if s >= 0:
            min_start[v] = max_start[v] = s
        p = parent[v]
        if p >= 0:
            if min_start[v] < min_start[p]:
                min_start[p] = min_start[v]
            if max_start[v] > max_start[p]:
                max_start[p] = max_start[v]

    return NodeAggregates(min_start, max_start)


def root_locus(tree: SuffixTree) -> Locus:
    return Locus(ROOT, 0)


def spell(tree: SuffixTree, locus: Locus, letter: int) -> Optional[Locus]:
    """Locus of L(locus)·letter, or None when that word is not a factor"""
    node, depth = locus
    if depth == tree.depth[node]:
        child = tree.children[node].get(letter)
        return None if child is None else Locus(child, depth + 1)
    if tree.text[tree.start[node] + depth - tree.depth[tree.parent[node]]] == letter:
        return Locus(node, depth + 1)
    return None


def locate_word(tree: SuffixTree, word: bytes, locus: Optional[Locus] = None) -> Optional[Locus]:
    locus = locus or Locus(ROOT, 0)
    for letter in word:
        locus = spell(tree, locus, letter)
        if locus is None:
            return None
    return locus


def _check_prefix_free(words: List[bytes]) -> None:
    ordered = sorted(words)
    for a, b in zip(ordered, ordered[1:]):
        if b.startswith(a):
            raise PatternsNotPrefixFree(f"pattern {a!r} is a prefix of {b!r}")


def locate_prefix_free_patterns(tree: SuffixTree, patterns: Sequence[Union[bytes, Locus]],
                                check: bool = False) -> List[List[int]]:
    """
    All starting positions of each pattern in the indexed text

    Args:
        patterns: words or loci, pairwise prefix-free so the swept subtrees are disjoint
        check: verify prefix-freeness of the word patterns first
    """
    if check:
        _check_prefix_free([p for p in patterns if not isinstance(p, Locus)])

    occurrences: List[List[int]] = []
    for pattern in patterns:
        locus = pattern if isinstance(pattern, Locus) else locate_word(tree, pattern)
        if locus is None:
            occurrences.append([])
        else:
            occurrences.append(sorted(tree.subtree_leaves(locus.node)))
    return occurrences
