"""Mixed graphs with endpoint marks, d-separation, possible-D-SEP and skeleton metrics.

A :class:`MixedGraph` stores at most one edge per unordered vertex pair.  Each
edge carries one mark per endpoint (tail, arrow or circle), which is enough to
represent DAGs (tail->arrow everywhere), undirected skeletons, CPDAGs and PAGs
with one data structure.
"""

from __future__ import annotations

import json
from collections import deque
from enum import Enum
from itertools import combinations
from typing import Iterable, Iterator

from .errors import CapacityError, DimensionError, InvalidDagError

__all__ = [
    "Mark",
    "MixedGraph",
    "SepsetMap",
    "d_separated",
    "possible_d_sep",
    "shd",
    "cpdag_oracle",
    "v_structures",
]


class Mark(str, Enum):
    """Mark at one endpoint of an edge."""

    TAIL = "tail"
    ARROW = "arrow"
    CIRCLE = "circle"


class MixedGraph:
    """Graph over vertices ``0..p-1`` with marked edges.

    Edges are stored canonically under the key ``(a, b)`` with ``a < b``; the
    two marks are swapped on insertion/lookup as needed, so undirected queries
    have a single source of truth.
    """

    def __init__(self, p: int):
        if p < 0:
            raise ValueError(f"vertex count must be nonnegative, got {p}")
        self.p = p
        # (a, b) with a < b  ->  (mark at a, mark at b)
        self._edges: dict[tuple[int, int], tuple[Mark, Mark]] = {}
        self._adj: list[set[int]] = [set() for _ in range(p)]

    # -- construction -----------------------------------------------------

    @classmethod
    def complete(cls, p: int, mark: Mark = Mark.TAIL) -> "MixedGraph":
        """Complete graph with the same mark at both endpoints of every edge."""
        g = cls(p)
        for a, b in combinations(range(p), 2):
            g.add_edge(a, b, mark, mark)
        return g

    @classmethod
    def from_directed_edges(cls, p: int, edges: Iterable[tuple[int, int]]) -> "MixedGraph":
        """Build a directed graph from ``(parent, child)`` pairs."""
        g = cls(p)
        for a, b in edges:
            g.add_edge(a, b, Mark.TAIL, Mark.ARROW)
        return g

    def copy(self) -> "MixedGraph":
        g = MixedGraph(self.p)
        g._edges = dict(self._edges)
        g._adj = [set(s) for s in self._adj]
        return g

    # -- basic edge operations --------------------------------------------

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.p:
            raise IndexError(f"vertex {v} out of range for p={self.p}")

    def add_edge(self, a: int, b: int, mark_a: Mark, mark_b: Mark) -> None:
        self._check_vertex(a)
        self._check_vertex(b)
        if a == b:
            raise ValueError(f"self-loop at vertex {a}")
        if a > b:
            a, b, mark_a, mark_b = b, a, mark_b, mark_a
        self._edges[(a, b)] = (mark_a, mark_b)
        self._adj[a].add(b)
        self._adj[b].add(a)

    def remove_edge(self, a: int, b: int) -> None:
        key = (a, b) if a < b else (b, a)
        if key not in self._edges:
            raise KeyError(f"no edge between {a} and {b}")
        del self._edges[key]
        self._adj[a].discard(b)
        self._adj[b].discard(a)

    def has_edge(self, a: int, b: int) -> bool:
        self._check_vertex(a)
        self._check_vertex(b)
        return (min(a, b), max(a, b)) in self._edges

    def marks(self, a: int, b: int) -> tuple[Mark, Mark]:
        """Marks of edge a-b, returned as (mark at a, mark at b)."""
        key = (a, b) if a < b else (b, a)
        ma, mb = self._edges[key]
        return (ma, mb) if a < b else (mb, ma)

    def mark_at(self, a: int, b: int, at: int) -> Mark:
        """Mark at endpoint ``at`` of the edge between a and b."""
        ma, mb = self.marks(a, b)
        if at == a:
            return ma
        if at == b:
            return mb
        raise ValueError(f"vertex {at} is not an endpoint of edge {a}-{b}")

    def set_mark(self, a: int, b: int, at: int, mark: Mark) -> None:
        ma, mb = self.marks(a, b)
        if at == a:
            ma = mark
        elif at == b:
            mb = mark
        else:
            raise ValueError(f"vertex {at} is not an endpoint of edge {a}-{b}")
        self.add_edge(a, b, ma, mb)

    def adjacency(self, a: int) -> set[int]:
        self._check_vertex(a)
        return set(self._adj[a])

    def edges(self) -> Iterator[tuple[int, int, Mark, Mark]]:
        for (a, b), (ma, mb) in sorted(self._edges.items()):
            yield a, b, ma, mb

    def skeleton_edges(self) -> set[tuple[int, int]]:
        return set(self._edges)

    def edge_count(self) -> int:
        return len(self._edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MixedGraph):
            return NotImplemented
        return self.p == other.p and self._edges == other._edges

    def __repr__(self) -> str:
        return f"MixedGraph(p={self.p}, edges={len(self._edges)})"

    # -- DAG queries --------------------------------------------------------

    def is_directed_edge(self, a: int, b: int) -> bool:
        """True iff the edge is exactly a -> b (tail at a, arrow at b)."""
        if not self.has_edge(a, b):
            return False
        ma, mb = self.marks(a, b)
        return ma is Mark.TAIL and mb is Mark.ARROW

    def parents(self, v: int) -> set[int]:
        return {u for u in self._adj[v] if self.is_directed_edge(u, v)}

    def children(self, v: int) -> set[int]:
        return {u for u in self._adj[v] if self.is_directed_edge(v, u)}

    def require_dag(self) -> list[int]:
        """Validate DAG-ness and return a topological order.

        Raises :class:`InvalidDagError` if any edge is not tail->arrow or the
        directed graph has a cycle.
        """
        for a, b, ma, mb in self.edges():
            directed = (ma is Mark.TAIL and mb is Mark.ARROW) or (
                ma is Mark.ARROW and mb is Mark.TAIL
            )
            if not directed:
                raise InvalidDagError(f"edge {a}-{b} with marks ({ma.value},{mb.value}) is not directed")
        indeg = [len(self.parents(v)) for v in range(self.p)]
        queue = deque(v for v in range(self.p) if indeg[v] == 0)
        order: list[int] = []
        while queue:
            v = queue.popleft()
            order.append(v)
            for c in self.children(v):
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if len(order) != self.p:
            raise InvalidDagError("directed cycle detected")
        return order

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        payload = {
            "p": self.p,
            "edges": [
                {"a": a, "b": b, "mark_a": ma.value, "mark_b": mb.value}
                for a, b, ma, mb in self.edges()
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MixedGraph":
        payload = json.loads(text)
        g = cls(int(payload["p"]))
        for e in payload["edges"]:
            g.add_edge(int(e["a"]), int(e["b"]), Mark(e["mark_a"]), Mark(e["mark_b"]))
        return g

    def to_dot(self, names: list[str] | None = None) -> str:
        """Render as Graphviz DOT.

        A graph whose edges are all tail-tail is emitted as an undirected
        ``graph`` with ``a -- b`` lines.  Anything else becomes a ``digraph``;
        plain directed edges use ``a -> b`` and other mark combinations are
        expressed with ``arrowtail``/``arrowhead`` attributes (circle marks as
        ``odot``).
        """
        if names is None:
            names = [f"x{i}" for i in range(self.p)]
        if len(names) != self.p:
            raise DimensionError(f"got {len(names)} names for p={self.p}")

        def dot_head(mark: Mark) -> str:
            return {"tail": "none", "arrow": "normal", "circle": "odot"}[mark.value]

        all_undirected = all(
            ma is Mark.TAIL and mb is Mark.TAIL for _, _, ma, mb in self.edges()
        )
        lines: list[str] = []
        if all_undirected:
            lines.append("graph {")
            for a, b, _, _ in self.edges():
                lines.append(f'  "{names[a]}" -- "{names[b]}";')
        else:
            lines.append("digraph {")
            for a, b, ma, mb in self.edges():
                if ma is Mark.TAIL and mb is Mark.ARROW:
                    lines.append(f'  "{names[a]}" -> "{names[b]}";')
                else:
                    attrs = f"dir=both, arrowtail={dot_head(ma)}, arrowhead={dot_head(mb)}"
                    lines.append(f'  "{names[a]}" -> "{names[b]}" [{attrs}];')
        lines.append("}")
        return "\n".join(lines) + "\n"


class SepsetMap:
    """Separating sets keyed by unordered vertex pair."""

    def __init__(self) -> None:
        self._sets: dict[tuple[int, int], frozenset[int]] = {}

    @staticmethod
    def _key(a: int, b: int) -> tuple[int, int]:
        return (a, b) if a < b else (b, a)

    def set(self, a: int, b: int, s: Iterable[int]) -> None:
        s = frozenset(s)
        if a in s or b in s:
            raise ValueError(f"sepset of ({a},{b}) must not contain its endpoints")
        self._sets[self._key(a, b)] = s

    def get(self, a: int, b: int) -> frozenset[int]:
        return self._sets.get(self._key(a, b), frozenset())

    def __contains__(self, pair: tuple[int, int]) -> bool:
        return self._key(*pair) in self._sets

    def items(self) -> Iterator[tuple[tuple[int, int], frozenset[int]]]:
        return iter(sorted(self._sets.items()))

    def __len__(self) -> int:
        return len(self._sets)


def d_separated(g: MixedGraph, a: int, b: int, s: Iterable[int]) -> bool:
    """True iff every path between ``a`` and ``b`` is blocked given ``s``.

    ``g`` must be a DAG.  Uses the standard reachability traversal over
    (vertex, travel direction) states; a vertex is reachable "downward"
    through a collider only when the collider has a descendant in ``s``.
    """
    g._check_vertex(a)
    g._check_vertex(b)
    s = frozenset(s)
    for v in s:
        g._check_vertex(v)
    if a == b:
        raise ValueError("d-separation query requires distinct endpoints")
    if a in s or b in s:
        raise ValueError("conditioning set must exclude the query endpoints")
    g.require_dag()

    # symmetric by construction; canonicalize the start vertex anyway
    start, target = (a, b) if a < b else (b, a)

    # vertices with a descendant in s (including s itself)
    anc_of_s: set[int] = set(s)
    stack = list(s)
    while stack:
        v = stack.pop()
        for u in g.parents(v):
            if u not in anc_of_s:
                anc_of_s.add(u)
                stack.append(u)

    # states: (vertex, came_from_child); start pretends to arrive from a child
    seen: set[tuple[int, bool]] = set()
    queue: deque[tuple[int, bool]] = deque([(start, True)])
    while queue:
        v, from_child = queue.popleft()
        if (v, from_child) in seen:
            continue
        seen.add((v, from_child))
        if v == target:
            return False
        if from_child and v not in s:
            for u in g.parents(v):
                queue.append((u, True))
            for u in g.children(v):
                queue.append((u, False))
        elif not from_child:
            if v not in s:
                for u in g.children(v):
                    queue.append((u, False))
            if v in anc_of_s:
                for u in g.parents(v):
                    queue.append((u, True))
    return True


def possible_d_sep(g: MixedGraph, a: int, b: int | None = None) -> set[int]:
    """Vertices reachable from ``a`` along paths whose every inner triple is a
    collider or a triangle.

    This realizes the candidate-separator pool used by the FCI final-skeleton
    stage.  The result does not depend on ``b``; the parameter is accepted for
    call-site symmetry with pairwise queries.  Paths are simple (vertices not
    revisited), so the search is exact but worst-case exponential; intended
    for the small vertex counts this package targets.
    """
    g._check_vertex(a)
    if b is not None:
        g._check_vertex(b)
    result: set[int] = set()

    def triple_ok(e: int, f: int, h: int) -> bool:
        collider = g.mark_at(e, f, f) is Mark.ARROW and g.mark_at(f, h, f) is Mark.ARROW
        return collider or g.has_edge(e, h)

    # DFS over simple paths a, ..., prev, cur
    stack: list[tuple[int, int, frozenset[int]]] = []
    for x in g.adjacency(a):
        result.add(x)
        stack.append((a, x, frozenset((a, x))))
    while stack:
        prev, cur, on_path = stack.pop()
        for nxt in g.adjacency(cur):
            if nxt in on_path:
                continue
            if triple_ok(prev, cur, nxt):
                result.add(nxt)
                stack.append((cur, nxt, on_path | {nxt}))
    result.discard(a)
    return result


def shd(g1: MixedGraph, g2: MixedGraph) -> int:
    """Structural Hamming distance between skeletons.

    Counts the edge additions/deletions needed to turn one skeleton into the
    other; endpoint marks are ignored.
    """
    if g1.p != g2.p:
        raise DimensionError(f"vertex counts differ: {g1.p} != {g2.p}")
    return len(g1.skeleton_edges() ^ g2.skeleton_edges())


def v_structures(g: MixedGraph) -> set[tuple[int, int, int]]:
    """Unshielded colliders (a, m, c) with a < c of a graph with arrow marks."""
    out: set[tuple[int, int, int]] = set()
    for m in range(g.p):
        nbrs = sorted(g.adjacency(m))
        for a, c in combinations(nbrs, 2):
            if g.has_edge(a, c):
                continue
            if g.mark_at(a, m, m) is Mark.ARROW and g.mark_at(c, m, m) is Mark.ARROW:
                out.add((a, m, c))
    return out


# cpdag_oracle enumerates every orientation of the skeleton, so cap the size.
CPDAG_ORACLE_MAX_P = 8
CPDAG_ORACLE_MAX_EDGES = 20


def cpdag_oracle(g: MixedGraph) -> MixedGraph:
    """CPDAG of a DAG's Markov equivalence class, by exhaustive enumeration.

    Enumerates all ``2^|E|`` orientations of the skeleton, keeps the acyclic
    ones with the same v-structures as ``g``, and directs an edge in the
    output only when every class member agrees.  Testing-oriented: limited to
    ``p <= 8`` and ``|E| <= 20``.
    """
    if g.p > CPDAG_ORACLE_MAX_P:
        raise CapacityError(f"cpdag_oracle supports p <= {CPDAG_ORACLE_MAX_P}, got {g.p}")
    if g.edge_count() > CPDAG_ORACLE_MAX_EDGES:
        raise CapacityError(
            f"cpdag_oracle supports at most {CPDAG_ORACLE_MAX_EDGES} edges, got {g.edge_count()}"
        )
    g.require_dag()
    target_vs = v_structures(g)
    pairs = sorted(g.skeleton_edges())
    m = len(pairs)
    p = g.p

    # orientation sets agreed on by all members, per edge: {(a,b)} means a->b
    agreed: list[set[tuple[int, int]]] | None = None
    for mask in range(1 << m):
        children: list[list[int]] = [[] for _ in range(p)]
        indeg = [0] * p
        oriented: list[tuple[int, int]] = []
        for i, (a, b) in enumerate(pairs):
            if mask >> i & 1:
                src, dst = a, b
            else:
                src, dst = b, a
            children[src].append(dst)
            indeg[dst] += 1
            oriented.append((src, dst))
        # acyclicity (Kahn)
        queue = deque(v for v in range(p) if indeg[v] == 0)
        indeg_work = list(indeg)
        visited = 0
        while queue:
            v = queue.popleft()
            visited += 1
            for c in children[v]:
                indeg_work[c] -= 1
                if indeg_work[c] == 0:
                    queue.append(c)
        if visited != p:
            continue
        cand = MixedGraph.from_directed_edges(p, oriented)
        if v_structures(cand) != target_vs:
            continue
        if agreed is None:
            agreed = [{e} for e in oriented]
        else:
            for i, e in enumerate(oriented):
                agreed[i].add(e)
    assert agreed is not None  # g itself is always a class member
    out = MixedGraph(p)
    for i, (a, b) in enumerate(pairs):
        if len(agreed[i]) == 1:
            src, dst = next(iter(agreed[i]))
            out.add_edge(src, dst, Mark.TAIL, Mark.ARROW)
        else:
            out.add_edge(a, b, Mark.TAIL, Mark.TAIL)
    return out
