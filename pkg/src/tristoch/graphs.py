"""Graph machinery: co-line graphs, 2-colorings, bipartite matchings, Hamiltonian cycles.

Every randomized routine takes ``seed`` which may be an ``int``, ``None`` or a
``random.Random`` instance (shared when threading one RNG through a build).
Identical seeds give identical results.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .arrays import Cell, Cube, HalfArray, LineSpec, ShaftView

Vertex = Hashable


def _rng(seed) -> random.Random:
    if isinstance(seed, random.Random):
        return seed
    return random.Random(seed)


# -- co-line graph -----------------------------------------------------------

class LineOverflow(ValueError):
    """A line holds three or more support cells, so U_R is undefined."""

    def __init__(self, line: LineSpec, cells: Sequence[Cell]):
        super().__init__(f"line {line} has support {len(cells)} > 2")
        self.line = line
        self.cells = tuple(cells)


@dataclass(frozen=True)
class LineGraph:
    """Support cells of an array, adjacent when they share a line."""

    vertices: tuple[Cell, ...]
    adjacency: Mapping[Cell, tuple[Cell, ...]]

    def edges(self) -> list[tuple[Cell, Cell]]:
        return [(u, v) for u in self.vertices for v in self.adjacency[u] if u < v]

    def degree(self, v: Cell) -> int:
        return len(self.adjacency[v])


def build_line_graph(source) -> LineGraph:
    """Co-line graph of ``source``: a HalfArray, a Cube, or an iterable of cells."""
    if isinstance(source, (HalfArray, Cube)):
        cells = sorted(source.support)
    else:
        cells = sorted(set(source))
    by_line: dict[tuple, list[Cell]] = {}
    for c in cells:
        i, j, k = c
        for key in (("column", j, k), ("row", i, k), ("shaft", i, j)):
            by_line.setdefault(key, []).append(c)
    adj: dict[Cell, list[Cell]] = {c: [] for c in cells}
    for key, members in by_line.items():
        if len(members) > 2:
            raise LineOverflow(LineSpec(*key), members)
        if len(members) == 2:
            u, v = members
            adj[u].append(v)
            adj[v].append(u)
    return LineGraph(tuple(cells), {c: tuple(sorted(ns)) for c, ns in adj.items()})


def _adjacency(graph) -> Mapping[Vertex, Iterable[Vertex]]:
    return graph.adjacency if isinstance(graph, LineGraph) else graph


def connected_components(graph) -> list[set]:
    """Components of a LineGraph or of a plain ``{vertex: neighbours}`` mapping."""
    adj = _adjacency(graph)
    seen: set = set()
    comps = []
    for root in adj:
        if root in seen:
            continue
        comp = {root}
        seen.add(root)
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for u in adj[v]:
                if u not in seen:
                    seen.add(u)
                    comp.add(u)
                    queue.append(u)
        comps.append(comp)
    return comps


# -- 2-coloring ----------------------------------------------------------------

@dataclass(frozen=True)
class TwoColoring:
    """Proper coloring of one component; colors are 0 ("red") and 1 ("blue")."""

    colors: Mapping[Vertex, int]
    root: Vertex

    def swapped(self) -> "TwoColoring":
        return TwoColoring({v: 1 - c for v, c in self.colors.items()}, self.root)


@dataclass(frozen=True)
class OddCycleWitness:
    """A closed walk ``cycle[0], ..., cycle[-1], cycle[0]`` of odd length."""

    cycle: tuple

    def __len__(self) -> int:
        return len(self.cycle)

    def verify(self, graph) -> bool:
        adj = _adjacency(graph)
        L = len(self.cycle)
        if L % 2 == 0 or L < 3:
            return False
        return all(self.cycle[(t + 1) % L] in set(adj[self.cycle[t]]) for t in range(L))


def two_color(graph, component: Iterable[Vertex] | None = None,
              root: Vertex | None = None) -> TwoColoring | OddCycleWitness:
    """BFS 2-coloring of a connected component, or an odd cycle proving none exists.

    ``root`` defaults to the smallest vertex of the component, which fixes the
    coloring; the only other proper coloring is :meth:`TwoColoring.swapped`.
    """
    adj = _adjacency(graph)
    if component is None:
        component = adj.keys()
    comp = set(component)
    if root is None:
        try:
            root = min(comp)
        except TypeError:
            root = next(iter(comp))
    color = {root: 0}
    parent = {root: None}
    depth = {root: 0}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for u in adj[v]:
            if u not in color:
                color[u] = 1 - color[v]
                parent[u] = v
                depth[u] = depth[v] + 1
                queue.append(u)
            elif color[u] == color[v]:
                return OddCycleWitness(_odd_cycle(u, v, parent, depth))
    return TwoColoring(color, root)


def _odd_cycle(u, v, parent, depth) -> tuple:
    """Cycle formed by tree paths u->lca, lca->v and the edge (v, u)."""
    pu, pv = [u], [v]
    a, b = u, v
    while depth[a] > depth[b]:
        a = parent[a]
        pu.append(a)
    while depth[b] > depth[a]:
        b = parent[b]
        pv.append(b)
    while a != b:
        a, b = parent[a], parent[b]
        pu.append(a)
        pv.append(b)
    # pu ends at lca, pv ends at lca
    return tuple(pu + pv[-2::-1])


def is_bipartite(graph) -> bool:
    return all(isinstance(two_color(graph, c), TwoColoring) for c in connected_components(graph))


# -- bipartite graphs ----------------------------------------------------------

@dataclass(frozen=True)
class BipartiteGraph:
    """Bipartite graph with left labels ``left`` (rows) and right labels ``right``."""

    left: tuple
    right: tuple
    adj: Mapping[Vertex, tuple] = field(default_factory=dict)

    @classmethod
    def from_edges(cls, left: Iterable, right: Iterable, edges: Iterable[tuple]) -> "BipartiteGraph":
        left, right = tuple(left), tuple(right)
        lset, rset = set(left), set(right)
        nbrs: dict = {x: set() for x in left}
        for x, y in edges:
            if x not in lset or y not in rset:
                raise ValueError(f"edge {(x, y)} leaves the vertex sets")
            nbrs[x].add(y)
        order = {y: t for t, y in enumerate(right)}
        return cls(left, right, {x: tuple(sorted(ns, key=order.__getitem__)) for x, ns in nbrs.items()})

    @classmethod
    def from_matrix(cls, matrix) -> "BipartiteGraph":
        """Bi-adjacency 0/1 matrix; rows and columns are labelled 0..m-1."""
        a = np.asarray(matrix)
        r, c = a.shape
        return cls.from_edges(range(r), range(c), zip(*np.nonzero(a)))

    def edges(self) -> list[tuple]:
        return [(x, y) for x in self.left for y in self.adj[x]]

    def has_edge(self, x, y) -> bool:
        return y in self.adj.get(x, ())

    @property
    def num_edges(self) -> int:
        return sum(len(v) for v in self.adj.values())

    def left_degree(self, x) -> int:
        return len(self.adj[x])

    def right_degrees(self) -> dict:
        deg = {y: 0 for y in self.right}
        for x in self.left:
            for y in self.adj[x]:
                deg[y] += 1
        return deg

    def degrees(self) -> list[int]:
        return [len(self.adj[x]) for x in self.left] + list(self.right_degrees().values())

    def regular_degree(self) -> int | None:
        """Common degree if every vertex has the same degree, else ``None``."""
        ds = set(self.degrees())
        return ds.pop() if len(ds) == 1 else None

    def without_edges(self, edges: Iterable[tuple]) -> "BipartiteGraph":
        drop: dict = {}
        for x, y in edges:
            drop.setdefault(x, set()).add(y)
        return BipartiteGraph(self.left, self.right,
                              {x: tuple(y for y in ys if y not in drop.get(x, ())) for x, ys in self.adj.items()})

    def without_vertices(self, xs: Iterable, ys: Iterable) -> "BipartiteGraph":
        xs, ys = set(xs), set(ys)
        left = tuple(x for x in self.left if x not in xs)
        right = tuple(y for y in self.right if y not in ys)
        return BipartiteGraph(left, right, {x: tuple(y for y in self.adj[x] if y not in ys) for x in left})

    def biadjacency(self) -> np.ndarray:
        col = {y: t for t, y in enumerate(self.right)}
        a = np.zeros((len(self.left), len(self.right)), dtype=np.int64)
        for s, x in enumerate(self.left):
            for y in self.adj[x]:
                a[s, col[y]] = 1
        return a


def build_cell_graphs(D: ShaftView, rows: Iterable[int] | None = None,
                      cols: Iterable[int] | None = None) -> tuple[BipartiteGraph, BipartiteGraph]:
    """(G, G-bar): edges on the 0-cells resp. 1/2-cells of ``D`` over a region.

    Rows and columns are the 1-based indices of ``D``.
    """
    rows = list(range(1, D.n + 1)) if rows is None else list(rows)
    cols = list(range(1, D.n + 1)) if cols is None else list(cols)
    zero, half = [], []
    for x in rows:
        for y in cols:
            v = D[x, y]
            if v == 0:
                zero.append((x, y))
            elif v * 2 == 1:
                half.append((x, y))
            elif v != 1:
                raise ValueError(f"D({x},{y}) = {v} is not in {{0, 1/2, 1}}")
    return BipartiteGraph.from_edges(rows, cols, zero), BipartiteGraph.from_edges(rows, cols, half)


# -- matchings -----------------------------------------------------------------

class NoPerfectMatching(ValueError):
    """No perfect matching; ``hall_violator`` is a left set S with |N(S)| < |S|."""

    def __init__(self, hall_violator: frozenset, neighbourhood: frozenset):
        super().__init__(f"Hall violator of size {len(hall_violator)} with "
                         f"{len(neighbourhood)} neighbours")
        self.hall_violator = hall_violator
        self.neighbourhood = neighbourhood


class NotRegular(ValueError):
    pass


def _max_matching(B: BipartiteGraph, rng: random.Random) -> tuple[dict, dict]:
    """Randomized greedy start followed by BFS augmenting paths."""
    order = list(B.left)
    rng.shuffle(order)
    nbrs = {}
    for x in order:
        ys = list(B.adj[x])
        rng.shuffle(ys)
        nbrs[x] = ys
    mate_x: dict = {}
    mate_y: dict = {}
    for x in order:
        for y in nbrs[x]:
            if y not in mate_y:
                mate_x[x], mate_y[y] = y, x
                break
    for x in order:
        if x in mate_x:
            continue
        # BFS over alternating paths from x
        prev = {}
        queue = deque([x])
        seen_x = {x}
        end = None
        while queue and end is None:
            u = queue.popleft()
            for y in nbrs[u]:
                if y in prev:
                    continue
                prev[y] = u
                w = mate_y.get(y)
                if w is None:
                    end = y
                    break
                if w not in seen_x:
                    seen_x.add(w)
                    queue.append(w)
        if end is None:
            continue
        y = end
        while y is not None:
            u = prev[y]
            nxt = mate_x.get(u)
            mate_x[u], mate_y[y] = y, u
            y = nxt
    return mate_x, mate_y


def _hall_violator(B: BipartiteGraph, mate_x: dict, mate_y: dict) -> tuple[frozenset, frozenset]:
    # alternating trees from every unmatched left vertex: |S| - |N| = deficiency
    free = [x for x in B.left if x not in mate_x]
    S, N = set(free), set()
    queue = deque(free)
    while queue:
        u = queue.popleft()
        for y in B.adj[u]:
            if y not in N:
                N.add(y)
                w = mate_y[y]  # every reachable y is matched, else an augmenting path exists
                if w not in S:
                    S.add(w)
                    queue.append(w)
    return frozenset(S), frozenset(N)


def perfect_matching(B: BipartiteGraph, seed=None) -> frozenset[tuple]:
    """A perfect matching as a frozenset of (x, y) pairs.

    Raises :class:`NoPerfectMatching` carrying a Hall violator when none exists.
    """
    if len(B.left) != len(B.right):
        raise ValueError("perfect matching needs |X| == |Y|")
    rng = _rng(seed)
    mate_x, mate_y = _max_matching(B, rng)
    if len(mate_x) < len(B.left):
        raise NoPerfectMatching(*_hall_violator(B, mate_x, mate_y))
    return frozenset(mate_x.items())


def matching_through_edge(B: BipartiteGraph, e: tuple, seed=None) -> frozenset[tuple]:
    """Perfect matching of a regular bipartite graph that contains edge ``e``."""
    d = B.regular_degree()
    if not d or len(B.left) != len(B.right):
        raise NotRegular("matching_through_edge needs a balanced regular graph of degree >= 1")
    x, y = e
    if not B.has_edge(x, y):
        raise ValueError(f"{e} is not an edge")
    rest = perfect_matching(B.without_vertices([x], [y]), seed)
    return rest | {(x, y)}


# -- Hamiltonian cycles --------------------------------------------------------

class NoHamiltonianCycle(ValueError):
    """Raised when no Hamiltonian cycle exists (``proven``) or none was found in budget."""

    def __init__(self, msg: str, proven: bool):
        super().__init__(msg)
        self.proven = proven


@dataclass(frozen=True)
class CycleSeq:
    """Cyclic vertex sequence alternating left/right vertices of a bipartite graph.

    ``nodes`` holds ``(0, x)`` for left and ``(1, y)`` for right vertices.
    """

    nodes: tuple

    def __len__(self) -> int:
        return len(self.nodes)

    def pairs(self) -> list[tuple]:
        """Edges (x, y) in cycle order."""
        out = []
        L = len(self.nodes)
        for t in range(L):
            a, b = self.nodes[t], self.nodes[(t + 1) % L]
            out.append((a[1], b[1]) if a[0] == 0 else (b[1], a[1]))
        return out

    def verify(self, B: BipartiteGraph) -> bool:
        if len(self.nodes) != len(B.left) + len(B.right) or len(set(self.nodes)) != len(self.nodes):
            return False
        return all(B.has_edge(x, y) for x, y in self.pairs())


def moon_moser_holds(B: BipartiteGraph) -> bool:
    """Minimum degree >= m/2 on a balanced bipartite graph with sides of size m."""
    m = len(B.left)
    if m != len(B.right):
        raise ValueError("unbalanced bipartite graph")
    return 2 * min(B.degrees(), default=0) >= m


def _index_graph(B: BipartiteGraph) -> tuple[list, list[list[int]]]:
    labels = [(0, x) for x in B.left] + [(1, y) for y in B.right]
    pos = {lab: t for t, lab in enumerate(labels)}
    adj: list[list[int]] = [[] for _ in labels]
    for x in B.left:
        for y in B.adj[x]:
            a, b = pos[(0, x)], pos[(1, y)]
            adj[a].append(b)
            adj[b].append(a)
    return labels, adj


def _rotation_extension(adj: list[list[int]], rng: random.Random, max_steps: int) -> list[int] | None:
    """Randomized path extension with Posa rotations; returns a Hamiltonian cycle or None."""
    N = len(adj)
    adjset = [set(a) for a in adj]
    start = rng.randrange(N)
    path = [start]
    pos = [-1] * N
    pos[start] = 0
    for _ in range(max_steps):
        v = path[-1]
        L = len(path)
        if L == N and path[0] in adjset[v]:
            return path
        ext = [u for u in adj[v] if pos[u] < 0]
        if ext:
            u = rng.choice(ext)
            pos[u] = L
            path.append(u)
            continue
        if L < N and L > 2 and path[0] in adjset[v]:
            # the path closes into a cycle; reopen it at a vertex with an outside neighbour
            offs = rng.randrange(L)
            for s in range(L):
                t = (s + offs) % L
                if any(pos[u] < 0 for u in adj[path[t]]):
                    path = path[t + 1:] + path[:t + 1]
                    for q, w in enumerate(path):
                        pos[w] = q
                    break
            else:
                return None  # cycle is a whole component of a disconnected graph
            continue
        cands = [pos[u] for u in adj[v] if pos[u] < L - 2]
        if not cands:
            return None
        j = rng.choice(cands)
        path[j + 1:] = path[:j:-1]
        for q in range(j + 1, L):
            pos[path[q]] = q
    return None


def _path_dp(A: np.ndarray) -> np.ndarray:
    """dp[mask, v] = number of paths from vertex 0 covering ``mask`` and ending at v."""
    N = A.shape[0]
    dp = np.zeros((1 << N, N), dtype=np.int64)
    dp[1, 0] = 1
    bits = 1 << np.arange(N, dtype=np.int64)
    idx = np.arange(N)
    for mask in range(1, 1 << N, 2):
        row = dp[mask]
        if not row.any():
            continue
        contrib = row @ A
        ok = ((mask & bits) == 0) & (contrib != 0)
        if ok.any():
            dp[mask | bits[ok], idx[ok]] += contrib[ok]
    return dp


def _adjacency_matrix(adj: list[list[int]]) -> np.ndarray:
    N = len(adj)
    A = np.zeros((N, N), dtype=np.int64)
    for v, ns in enumerate(adj):
        A[v, ns] = 1
    return A


def _exhaustive_cycle(adj: list[list[int]]) -> list[int] | None:
    A = _adjacency_matrix(adj)
    N = len(adj)
    dp = _path_dp(A)
    full = (1 << N) - 1
    ends = [v for v in range(N) if dp[full, v] and A[v, 0]]
    if not ends:
        return None
    v, mask = ends[0], full
    path = [v]
    while mask != 1:
        prev_mask = mask ^ (1 << v)
        v = next(w for w in range(N) if dp[prev_mask, w] and A[w, v])
        mask = prev_mask
        path.append(v)
    return path[::-1]


def hamiltonian_cycle(B: BipartiteGraph, seed=None, max_steps: int | None = None,
                      restarts: int = 20, exhaustive_limit: int = 20) -> CycleSeq:
    """Find a Hamiltonian cycle of a balanced bipartite graph.

    Randomized rotation-extension runs first (``restarts`` attempts of
    ``max_steps`` moves each); graphs with at most ``exhaustive_limit`` vertices
    then fall back to an exact subset DP, so a failure there is a proof.
    """
    m = len(B.left)
    if m != len(B.right) or m < 2:
        raise ValueError("need a balanced bipartite graph with m >= 2")
    rng = _rng(seed)
    labels, adj = _index_graph(B)
    N = len(labels)
    if min(len(a) for a in adj) < 2:
        raise NoHamiltonianCycle("a vertex has degree < 2", proven=True)
    if len(connected_components({v: adj[v] for v in range(N)})) > 1:
        raise NoHamiltonianCycle("graph is disconnected", proven=True)
    if max_steps is None:
        max_steps = 50 * N * N
    for _ in range(restarts):
        path = _rotation_extension(adj, rng, max_steps)
        if path is not None:
            break
    else:
        if N > exhaustive_limit:
            raise NoHamiltonianCycle(f"no Hamiltonian cycle found within budget ({N} vertices)",
                                     proven=False)
        path = _exhaustive_cycle(adj)
        if path is None:
            raise NoHamiltonianCycle("exhaustive search: no Hamiltonian cycle", proven=True)
    # canonical rotation: start at a left vertex
    if labels[path[0]][0] != 0:
        path = path[1:] + path[:1]
    return CycleSeq(tuple(labels[v] for v in path))


def count_hamiltonian_cycles(B: BipartiteGraph, limit: int = 20) -> int:
    """Exact number of undirected Hamiltonian cycles (subset DP, |V| <= ``limit``)."""
    N = len(B.left) + len(B.right)
    if N > limit:
        raise ValueError(f"graph has {N} vertices, over the budget of {limit}")
    if len(B.left) != len(B.right) or N < 4:
        return 0
    _, adj = _index_graph(B)
    A = _adjacency_matrix(adj)
    dp = _path_dp(A)
    closed = int(dp[(1 << N) - 1] @ A[:, 0])
    return closed // 2
