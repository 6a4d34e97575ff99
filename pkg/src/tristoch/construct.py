"""Bottom-up construction of half-integral vertices of Delta_n.

The array is filled layer by layer.  Internally rows, columns and layers are
0-based and the shaft-sum matrix ``D`` is kept in half-units (0, 1, 2 stand
for 0, 1/2, 1); everything that leaves the module is 1-based.

Stages
  1. layers 1..k: per layer one Hamiltonian cycle in the north-west block P
     and one in the south-east block Q, each spliced with a standard cycle on
     a reserved diagonal minor;
  2. layer k+1: one cycle through the whole main diagonal, gluing stage 1;
  3. layer k+2: a bichromatic perfect matching on the 1/2-cells plus a perfect
     matching on the 0-cells that closes an odd cycle;
  4. layers k+3..n-k: one matching on 0-cells and one on 1/2-cells;
  5. layers n-k+1..n: two disjoint matchings on the 1/2-cells.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .arrays import HalfArray, validate_half_array
from .certify import VertexCertificate, certify_half_vertex
from .graphs import (BipartiteGraph, NoHamiltonianCycle, NoPerfectMatching, OddCycleWitness,
                     TwoColoring, build_line_graph, connected_components, hamiltonian_cycle,
                     matching_through_edge, moon_moser_holds, perfect_matching, two_color)

GUARANTEED_N = 114
MIN_N = 24  # floor(n/2) >= 12 is needed to tile the diagonal with 4s and 5s


class ConstructionError(RuntimeError):
    """Internal failure: an invariant the construction relies on was violated."""

    def __init__(self, stage: int, reason: str):
        super().__init__(f"stage {stage}: {reason}")
        self.stage = stage
        self.reason = reason


class ConstructionInfeasible(ConstructionError):
    """The construction could not be completed for this n (below the guarantee)."""


# -- minor plan ------------------------------------------------------------------

def frob_decompose(N: int) -> tuple[int, int]:
    """(a, b) with 5a + 4b = N and 0 <= b <= 4, taking the smallest such b."""
    if N < 12:
        raise ValueError("N must be >= 12")
    for b in range(5):
        if (N - 4 * b) % 5 == 0 and N >= 4 * b:
            return (N - 4 * b) // 5, b
    raise AssertionError("unreachable for N >= 12")


@dataclass(frozen=True)
class MinorPlan:
    """Diagonal minor sizes for P (``c``) and Q (``cq``) and their start offsets."""

    n: int
    c: tuple[int, ...]
    cq: tuple[int, ...]
    offsets: tuple[int, ...]
    offsets_q: tuple[int, ...]
    notes: tuple[str, ...] = ()

    @property
    def k(self) -> int:
        return len(self.c)

    def blocks(self, side: str) -> list[range]:
        sizes, offs = (self.c, self.offsets) if side == "P" else (self.cq, self.offsets_q)
        return [range(o, o + s) for o, s in zip(offs, sizes)]


def minor_plan(n: int) -> MinorPlan:
    m = n // 2
    mq = n - m
    if m < 12:
        raise ConstructionInfeasible(1, f"n={n}: floor(n/2)={m} < 12, the diagonal cannot be tiled")
    notes = []
    if m % 5 == 0 and n >= 40:
        c = [4] * 5 + [5] * ((m - 20) // 5)
        literal_q = [4] * 4 + [5] * (len(c) - 4)
        if sum(literal_q) == mq:
            cq = literal_q
        else:
            # the stated Q override sums to floor(n/2)+1, which only fits odd n
            notes.append(f"literal Q override sums to {sum(literal_q)} != {mq}; using c' = c")
            cq = list(c)
    else:
        a, b = frob_decompose(m)
        c = [4] * b + [5] * a
        cq = list(c)
        if n % 2:
            cq[0] += 1
    if sum(c) != m or sum(cq) != mq or len(c) != len(cq):
        raise ConstructionError(1, f"minor plan does not tile the diagonal: {c} / {cq}")
    offs = tuple(int(v) for v in np.cumsum([0] + c[:-1]))
    offs_q = tuple(m + int(v) for v in np.cumsum([0] + cq[:-1]))
    return MinorPlan(n, tuple(c), tuple(cq), offs, offs_q, tuple(notes))


def standard_cycle(t: int) -> list[list]:
    """t x t matrix with 1/2 on the diagonal, the superdiagonal and at (t, 1)."""
    from fractions import Fraction
    if t < 3:
        raise ValueError("standard cycle needs t >= 3")
    Z = [[Fraction(0)] * t for _ in range(t)]
    for a, b in _standard_cycle_cells(range(t)):
        Z[a][b] = Fraction(1, 2)
    return Z


def _standard_cycle_cells(block: range) -> list[tuple[int, int]]:
    lo, hi = block[0], block[-1]
    cells = [(a, a) for a in block] + [(a, a + 1) for a in block[:-1]] + [(hi, lo)]
    return sorted(cells)


# -- build state -------------------------------------------------------------------

@dataclass
class StageLog:
    """Ordered record of every choice made; :func:`replay` rebuilds the array from it."""

    n: int
    entries: list = field(default_factory=list)

    def add(self, stage: int, layer: int, choice: str, payload) -> None:
        self.entries.append({"stage": stage, "layer": layer, "choice": choice, "payload": payload})

    def to_json_obj(self) -> dict:
        return {"n": self.n, "entries": self.entries}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "StageLog":
        return cls(obj["n"], list(obj["entries"]))


def _cells1(cells) -> list[list[int]]:
    return [[x + 1, y + 1] for x, y in sorted(cells)]


class _State:
    """Evolving array: per-layer cell lists plus D in half-units."""

    def __init__(self, n: int):
        self.n = n
        self.D = np.zeros((n, n), dtype=np.int8)
        self.layers: list[list[tuple[int, int]]] = []
        self.shaft_layers: dict[tuple[int, int], list[int]] = {}

    def add_layer(self, cells, stage: int) -> None:
        n = self.n
        cells = sorted(set(cells))
        rows = np.bincount([x for x, _ in cells], minlength=n)
        cols = np.bincount([y for _, y in cells], minlength=n)
        if len(cells) != 2 * n or (rows != 2).any() or (cols != 2).any():
            raise ConstructionError(stage, f"layer {len(self.layers) + 1} does not have two cells per row/column")
        t = len(self.layers)
        for x, y in cells:
            self.D[x, y] += 1
            self.shaft_layers.setdefault((x, y), []).append(t)
        if self.D.max() > 2:
            raise ConstructionError(stage, f"a shaft exceeds 1 after layer {t + 1}")
        self.layers.append(cells)

    def cells1(self, upto: int | None = None) -> list[tuple[int, int, int]]:
        layers = self.layers if upto is None else self.layers[:upto]
        return [(x + 1, y + 1, t + 1) for t, cells in enumerate(layers) for x, y in cells]

    def cell_graphs(self, rows=None, cols=None) -> tuple[BipartiteGraph, BipartiteGraph]:
        rows = range(self.n) if rows is None else rows
        cols = range(self.n) if cols is None else cols
        zero, half = [], []
        for x in rows:
            for y in cols:
                v = self.D[x, y]
                if v == 0:
                    zero.append((x, y))
                elif v == 1:
                    half.append((x, y))
        return (BipartiteGraph.from_edges(rows, cols, zero),
                BipartiteGraph.from_edges(rows, cols, half))

    def half_array(self) -> HalfArray:
        return HalfArray(self.n, frozenset(self.cells1()))


@dataclass(frozen=True)
class Check:
    stage: int
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ConstructionResult:
    array: HalfArray
    log: StageLog
    certificate: VertexCertificate
    plan: MinorPlan
    checks: list[Check]
    odd_cycle: OddCycleWitness | None = None


class _Checker:
    def __init__(self):
        self.checks: list[Check] = []

    def __call__(self, stage: int, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append(Check(stage, name, bool(ok), detail))
        if not ok:
            raise ConstructionError(stage, f"invariant failed: {name} {detail}".strip())


# -- stage 1 -------------------------------------------------------------------------

def _stage1_side(st: _State, plan: MinorPlan, side: str, i: int, rng, log: StageLog,
                 check: _Checker, ham_steps: int | None) -> list[tuple[int, int]]:
    blocks = plan.blocks(side)
    lo = blocks[0][0]
    hi = blocks[-1][-1] + 1
    minor_of = {x: j for j, blk in enumerate(blocks) for x in blk}
    Ci = blocks[i]
    Z = _standard_cycle_cells(Ci)
    if any(st.D[a, b] for a, b in Z):
        raise ConstructionError(1, f"minor C_{i + 1} of {side} is not empty")
    S = [x for x in range(lo, hi) if x not in Ci]
    edges = [(x, y) for x in S for y in S
             if st.D[x, y] == 0 and minor_of[x] != minor_of[y]]
    G = BipartiteGraph.from_edges(S, S, edges)
    mm = moon_moser_holds(G)
    try:
        cyc = hamiltonian_cycle(G, rng, max_steps=ham_steps, restarts=5)
    except NoHamiltonianCycle as exc:
        raise ConstructionInfeasible(1, f"layer {i + 1} of {side}: {exc}") from exc
    L = cyc.pairs()
    log.add(1, i + 1, "hamiltonian_cycle",
            {"side": side, "moon_moser": mm, "min_degree": min(G.degrees()),
             "cells": [[x + 1, y + 1] for x, y in L]})
    pair = merge_switch(Z, L, st.D)
    if pair is None:
        raise ConstructionError(1, f"no merge switch for layer {i + 1} of {side}")
    x1, y1, x2, y2 = pair
    log.add(1, i + 1, "switch", {"side": side, "x1": x1 + 1, "y1": y1 + 1, "x2": x2 + 1, "y2": y2 + 1})
    cells = apply_switch(set(Z) | set(L), pair)
    comps = connected_components(build_line_graph((x + 1, y + 1, 1) for x, y in cells).adjacency)
    check(1, f"layer {i + 1} {side} is a single cycle", len(comps) == 1 and len(cells) == 2 * (hi - lo))
    return sorted(cells)


def merge_switch(Z, L, D) -> tuple[int, int, int, int] | None:
    """First (x1, y1, x2, y2) with (x1, y1) an off-diagonal cell of the standard
    cycle ``Z``, (x2, y2) on ``L`` (cycle order) and both cross cells 0-cells of D."""
    for x1, y1 in Z:
        if x1 == y1:
            continue
        for x2, y2 in L:
            if D[x1, y2] == 0 and D[x2, y1] == 0:
                return x1, y1, x2, y2
    return None


def apply_switch(cells, pair) -> set:
    """Move the two 1/2-entries onto the crossing cells; row and column sums are kept."""
    x1, y1, x2, y2 = pair
    return set(cells) - {(x1, y1), (x2, y2)} | {(x1, y2), (x2, y1)}


def _stage1(st, plan, rng, log, check, ham_steps):
    k = plan.k
    for i in range(k):
        cells = []
        for side in ("P", "Q"):
            cells += _stage1_side(st, plan, side, i, rng, log, check, ham_steps)
        st.add_layer(cells, 1)
    n, m = st.n, st.n // 2
    D = st.D
    quadrants_ok = not D[:m, m:].any() and not D[m:, :m].any()
    check(1, "D^k entries in {0, 1/2}", D.max() <= 1)
    check(1, "D^k diagonal all 1/2", bool((np.diag(D) == 1).all()))
    check(1, "NE and SW empty through layer k", quadrants_ok)


# -- stage 2 -------------------------------------------------------------------------

def _glue_permutation(st: _State) -> tuple[dict[int, int], tuple[int, int] | None]:
    """sigma with cells (r, sigma(r)) completing the diagonal into one 2n-cycle."""
    n = st.n
    m = n // 2
    if n % 2 == 0:
        sigma = {i: i + m for i in range(m)}
        sigma.update({m + i: i + 1 for i in range(m - 1)})
        sigma[n - 1] = 0
        return sigma, None
    q_cell = next(((r, c) for r in range(m, n) for c in range(m, n)
                   if r != c and st.D[r, c] == 0), None)
    if q_cell is None:
        raise ConstructionError(2, "no off-diagonal 0-cell in Q")
    r_star, c_star = q_cell
    others = [b for b in range(m, n) if b not in q_cell]
    sigma = {r_star: c_star, c_star: 0}
    for j in range(m - 1):
        sigma[j] = others[j]
        sigma[others[j]] = j + 1
    sigma[m - 1] = r_star
    return sigma, q_cell


def _stage2(st, plan, log, check):
    n, k = st.n, plan.k
    sigma, q_cell = _glue_permutation(st)
    # sigma must be a single n-cycle for the layer to be one 2n-cycle
    seen, v = set(), 0
    while v not in seen:
        seen.add(v)
        v = sigma[v]
    check(2, "gluing permutation is one n-cycle", len(seen) == n and sorted(sigma.values()) == list(range(n)))
    cells = [(i, i) for i in range(n)] + [(r, s) for r, s in sigma.items()]
    if any(st.D[r, s] for r, s in sigma.items()):
        raise ConstructionError(2, "gluing cell is not a 0-cell")
    log.add(2, k + 1, "glue", {"cells": _cells1(cells),
                               "q_cell": None if q_cell is None else [q_cell[0] + 1, q_cell[1] + 1]})
    st.add_layer(cells, 2)
    D = st.D
    check(2, "D diagonal all 1", bool((np.diag(D) == 2).all()))
    ones = (D == 2).sum(axis=1)
    halves = (D == 1).sum(axis=1)
    check(2, "rows of D^{k+1}: one 1-cell, 2k 1/2-cells",
          bool((ones == 1).all() and (halves == 2 * k).all()))
    U = build_line_graph(st.cells1())
    comps = connected_components(U)
    check(2, "U_{k+1} connected", len(comps) == 1)
    col = two_color(U)
    check(2, "U_{k+1} bipartite", isinstance(col, TwoColoring))
    return U, col


# -- stage 3 -------------------------------------------------------------------------

def color_half_cells(st: _State, coloring: TwoColoring) -> dict[tuple[int, int], int]:
    """Color each 1/2-cell of D by the color of the single support cell in its shaft."""
    out = {}
    for x, y in zip(*np.nonzero(st.D == 1)):
        (t,) = st.shaft_layers[(int(x), int(y))]
        out[(int(x), int(y))] = coloring.colors[(int(x) + 1, int(y) + 1, t + 1)]
    return out


def _bichromatic_matching(Gbar, colors, rng, retries, log, layer):
    for attempt in range(1, retries + 1):
        M = perfect_matching(Gbar, rng)
        if len({colors[e] for e in M}) == 2:
            log.add(3, layer, "pbar", {"cells": _cells1(M), "attempts": attempt, "fallback": None})
            return M
    for want in (0, 1):
        e = min(e for e in Gbar.edges() if colors[e] == want)
        M = matching_through_edge(Gbar, e, rng)
        if len({colors[e] for e in M}) == 2:
            log.add(3, layer, "pbar", {"cells": _cells1(M), "attempts": retries, "fallback": want})
            return M
    raise ConstructionError(3, "no bichromatic perfect matching found")


def _path_avoiding(adj, src, dst, banned) -> list:
    prev = {src: None}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        if v == dst:
            break
        for u in adj[v]:
            if u not in prev and u not in banned:
                prev[u] = v
                queue.append(u)
    if dst not in prev:
        return []
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path[::-1]


def _stage3(st, plan, coloring, rng, retries, log, check):
    n, k = st.n, plan.k
    layer = k + 2
    colors = color_half_cells(st, coloring)
    for axis in (0, 1):
        per_line = [[0, 0] for _ in range(n)]
        for cell, c in colors.items():
            per_line[cell[axis]][c] += 1
        check(3, f"1/2-cells evenly colored per {'row' if axis == 0 else 'column'}",
              all(a == k and b == k for a, b in per_line))
    G, Gbar = st.cell_graphs()
    check(3, "G^{k+1} regular of degree n-2k-1", G.regular_degree() == n - 2 * k - 1)
    check(3, "Gbar^{k+1} regular of degree 2k", Gbar.regular_degree() == 2 * k)
    Pbar = _bichromatic_matching(Gbar, colors, rng, retries, log, layer)
    row_nb = {x: y for x, y in Pbar}
    col_nb = {y: x for x, y in Pbar}
    crossing = [(x, y) for x, y in G.edges()
                if colors[(x, row_nb[x])] != colors[(col_nb[y], y)]]
    if not crossing:
        raise ConstructionError(3, "no 0-cell with P-bar neighbours of distinct colors")
    x, y = crossing[rng.randrange(len(crossing))]
    log.add(3, layer, "crossing_cell", [x + 1, y + 1])
    Pm = matching_through_edge(G, (x, y), rng)
    log.add(3, layer, "p", _cells1(Pm))
    st.add_layer(list(Pbar) + list(Pm), 3)
    # odd closed walk: crossing cell -> row neighbour ~> column neighbour -> crossing cell
    U = build_line_graph(st.cells1())
    c = (x + 1, y + 1, layer)
    a = (x + 1, row_nb[x] + 1, layer)
    b = (col_nb[y] + 1, y + 1, layer)
    banned = {(p + 1, q + 1, layer) for p, q in Pm}
    path = _path_avoiding(U.adjacency, a, b, banned)
    witness = OddCycleWitness(tuple([c] + path))
    log.add(3, layer, "odd_cycle", [list(v) for v in witness.cycle])
    check(3, "odd-cycle witness through the crossing cell", bool(path) and witness.verify(U))
    check(3, "U_{k+2} connected", len(connected_components(U)) == 1)
    check(3, "U_{k+2} non-bipartite", isinstance(two_color(U), OddCycleWitness))
    G, Gbar = st.cell_graphs()
    check(3, "G^{k+2} regular of degree n-2k-2", G.regular_degree() == n - 2 * k - 2
          or (n - 2 * k - 2 == 0 and G.num_edges == 0))
    check(3, "Gbar^{k+2} regular of degree 2k", Gbar.regular_degree() == 2 * k)
    return witness


# -- stages 4 and 5 ---------------------------------------------------------------------

def _matching(B, rng, stage):
    try:
        return perfect_matching(B, rng)
    except NoPerfectMatching as exc:
        raise ConstructionError(stage, f"matching failed, Hall violator {sorted(exc.hall_violator)}") from exc


def _stage4(st, plan, rng, log, check):
    n, k = st.n, plan.k
    for t, layer in enumerate(range(k + 3, n - k + 1)):
        G, Gbar = st.cell_graphs()
        check(4, f"layer {layer}: G regular of degree {n - 2 * k - 2 - t}",
              G.regular_degree() == n - 2 * k - 2 - t)
        check(4, f"layer {layer}: Gbar regular of degree 2k", Gbar.regular_degree() == 2 * k)
        M = _matching(G, rng, 4)
        Mb = _matching(Gbar, rng, 4)
        log.add(4, layer, "matching_zero", _cells1(M))
        log.add(4, layer, "matching_half", _cells1(Mb))
        st.add_layer(list(M) + list(Mb), 4)
    check(4, "no 0-cells after layer n-k", not (st.D == 0).any())


def _stage5(st, plan, rng, log, check):
    n, k = st.n, plan.k
    for t, layer in enumerate(range(n - k + 1, n + 1)):
        _, Gbar = st.cell_graphs()
        check(5, f"layer {layer}: Gbar regular of degree {2 * k - 2 * t}",
              Gbar.regular_degree() == 2 * k - 2 * t)
        M1 = _matching(Gbar, rng, 5)
        M2 = _matching(Gbar.without_edges(M1), rng, 5)
        log.add(5, layer, "matching_half_1", _cells1(M1))
        log.add(5, layer, "matching_half_2", _cells1(M2))
        st.add_layer(list(M1) + list(M2), 5)
    check(5, "D^n is all ones", bool((st.D == 2).all()))


# -- entry points ----------------------------------------------------------------------

def construct_vertex(n: int, seed: int = 0, retries: int = 64,
                     ham_steps: int | None = None) -> ConstructionResult:
    """Build a vertex of Delta_n with entries in {0, 1/2}.

    Success is guaranteed for n >= 114; smaller n (down to 24) are attempted
    and raise :class:`ConstructionInfeasible` when a stage cannot be completed.
    """
    if n < MIN_N:
        raise ConstructionInfeasible(1, f"n={n} < {MIN_N}: diagonal minors need floor(n/2) >= 12")
    rng = random.Random(seed)
    plan = minor_plan(n)
    log = StageLog(n)
    log.add(0, 0, "plan", {"c": list(plan.c), "c_q": list(plan.cq), "k": plan.k, "notes": list(plan.notes)})
    st = _State(n)
    check = _Checker()
    _stage1(st, plan, rng, log, check, ham_steps)
    U, coloring = _stage2(st, plan, log, check)
    witness = _stage3(st, plan, coloring, rng, retries, log, check)
    _stage4(st, plan, rng, log, check)
    _stage5(st, plan, rng, log, check)
    H = st.half_array()
    check(5, "result is in H_n", validate_half_array(H) is True)
    cert = certify_half_vertex(H)
    check(5, "graph certificate: vertex", cert.is_vertex)
    return ConstructionResult(H, log, cert, plan, check.checks, witness)


def replay(log: StageLog) -> HalfArray:
    """Rebuild the array from a stage log, re-validating every layer as it is placed."""
    n = log.n
    st = _State(n)
    by_layer: dict[int, list] = {}
    for e in log.entries:
        by_layer.setdefault(e["layer"], []).append(e)
    plan_entry = by_layer[0][0]["payload"]
    c, cq = plan_entry["c"], plan_entry["c_q"]
    m = n // 2
    offs = np.cumsum([0] + c[:-1])
    offs_q = m + np.cumsum([0] + cq[:-1])
    for layer in range(1, n + 1):
        entries = by_layer.get(layer, [])
        stage = entries[0]["stage"] if entries else 0
        cells: list[tuple[int, int]] = []
        if stage == 1:
            i = layer - 1
            for side in ("P", "Q"):
                blk = range(int(offs[i]), int(offs[i]) + c[i]) if side == "P" else \
                    range(int(offs_q[i]), int(offs_q[i]) + cq[i])
                L = next(e["payload"]["cells"] for e in entries
                         if e["choice"] == "hamiltonian_cycle" and e["payload"]["side"] == side)
                sw = next(e["payload"] for e in entries if e["choice"] == "switch" and e["payload"]["side"] == side)
                part = set(_standard_cycle_cells(blk)) | {(x - 1, y - 1) for x, y in L}
                x1, y1, x2, y2 = (sw[key] - 1 for key in ("x1", "y1", "x2", "y2"))
                if st.D[x1, y2] or st.D[x2, y1] or (x1, y1) not in part or (x2, y2) not in part:
                    raise ConstructionError(1, f"logged switch on layer {layer} is not valid")
                part = part - {(x1, y1), (x2, y2)} | {(x1, y2), (x2, y1)}
                cells += sorted(part)
        else:
            for e in entries:
                if e["choice"] in ("glue", "matching_zero", "matching_half",
                                   "matching_half_1", "matching_half_2"):
                    payload = e["payload"]["cells"] if e["choice"] == "glue" else e["payload"]
                    cells += [(x - 1, y - 1) for x, y in payload]
                elif e["choice"] == "pbar":
                    cells += [(x - 1, y - 1) for x, y in e["payload"]["cells"]]
                elif e["choice"] == "p":
                    cells += [(x - 1, y - 1) for x, y in e["payload"]]
        if stage in (2, 3, 4, 5):
            # every new cell must sit on a 0-cell or a 1/2-cell of the current D
            if any(st.D[x, y] >= 2 for x, y in cells):
                raise ConstructionError(stage, f"logged layer {layer} overfills a shaft")
        st.add_layer(cells, stage)
    return st.half_array()
