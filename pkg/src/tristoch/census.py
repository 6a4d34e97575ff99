"""Exact small-scale counts and finite checks of the counting bounds.

Transcendental quantities are evaluated with mpmath interval arithmetic, so a
strict inequality is reported as holding only when the whole interval lies on
the correct side.
"""
from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, permutations

import numpy as np
from mpmath import iv, mp

from .arrays import Cube, HalfArray, all_lines, lines_through, validate_tristochastic
from .certify import certify_half_vertex, certify_support_rank, solve_on_support
from .graphs import BipartiteGraph, count_hamiltonian_cycles
from .linalg import eliminate

PREC = 128  # bits carried by interval evaluations


@contextmanager
def _iv_prec(bits: int):
    old = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = old


def _lo(x) -> mp.mpf:
    return mp.make_mpf(x._mpi_[0])


def _hi(x) -> mp.mpf:
    return mp.make_mpf(x._mpi_[1])


# -- permanents ----------------------------------------------------------------------

def permanent(M, limit: int = 24) -> int:
    """Exact permanent by Ryser's inclusion-exclusion with a Gray-code walk."""
    a = np.asarray(M, dtype=object)
    m = a.shape[0]
    if a.shape != (m, m):
        raise ValueError("matrix must be square")
    if m > limit:
        raise ValueError(f"m={m} over the budget of {limit}")
    if m == 0:
        return 1
    cols = [[int(a[i, j]) for i in range(m)] for j in range(m)]
    rowsum = [0] * m
    total = 0
    in_set = [False] * m
    size = 0
    for g in range(1, 1 << m):
        j = (g & -g).bit_length() - 1  # column flipped by the Gray code
        sign = -1 if in_set[j] else 1
        in_set[j] = not in_set[j]
        size += sign
        cj = cols[j]
        for i in range(m):
            rowsum[i] += sign * cj[i]
        p = math.prod(rowsum)
        total += -p if size % 2 else p
    return total if m % 2 == 0 else -total


def regular_degree(M) -> int | None:
    a = np.asarray(M, dtype=np.int64)
    r, c = set(a.sum(axis=1).tolist()), set(a.sum(axis=0).tolist())
    return r.pop() if len(r) == 1 and r == c else None


@dataclass(frozen=True)
class SandwichCheck:
    lower: float
    upper: float
    value: int
    holds: bool


def permanent_sandwich_check(M, d: int | None = None) -> SandwichCheck:
    """(d/e)^m < per(M) < (d/e)^m (ed)^(m/d) for a d-regular 0/1 bi-adjacency M."""
    a = np.asarray(M, dtype=np.int64)
    deg = regular_degree(a)
    if deg is None or deg < 1 or (d is not None and d != deg):
        raise ValueError("M is not the bi-adjacency of a d-regular bipartite graph")
    m = a.shape[0]
    p = permanent(a)
    with _iv_prec(PREC):
        lower = (iv.mpf(deg) / iv.e) ** m
        upper = lower * (iv.e * deg) ** (iv.mpf(m) / deg)
        holds = _hi(lower) < p < _lo(upper)
        return SandwichCheck(float(_lo(lower)), float(_lo(upper)), p, bool(holds))


def stirling_sandwich_check(m: int) -> bool:
    """(m/e)^m < m! < e m (m/e)^m, decided with interval arithmetic."""
    if m < 2:
        raise ValueError("m must be >= 2")
    f = math.factorial(m)
    with _iv_prec(PREC):
        base = (iv.mpf(m) / iv.e) ** m
        upper = iv.e * m * base
        return bool(_hi(base) < f < _lo(upper))


# -- Hamiltonian cycle counts --------------------------------------------------------

@dataclass(frozen=True)
class CycleCountCheck:
    vertices: int
    min_degree: int
    count: int
    bound: float
    holds: bool


def cuckler_kahn_check(B: BipartiteGraph, slack: float = 1.0) -> CycleCountCheck:
    """Exact Hamiltonian cycle count against (d / (e + slack))^|V|.

    ``slack`` stands in for the vanishing error term of the asymptotic bound.
    """
    N = len(B.left) + len(B.right)
    d = min(B.degrees())
    if 4 * d < N:
        raise ValueError("minimum degree is below |V|/4")
    count = count_hamiltonian_cycles(B)
    with _iv_prec(PREC):
        bound = (iv.mpf(d) / (iv.e + iv.mpf(slack))) ** N
        holds = count > _hi(bound)
        return CycleCountCheck(N, d, count, float(_hi(bound)), bool(holds))


# -- exhaustive enumerations -----------------------------------------------------------

def _layer_patterns(n: int) -> list[np.ndarray]:
    """All n x n 0/1 matrices with every row and column sum equal to 2."""
    if n < 2:
        return []
    choices = list(combinations(range(n), 2))
    out = []

    def rec(i, colsum, rows):
        if i == n:
            if all(c == 2 for c in colsum):
                M = np.zeros((n, n), dtype=np.int8)
                for r, (a, b) in enumerate(rows):
                    M[r, a] = M[r, b] = 1
                out.append(M)
            return
        for a, b in choices:
            if colsum[a] < 2 and colsum[b] < 2:
                colsum[a] += 1
                colsum[b] += 1
                rec(i + 1, colsum, rows + [(a, b)])
                colsum[a] -= 1
                colsum[b] -= 1

    rec(0, [0] * n, [])
    return out


@dataclass(frozen=True)
class TaggedHalfArray:
    array: HalfArray
    graph_vertex: bool
    rank_vertex: bool

    @property
    def agree(self) -> bool:
        return self.graph_vertex == self.rank_vertex


def enumerate_H(n: int, certify: bool = True) -> list[TaggedHalfArray] | list[HalfArray]:
    """Every member of H_n (n <= 4), tagged by both vertex certifiers."""
    if n > 4:
        raise ValueError("enumerate_H is limited to n <= 4")
    if n < 2:
        return []
    pats = _layer_patterns(n)
    found: list[HalfArray] = []

    def rec(depth, D, chosen):
        if depth == n - 1:
            last = 2 - D
            if last.min() >= 0 and last.max() <= 1 and (last.sum(0) == 2).all() and (last.sum(1) == 2).all():
                layers = chosen + [last]
                cells = frozenset((int(i) + 1, int(j) + 1, t + 1)
                                  for t, L in enumerate(layers) for i, j in zip(*np.nonzero(L)))
                found.append(HalfArray(n, cells))
            return
        for P in pats:
            E = D + P
            if E.max() <= 2:
                rec(depth + 1, E, chosen + [P])

    rec(0, np.zeros((n, n), dtype=np.int8), [])
    if not certify:
        return found
    return [TaggedHalfArray(h, certify_half_vertex(h).is_vertex, certify_support_rank(h).is_vertex)
            for h in found]


def _kernel_basis(n: int) -> tuple[list, np.ndarray]:
    """Cells and a float basis of {x : all line sums of x are 0} (exact elimination)."""
    cells = [(i, j, k) for i in range(1, n + 1) for j in range(1, n + 1) for k in range(1, n + 1)]
    by_line: dict = {}
    for c in cells:
        for line in lines_through(c):
            by_line.setdefault(line, {})[c] = 1
    rows = [by_line[line] for line in all_lines(n)]
    elim = eliminate(rows, cells)
    vecs = [elim.kernel_vector(f) for f in elim.free_columns]
    K = np.array([[float(v[c]) for v in vecs] for c in cells]).reshape(len(cells), len(vecs))
    return cells, K


@lru_cache(maxsize=None)
def enumerate_vertices_exhaustive(n: int) -> tuple[Cube, ...]:
    """All vertices of Delta_n for n <= 3.

    Points of the polytope are 1/n + K u with K a kernel basis of dimension
    d = (n-1)^3.  Every choice of d cells whose vanishing pins u down is a
    candidate; feasible candidates give supports, each of which is re-solved
    exactly and certified by the support-rank test.
    """
    if n > 3:
        raise ValueError("exhaustive vertex enumeration is limited to n <= 3")
    if n == 1:
        return (Cube(1, {(1, 1, 1): 1}),)
    cells, K = _kernel_basis(n)
    d = K.shape[1]
    x0 = 1.0 / n
    supports = set()
    combos = combinations(range(len(cells)), d)
    chunk = 200_000
    while True:
        idx = np.fromiter((i for c in _take(combos, chunk) for i in c), dtype=np.int64)
        if idx.size == 0:
            break
        idx = idx.reshape(-1, d)
        A = K[idx]  # (batch, d, d): rows of K for the chosen cells
        det = np.linalg.det(A)
        ok = np.abs(det) > 1e-9
        A, sel = A[ok], idx[ok]
        u = np.linalg.solve(A, np.full((len(A), d, 1), -x0))[..., 0]
        X = x0 + u @ K.T
        feasible = (X > -1e-9).all(axis=1)
        for row in X[feasible]:
            supports.add(tuple(np.nonzero(row > 1e-9)[0]))
    out = []
    for sup in sorted(supports):
        supp = [cells[t] for t in sup]
        sol = solve_on_support(n, supp)
        if sol is None or any(v <= 0 for v in sol.values()):
            continue
        cube = Cube(n, sol)
        if validate_tristochastic(cube) is True and certify_support_rank(cube).is_vertex:
            out.append(cube)
    return tuple(out)


def _take(it, k):
    for _ in range(k):
        try:
            yield next(it)
        except StopIteration:
            return


def latin_squares(n: int):
    """Generate every order-n Latin square (symbols 1..n) by backtracking."""
    if n > 5:
        raise ValueError("latin square enumeration is limited to n <= 5")
    grid = [[0] * n for _ in range(n)]
    row_used = [0] * n
    col_used = [0] * n
    full = (1 << n) - 1

    def rec(pos):
        if pos == n * n:
            yield [r[:] for r in grid]
            return
        i, j = divmod(pos, n)
        free = full & ~(row_used[i] | col_used[j])
        while free:
            bit = free & -free
            free ^= bit
            grid[i][j] = bit.bit_length()
            row_used[i] |= bit
            col_used[j] |= bit
            yield from rec(pos + 1)
            row_used[i] ^= bit
            col_used[j] ^= bit

    yield from rec(0)


def latin_square_count(n: int) -> int:
    """Exact count by backtracking with the first row fixed, times n!."""
    if n > 5:
        raise ValueError("latin_square_count is limited to n <= 5")
    if n == 0:
        return 1
    full = (1 << n) - 1
    row_used = [0] * n
    col_used = [0] * n
    for j in range(n):
        row_used[0] |= 1 << j
        col_used[j] |= 1 << j

    def rec(pos):
        if pos == n * n:
            return 1
        i, j = divmod(pos, n)
        free = full & ~(row_used[i] | col_used[j])
        total = 0
        while free:
            bit = free & -free
            free ^= bit
            row_used[i] |= bit
            col_used[j] |= bit
            total += rec(pos + 1)
            row_used[i] ^= bit
            col_used[j] ^= bit
        return total

    return rec(n) * math.factorial(n)


# -- choice ledger -----------------------------------------------------------------------

TARGETS = {"stage1": 0.2, "stage4": 1.6, "stage5": 0.2}


@dataclass
class ChoiceLedger:
    """Natural-log lower bounds on the number of choices per stage.

    Vanishing error terms are set to 0, so the exponents are heuristic.
    """

    n: int
    k: int
    log_choices: dict = field(default_factory=dict)
    entries: list = field(default_factory=list)
    heuristic: bool = True

    @property
    def log_total(self) -> float:
        return sum(self.log_choices.values())

    def exponent(self, stage: str | None = None) -> float:
        """log_n(choices) / n^2 for one stage or for the total."""
        v = self.log_total if stage is None else self.log_choices[stage]
        return v / (math.log(self.n) * self.n ** 2)

    def to_json_obj(self) -> dict:
        return {"n": self.n, "k": self.k, "heuristic": self.heuristic,
                "log_choices": self.log_choices,
                "exponents": {s: self.exponent(s) for s in self.log_choices},
                "targets": TARGETS, "total_exponent": self.exponent(),
                "entries": self.entries}


def choice_ledger(n: int, log=None) -> ChoiceLedger:
    """Stage-wise lower bounds on the number of available choices.

    Stage 1 uses (d / e)^|V| per Hamiltonian-cycle graph with d the degree
    bound floor(n/2) - c_i - 5 - 2i + 2 (or the recorded minimum degree when a
    build ``log`` is supplied); stages 4 and 5 use the permanent lower bounds.
    Every factor is clamped at 1.
    """
    from .construct import minor_plan
    plan = minor_plan(n)
    k = plan.k
    m, mq = n // 2, n - n // 2
    led = ChoiceLedger(n, k)
    recorded = {}
    if log is not None:
        for e in log.entries:
            if e["choice"] == "hamiltonian_cycle" and "min_degree" in e["payload"]:
                recorded[(e["layer"], e["payload"]["side"])] = e["payload"]["min_degree"]
    s1 = 0.0
    for i in range(1, k + 1):
        for side, size, c in (("P", m, plan.c[i - 1]), ("Q", mq, plan.cq[i - 1])):
            d = recorded.get((i, side), size - c - 5 - 2 * i + 2)
            verts = 2 * (size - c)
            term = max(0.0, verts * (math.log(d) - 1)) if d > 0 else 0.0
            led.entries.append({"stage": 1, "layer": i, "side": side, "degree": d,
                                "vertices": verts, "log_bound": term})
            s1 += term
    s4 = 0.0
    for i in range(k + 3, n - k + 1):
        t = n * (max(0.0, math.log(n - k + 1 - i) - 1) + max(0.0, math.log(2 * k) - 1))
        led.entries.append({"stage": 4, "layer": i, "log_bound": t})
        s4 += t
    s5 = n * max(0.0, math.lgamma(2 * k + 1) - 2 * k)
    led.entries.append({"stage": 5, "layers": [n - k + 1, n], "log_bound": s5})
    led.log_choices = {"stage1": s1, "stage4": s4, "stage5": s5}
    return led


# -- census report ------------------------------------------------------------------------

def random_regular_biadjacency(m: int, d: int, rng, switches: int | None = None) -> np.ndarray:
    """Random d-regular bi-adjacency: permuted circulant followed by 2x2 switches.

    A switch replaces edges (a,b),(c,e) by (a,e),(c,b) when both are absent,
    which keeps every degree fixed.
    """
    if not 1 <= d <= m:
        raise ValueError("need 1 <= d <= m")
    M = np.zeros((m, m), dtype=np.int64)
    for t in range(d):
        M[np.arange(m), (np.arange(m) + t) % m] = 1
    M = M[rng.permutation(m)][:, rng.permutation(m)]
    for _ in range(switches if switches is not None else 10 * m * m):
        a, c = rng.integers(m, size=2)
        b, e = rng.integers(m, size=2)
        if M[a, b] and M[c, e] and not M[a, e] and not M[c, b]:
            M[a, b] = M[c, e] = 0
            M[a, e] = M[c, b] = 1
    return M


def cycles_biadjacency(lengths: list[int]) -> np.ndarray:
    """Bi-adjacency of disjoint even cycles with 2*l vertices each (2-regular)."""
    m = sum(lengths)
    M = np.zeros((m, m), dtype=np.int64)
    off = 0
    for l in lengths:
        for t in range(l):
            M[off + t, off + t] = 1
            M[off + t, off + (t + 1) % l] = 1
        off += l
    if any(l == 1 for l in lengths):
        raise ValueError("cycle length 1 would need a double edge")
    return M


def brute_force_permanent(M) -> int:
    a = np.asarray(M)
    m = a.shape[0]
    return sum(all(a[i, p[i]] for i in range(m)) for p in permutations(range(m)))


__all__ = [
    "permanent", "permanent_sandwich_check", "stirling_sandwich_check", "cuckler_kahn_check",
    "enumerate_H", "enumerate_vertices_exhaustive", "latin_square_count", "latin_squares",
    "choice_ledger", "ChoiceLedger", "random_regular_biadjacency", "cycles_biadjacency",
    "brute_force_permanent", "regular_degree", "SandwichCheck", "CycleCountCheck", "TaggedHalfArray",
]
