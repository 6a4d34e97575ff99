"""Vertices of Delta_n from random linear objectives.

A floating-point simplex finds an optimal basic solution; only its support is
trusted.  The vertex itself is recomputed exactly on that support and then
certified, so solver round-off can never leak into a returned record.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import sparse

from .arrays import AXES, Cell, Cube, validate_tristochastic
from .certify import VertexCertificate, certify_support_rank, solve_on_support
from .linalg import eliminate

EXACT_RANK_LIMIT = 12


def cell_index(n: int, cell: Cell) -> int:
    i, j, k = cell
    return ((i - 1) * n + (j - 1)) * n + (k - 1)


def index_cell(n: int, t: int) -> Cell:
    i, r = divmod(t, n * n)
    j, k = divmod(r, n)
    return (i + 1, j + 1, k + 1)


def expected_rank(n: int) -> int:
    return 3 * n * n - 3 * n + 1


@dataclass(frozen=True)
class DeltaModel:
    """Line-sum equalities A x = 1, x >= 0 over the n^3 cells.

    Rows are ordered columns (j,k), rows (i,k), shafts (i,j).  ``independent``
    lists a maximal independent subset of the rows.
    """

    n: int
    A: sparse.csr_matrix = field(repr=False)
    rank: int
    rank_method: str
    independent: tuple[int, ...] = field(repr=False)

    @property
    def num_vars(self) -> int:
        return self.n ** 3

    @property
    def dimension(self) -> int:
        return self.num_vars - self.rank

    def reduced(self) -> sparse.csr_matrix:
        return self.A[list(self.independent)]


def _line_rows(n: int):
    """Row index -> list of variable indices, in line order."""
    rows = []
    r = range(1, n + 1)
    for j in r:
        for k in r:
            rows.append([cell_index(n, (i, j, k)) for i in r])
    for i in r:
        for k in r:
            rows.append([cell_index(n, (i, j, k)) for j in r])
    for i in r:
        for j in r:
            rows.append([cell_index(n, (i, j, k)) for k in r])
    return rows


def _independent_rows(n: int) -> tuple[int, ...]:
    # every column line, row lines with i < n, shaft lines with i, j < n
    nn = n * n
    keep = list(range(nn))
    keep += [nn + (i - 1) * n + (k - 1) for i in range(1, n) for k in range(1, n + 1)]
    keep += [2 * nn + (i - 1) * n + (j - 1) for i in range(1, n) for j in range(1, n)]
    return tuple(keep)


@lru_cache(maxsize=None)
def build_delta_model(n: int) -> DeltaModel:
    """Assemble the equality system and confirm its rank.

    Exact rational elimination decides the rank for n <= 12; above that the
    rank of A A^T is computed in floating point.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rows = _line_rows(n)
    data, ri, ci = [], [], []
    for r, idx in enumerate(rows):
        ri += [r] * n
        ci += idx
        data += [1.0] * n
    A = sparse.csr_matrix((data, (ri, ci)), shape=(3 * n * n, n ** 3))
    keep = _independent_rows(n)
    if n <= EXACT_RANK_LIMIT:
        dict_rows = [{c: 1 for c in idx} for idx in rows]
        rk = eliminate(dict_rows, range(n ** 3)).rank
        sub = eliminate([dict_rows[r] for r in keep], range(n ** 3)).rank
        method = "exact"
    else:
        G = (A @ A.T).toarray()
        rk = int(np.linalg.matrix_rank(G))
        R = A[list(keep)]
        sub = int(np.linalg.matrix_rank((R @ R.T).toarray()))
        method = "float"
    if rk != expected_rank(n) or sub != rk or len(keep) != rk:
        raise AssertionError(f"unexpected rank {rk} (independent subset {sub}) for n={n}")
    return DeltaModel(n, A, rk, method, keep)


# -- simplex -----------------------------------------------------------------------------

class LPFailure(RuntimeError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    basis: np.ndarray
    iterations: int
    solver: str


def revised_simplex(A, b: np.ndarray, c: np.ndarray, tol: float = 1e-9,
                    max_iter: int = 100_000, bland_after: int = 50) -> LPResult:
    """Maximize c x subject to A x = b, x >= 0 (A of full row rank, b >= 0).

    Two phases with artificial variables and an explicit basis inverse.
    Pricing is Dantzig's rule; after ``bland_after`` consecutive degenerate
    pivots it switches to Bland's rule until the objective moves again.
    """
    A = A.toarray() if sparse.issparse(A) else np.asarray(A, dtype=float)
    m, N = A.shape
    if (b < 0).any():
        raise ValueError("b must be nonnegative")
    Af = np.hstack([A, np.eye(m)])
    basis = np.arange(N, N + m)
    Binv = np.eye(m)
    xB = b.astype(float).copy()
    total = 0

    def run(cost, allowed):
        nonlocal Binv, xB, total
        stall = 0
        while True:
            if total >= max_iter:
                raise LPFailure("simplex iteration limit reached")
            y = cost[basis] @ Binv
            red = cost - y @ Af
            red[basis] = 0.0
            red[~allowed] = 0.0
            cand = np.nonzero(red > tol)[0]
            if cand.size == 0:
                return
            q = int(cand[0]) if stall >= bland_after else int(cand[np.argmax(red[cand])])
            d = Binv @ Af[:, q]
            pos = d > tol
            if not pos.any():
                raise LPFailure("objective unbounded")
            ratios = np.full(m, np.inf)
            ratios[pos] = xB[pos] / d[pos]
            theta = ratios.min()
            ties = np.nonzero(ratios <= theta + tol)[0]
            r = int(ties[np.argmin(basis[ties])]) if stall >= bland_after else int(ties[np.argmax(d[ties])])
            stall = stall + 1 if theta <= tol else 0
            xB = xB - theta * d
            xB[r] = theta
            piv = d[r]
            row = Binv[r] / piv
            Binv -= np.outer(d, row)
            Binv[r] = row
            basis[r] = q
            np.maximum(xB, 0.0, out=xB)
            total += 1

    allowed = np.ones(N + m, dtype=bool)
    phase1 = np.zeros(N + m)
    phase1[N:] = -1.0
    run(phase1, allowed)
    if xB[basis >= N].sum() > 1e-7:
        raise LPFailure("infeasible")
    # drive remaining zero-level artificials out of the basis
    for r in np.nonzero(basis >= N)[0]:
        row = Binv[r] @ A
        row[basis[basis < N]] = 0.0
        js = np.nonzero(np.abs(row) > 1e-7)[0]
        if js.size == 0:
            raise LPFailure("redundant equality rows")
        q = int(js[0])
        d = Binv @ Af[:, q]
        prow = Binv[r] / d[r]
        Binv -= np.outer(d, prow)
        Binv[r] = prow
        basis[r] = q
    allowed[N:] = False
    cost = np.concatenate([c, np.zeros(m)])
    run(cost, allowed)
    x = np.zeros(N)
    inb = basis < N
    x[basis[inb]] = xB[inb]
    return LPResult(x, basis.copy(), total, "simplex")


def _solve_simplex(model: DeltaModel, c: np.ndarray) -> LPResult:
    R = model.reduced()
    return revised_simplex(R, np.ones(R.shape[0]), c)


def _solve_highs(model: DeltaModel, c: np.ndarray) -> LPResult:
    # interior point plus crossover ends on a basic solution and is far faster
    # than HiGHS' dual simplex on these degenerate systems
    from scipy.optimize import linprog
    R = model.reduced()
    res = linprog(-c, A_eq=R, b_eq=np.ones(R.shape[0]), bounds=(0, None), method="highs-ipm")
    if res.status != 0:
        raise LPFailure(f"HiGHS: {res.message}")
    return LPResult(np.asarray(res.x), np.array([]), int(getattr(res, "nit", 0)), "highs-ipm")


SOLVERS: dict[str, Callable[[DeltaModel, np.ndarray], LPResult]] = {
    "simplex": _solve_simplex,
    "highs": _solve_highs,
}


def resolve_solver(name: str, n: int) -> str:
    if name == "auto":
        return "simplex" if n <= EXACT_RANK_LIMIT else "highs"
    if name not in SOLVERS:
        raise ValueError(f"unknown solver {name!r}")
    return name


# -- sampling ------------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleRecord:
    seed: int
    n: int
    objective_hash: str
    attempts: int
    solver: str
    vertex: Cube = field(repr=False)
    certificate: VertexCertificate = field(repr=False)
    objective: str = "uniform[0,1) iid"

    @property
    def support(self) -> tuple[Cell, ...]:
        return tuple(self.vertex.entries)

    @property
    def distinct_values(self) -> int:
        return len(set(self.vertex.entries.values()))

    def histogram(self, axis: str) -> list[int]:
        """counts[s - 1] = number of lines along ``axis`` with support size s."""
        return _histogram_one(self.vertex, axis)

    def to_json_obj(self) -> dict:
        return {
            "seed": self.seed, "n": self.n, "objective": self.objective,
            "objective_hash": self.objective_hash, "attempts": self.attempts,
            "solver": self.solver, "support_size": len(self.vertex.entries),
            "distinct_values": self.distinct_values,
            "histograms": {ax: self.histogram(ax) for ax in AXES},
        }


def _objective_hash(c: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(c, dtype="<f8").tobytes()).hexdigest()[:16]


def _snap(n: int, x: np.ndarray, tol: float) -> Cube | None:
    support = [index_cell(n, int(t)) for t in np.nonzero(x > tol)[0]]
    sol = solve_on_support(n, support)
    if sol is None or any(v <= 0 for v in sol.values()):
        return None
    cube = Cube(n, sol)
    return cube if validate_tristochastic(cube) is True else None


def sample_vertex(n: int, seed: int, solver: str = "auto", max_attempts: int = 8) -> SampleRecord:
    """Certified vertex maximizing an objective drawn from ``seed``.

    If the floating support does not pin down a positive exact solution (a
    degenerate or badly rounded optimum), the support threshold is tightened
    and then the objective is perturbed and the LP re-solved.
    """
    model = build_delta_model(n)
    name = resolve_solver(solver, n)
    rng = np.random.default_rng(seed)
    c = rng.random(n ** 3)
    first_hash = _objective_hash(c)
    for attempt in range(1, max_attempts + 1):
        res = SOLVERS[name](model, c)
        for tol in (1e-7, 1e-9, 1e-5):
            cube = _snap(n, res.x, tol)
            if cube is not None:
                cert = certify_support_rank(cube)
                if cert.is_vertex:
                    return SampleRecord(seed, n, first_hash, attempt, name, cube, cert)
        c = c + 1e-6 * rng.random(n ** 3)
    raise LPFailure(f"no certified vertex after {max_attempts} attempts (n={n}, seed={seed})")


def _histogram_one(vertex: Cube, axis: str) -> list[int]:
    n = vertex.n
    counts: dict = {}
    for i, j, k in vertex.entries:
        key = {"column": (j, k), "row": (i, k), "shaft": (i, j)}[axis]
        counts[key] = counts.get(key, 0) + 1
    hist = [0] * n
    for s in counts.values():
        hist[s - 1] += 1
    return hist


def line_support_histogram(records, axis: str) -> dict[int, int]:
    """Tally support sizes 1..n over every ``axis`` line of every record."""
    records = list(records)
    if not records:
        raise ValueError("no records")
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    n = records[0].n
    total = [0] * n
    for rec in records:
        v = rec.vertex if hasattr(rec, "vertex") else rec
        for s, cnt in enumerate(_histogram_one(v, axis)):
            total[s] += cnt
    return {s + 1: total[s] for s in range(n)}


def histogram_rows(n: int, axis: str, hist: dict[int, int], num_samples: int) -> list[list]:
    """Rows (n, axis, support_size, count, num_samples) ready for CSV output."""
    return [[n, axis, s, hist[s], num_samples] for s in sorted(hist)]


def exact_line_sums_ok(vertex: Cube) -> bool:
    return validate_tristochastic(vertex) is True and all(v > 0 for v in vertex.entries.values())


__all__ = [
    "DeltaModel", "build_delta_model", "revised_simplex", "LPFailure", "LPResult",
    "SampleRecord", "sample_vertex", "line_support_histogram", "histogram_rows",
    "cell_index", "index_cell", "expected_rank", "resolve_solver", "SOLVERS",
]
