"""Exact n x n x n stochastic arrays: cells, lines, shaft views, validation and I/O.

All indices exposed by this module are 1-based.  A cell is a tuple ``(i, j, k)``
where ``i`` is the row index, ``j`` the column index and ``k`` the layer.

Lines follow the usual naming: the ``(j, k)``-column is ``M(., j, k)``, the
``(i, k)``-row is ``M(i, ., k)`` and the ``(i, j)``-shaft is ``M(i, j, .)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, Mapping, Union

Cell = tuple[int, int, int]

HALF = Fraction(1, 2)
AXES = ("column", "row", "shaft")


class ArrayFormatError(ValueError):
    """Raised when an array file or in-memory description is malformed."""


@dataclass(frozen=True)
class LineSpec:
    """A line of the cube: ``axis`` plus the two fixed indices.

    column -> (j, k), row -> (i, k), shaft -> (i, j).
    """

    axis: str
    a: int
    b: int

    def cells(self, n: int) -> list[Cell]:
        return line_cells(n, self)


def line_cells(n: int, spec: LineSpec) -> list[Cell]:
    """Return the n cells of ``spec`` in increasing order of the free index."""
    if spec.axis not in AXES:
        raise ValueError(f"unknown axis {spec.axis!r}")
    if not (1 <= spec.a <= n and 1 <= spec.b <= n):
        raise ValueError(f"line index out of range for n={n}: {spec}")
    r = range(1, n + 1)
    if spec.axis == "column":
        return [(t, spec.a, spec.b) for t in r]
    if spec.axis == "row":
        return [(spec.a, t, spec.b) for t in r]
    return [(spec.a, spec.b, t) for t in r]


def all_lines(n: int) -> Iterator[LineSpec]:
    """All 3n^2 lines: columns, then rows, then shafts."""
    for axis in AXES:
        for a, b in product(range(1, n + 1), repeat=2):
            yield LineSpec(axis, a, b)


def lines_through(cell: Cell) -> tuple[LineSpec, LineSpec, LineSpec]:
    i, j, k = cell
    return LineSpec("column", j, k), LineSpec("row", i, k), LineSpec("shaft", i, j)


def _check_cell(n: int, cell: Iterable[int]) -> Cell:
    c = tuple(int(v) for v in cell)
    if len(c) != 3 or not all(1 <= v <= n for v in c):
        raise ArrayFormatError(f"cell {tuple(cell)} out of range for n={n}")
    return c  # type: ignore[return-value]


@dataclass(frozen=True)
class Cube:
    """An n x n x n array of exact rationals, stored sparsely (zeros omitted)."""

    n: int
    entries: Mapping[Cell, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ArrayFormatError("n must be >= 1")
        clean = {}
        for cell, value in self.entries.items():
            cell = _check_cell(self.n, cell)
            value = Fraction(value)
            if value != 0:
                clean[cell] = value
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    def __getitem__(self, cell: Cell) -> Fraction:
        return self.entries.get(cell, Fraction(0))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Cube):
            return NotImplemented
        return self.n == other.n and self.entries == other.entries

    def __hash__(self) -> int:
        return hash((self.n, tuple(self.entries.items())))

    @property
    def support(self) -> frozenset[Cell]:
        return frozenset(self.entries)

    def line_sum(self, spec: LineSpec) -> Fraction:
        return sum((self[c] for c in line_cells(self.n, spec)), Fraction(0))

    def is_half_valued(self) -> bool:
        return all(v == HALF for v in self.entries.values())

    @classmethod
    def from_dense(cls, values) -> "Cube":
        """Build from a nested n x n x n sequence (0-based python indexing)."""
        n = len(values)
        entries = {}
        for i, j, k in product(range(n), repeat=3):
            v = Fraction(values[i][j][k])
            if v:
                entries[(i + 1, j + 1, k + 1)] = v
        return cls(n, entries)

    @classmethod
    def from_latin_square(cls, square) -> "Cube":
        """0/1 cube with a 1 at (i, j, L[i][j]); symbols of ``square`` are 1-based."""
        n = len(square)
        return cls(n, {(i + 1, j + 1, square[i][j]): Fraction(1)
                       for i in range(n) for j in range(n)})


@dataclass(frozen=True)
class HalfArray:
    """A member (or candidate member) of H_n, stored as its set of 1/2-cells."""

    n: int
    support: frozenset[Cell]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ArrayFormatError("n must be >= 1")
        cells = frozenset(_check_cell(self.n, c) for c in self.support)
        object.__setattr__(self, "support", cells)

    def to_cube(self) -> Cube:
        return Cube(self.n, {c: HALF for c in self.support})

    def __getitem__(self, cell: Cell) -> Fraction:
        return HALF if cell in self.support else Fraction(0)

    @classmethod
    def from_cube(cls, cube: Cube) -> "HalfArray":
        if not cube.is_half_valued():
            raise ArrayFormatError("cube has entries other than 0 and 1/2")
        return cls(cube.n, frozenset(cube.entries))


ArrayLike = Union[Cube, HalfArray]


@dataclass(frozen=True)
class Violation:
    """First failing line (or cell) found by a validator."""

    reason: str
    line: LineSpec | None = None
    value: Fraction | int | None = None
    cell: Cell | None = None

    def __bool__(self) -> bool:  # a violation is never "ok"
        return False


def _line_counts(n: int, cells: Iterable[Cell]) -> dict[LineSpec, int]:
    counts: dict[LineSpec, int] = {}
    for cell in cells:
        for line in lines_through(cell):
            counts[line] = counts.get(line, 0) + 1
    return counts


def validate_tristochastic(cube: Cube) -> bool | Violation:
    """``True`` iff every entry is >= 0 and all 3n^2 line sums equal 1."""
    for cell, v in cube.entries.items():
        if v < 0:
            return Violation("negative entry", cell=cell, value=v)
    # integer arithmetic over a common denominator
    den = math.lcm(*(v.denominator for v in cube.entries.values())) if cube.entries else 1
    sums: dict[tuple, int] = {}
    for (i, j, k), v in cube.entries.items():
        w = v.numerator * (den // v.denominator)
        for key in ((0, j, k), (1, i, k), (2, i, j)):
            sums[key] = sums.get(key, 0) + w
    for t, line in enumerate(all_lines(cube.n)):
        s = sums.get((t // cube.n ** 2, line.a, line.b), 0)
        if s != den:
            return Violation("line sum != 1", line=line, value=Fraction(s, den))
    return True


def validate_half_array(h: HalfArray) -> bool | Violation:
    """``True`` iff every line holds exactly two 1/2-cells."""
    counts = _line_counts(h.n, h.support)
    for line in all_lines(h.n):
        c = counts.get(line, 0)
        if c != 2:
            return Violation("line support != 2", line=line, value=c)
    return True


@dataclass(frozen=True)
class ShaftView:
    """Partial shaft sums ``D^k``: entries[i-1][j-1] = sum_{t<=k} M(i, j, t)."""

    n: int
    k: int
    entries: tuple[tuple[Fraction, ...], ...]
    offending: tuple[tuple[int, int], ...] = ()

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self.entries[i - 1][j - 1]

    def cell_class(self, i: int, j: int) -> Fraction:
        return self[i, j]

    def cells_with(self, value) -> list[tuple[int, int]]:
        value = Fraction(value)
        return [(i + 1, j + 1) for i in range(self.n) for j in range(self.n)
                if self.entries[i][j] == value]


def shaft_view(array: ArrayLike, k: int) -> ShaftView:
    """Shaft sums over layers 1..k.

    For a ``HalfArray`` any shaft whose prefix holds more than two 1/2-cells
    is listed in ``offending`` (such a prefix leaves {0, 1/2, 1}).
    """
    n = array.n
    if not 1 <= k <= n:
        raise ValueError(f"layer {k} out of range for n={n}")
    acc = [[Fraction(0)] * n for _ in range(n)]
    if isinstance(array, HalfArray):
        counts = [[0] * n for _ in range(n)]
        for i, j, t in array.support:
            if t <= k:
                counts[i - 1][j - 1] += 1
        acc = [[HALF * c for c in row] for row in counts]
        bad = tuple((i + 1, j + 1) for i in range(n) for j in range(n) if counts[i][j] > 2)
    else:
        for (i, j, t), v in array.entries.items():
            if t <= k:
                acc[i - 1][j - 1] += v
        bad = ()
    return ShaftView(n, k, tuple(tuple(r) for r in acc), bad)


# -- serialization -----------------------------------------------------------

def _frac_str(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def to_json_obj(array: ArrayLike, extra: Mapping | None = None) -> dict:
    if isinstance(array, HalfArray):
        obj = {"n": array.n, "half_cells": [list(c) for c in sorted(array.support)]}
    else:
        obj = {"n": array.n,
               "entries": [[*c, _frac_str(v)] for c, v in sorted(array.entries.items())]}
    if extra:
        obj.update(extra)
    return obj


def serialize(array: ArrayLike, extra: Mapping | None = None) -> str:
    """Canonical JSON text.  ``extra`` keys (e.g. a run config) ride along."""
    return json.dumps(to_json_obj(array, extra), sort_keys=True, separators=(",", ":")) + "\n"


def _parse_fraction(s) -> Fraction:
    if isinstance(s, bool) or not isinstance(s, (str, int)):
        raise ArrayFormatError(f"value must be a rational string, got {s!r}")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ArrayFormatError(f"bad rational {s!r}") from exc


def from_json_obj(obj) -> ArrayLike:
    if not isinstance(obj, dict) or "n" not in obj:
        raise ArrayFormatError("expected an object with key 'n'")
    n = obj["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ArrayFormatError(f"bad n: {n!r}")
    if ("half_cells" in obj) == ("entries" in obj):
        raise ArrayFormatError("need exactly one of 'half_cells' or 'entries'")
    seen: set[Cell] = set()
    if "half_cells" in obj:
        for raw in obj["half_cells"]:
            if not isinstance(raw, list) or len(raw) != 3 or not all(
                    isinstance(v, int) and not isinstance(v, bool) for v in raw):
                raise ArrayFormatError(f"bad cell {raw!r}")
            cell = _check_cell(n, raw)
            if cell in seen:
                raise ArrayFormatError(f"duplicate cell {cell}")
            seen.add(cell)
        return HalfArray(n, frozenset(seen))
    entries: dict[Cell, Fraction] = {}
    for raw in obj["entries"]:
        if not isinstance(raw, list) or len(raw) != 4 or not all(
                isinstance(v, int) and not isinstance(v, bool) for v in raw[:3]):
            raise ArrayFormatError(f"bad entry {raw!r}")
        cell = _check_cell(n, raw[:3])
        if cell in entries:
            raise ArrayFormatError(f"duplicate cell {cell}")
        entries[cell] = _parse_fraction(raw[3])
    return Cube(n, entries)


def parse(text: str) -> ArrayLike:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArrayFormatError(f"malformed JSON: {exc}") from exc
    return from_json_obj(obj)
