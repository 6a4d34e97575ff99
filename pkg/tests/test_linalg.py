from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from tristoch.linalg import eliminate, rank

P = 2 ** 61 - 1


def dense_rows(M):
    return [{j: v for j, v in enumerate(row) if v} for row in M]


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.data())
def test_rank_matches_sympy(r, c, data):
    M = [[data.draw(st.integers(-3, 3)) for _ in range(c)] for _ in range(r)]
    expected = sympy.Matrix(M).rank()
    assert rank(dense_rows(M), range(c)) == expected
    # GF(p) rank can only drop, and for these tiny entries it does not
    assert rank(dense_rows(M), range(c), modulus=P) == expected


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.data())
def test_solution_and_kernel(c, data):
    M = [[data.draw(st.integers(-4, 4)) for _ in range(c)] for _ in range(c + 1)]
    x = [Fraction(data.draw(st.integers(-5, 5)), data.draw(st.integers(1, 4))) for _ in range(c)]
    b = [sum(a * v for a, v in zip(row, x)) for row in M]
    el = eliminate(dense_rows(M), range(c), b)
    assert not el.inconsistent
    sol = el.solution()
    assert all(sum(a * sol[j] for j, a in enumerate(row)) == bi for row, bi in zip(M, b))
    if el.full_column_rank:
        assert [sol[j] for j in range(c)] == x
    else:
        for f in el.free_columns:
            k = el.kernel_vector(f)
            assert k[f] == 1
            assert all(sum(a * k[j] for j, a in enumerate(row)) == 0 for row in M)


def test_inconsistent_system():
    el = eliminate([{0: 1, 1: 1}, {0: 2, 1: 2}], [0, 1], [1, 3])
    assert el.inconsistent
    with pytest.raises(ValueError):
        el.solution()


def test_modular_elimination_refuses_back_substitution():
    el = eliminate([{0: 1, 1: 1}], [0, 1], modulus=P)
    with pytest.raises(ValueError):
        el.kernel_vector()


def test_fraction_entries():
    el = eliminate([{0: Fraction(1, 3), 1: Fraction(1, 2)}, {1: Fraction(2, 7)}], [0, 1], [1, 1])
    sol = el.solution()
    assert sol == {0: Fraction(3) * (1 - Fraction(1, 2) * Fraction(7, 2)), 1: Fraction(7, 2)}
