import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tristoch.arrays import Cube, HalfArray, validate_tristochastic
from tristoch.census import enumerate_H, enumerate_vertices_exhaustive, latin_squares
from tristoch.certify import (NOT_VERTEX, VERTEX, certificate_to_json, certify_half_vertex,
                              certify_support_rank, solve_on_support, support_bounds,
                              support_upper_bound)
from tristoch.graphs import build_line_graph, connected_components, is_bipartite, two_color

ALL8 = frozenset(itertools.product((1, 2), repeat=3))
L2A = Cube(2, {(1, 1, 1): 1, (1, 2, 2): 1, (2, 1, 2): 1, (2, 2, 1): 1})
L2B = Cube(2, {(1, 1, 2): 1, (1, 2, 1): 1, (2, 1, 1): 1, (2, 2, 2): 1})


def test_all_half_n2_decomposes_into_the_two_latin_squares():
    cert = certify_half_vertex(HalfArray(2, ALL8))
    assert cert.verdict == NOT_VERTEX
    A, B = cert.decomposition
    assert {A, B} == {L2A, L2B}
    assert cert.verify(HalfArray(2, ALL8))


def test_support_rank_n2_kernel_is_latin_difference():
    cube = HalfArray(2, ALL8).to_cube()
    cert = certify_support_rank(cube)
    assert cert.verdict == NOT_VERTEX and cert.verify(cube)
    F = cert.kernel
    diff = {c: L2A[c] - L2B[c] for c in ALL8}
    # the kernel is one-dimensional, so F is a multiple of the difference
    ratio = F[(1, 1, 1)] / diff[(1, 1, 1)]
    assert all(F[c] == ratio * diff[c] for c in ALL8)


def test_latin_squares_are_vertices_at_lower_bound():
    for n in (1, 2, 3, 4):
        for sq in itertools.islice(latin_squares(n), 20):
            cube = Cube.from_latin_square(sq)
            cert = certify_support_rank(cube)
            assert cert.verdict == VERTEX and cert.rank == n * n
            rep = support_bounds(cube)
            assert rep.size == rep.lower == n * n and rep.within


def test_bipartite_component_member_of_h3_is_not_vertex():
    members = enumerate_H(3, certify=False)
    found = False
    for h in members:
        g = build_line_graph(h)
        comps = connected_components(g)
        if any(not hasattr(two_color(g, c), "cycle") for c in comps):
            cert = certify_half_vertex(h)
            assert cert.verdict == NOT_VERTEX
            A, B = cert.decomposition
            assert A != B and cert.verify(h)
            found = True
    assert found


def test_odd_cycle_witnesses_verify():
    # a vertex of H_4 found by enumeration
    h, cert = next((h, c) for h in enumerate_H(4, certify=False)
                   if (c := certify_half_vertex(h)).is_vertex)
    assert cert.is_vertex and len(cert.odd_cycles) == len(connected_components(build_line_graph(h)))
    assert cert.verify(h)
    obj = certificate_to_json(cert)
    assert obj["verdict"] == "vertex" and all(len(c) % 2 == 1 for c in obj["odd_cycles"])


def test_certify_half_rejects_non_members():
    with pytest.raises(ValueError):
        certify_half_vertex(HalfArray(2, frozenset(list(ALL8)[:4])))


def test_support_rank_rejects_non_members():
    with pytest.raises(ValueError):
        certify_support_rank(Cube(2, {(1, 1, 1): 1}))


def test_forged_witnesses_fail_verification():
    h = HalfArray(2, ALL8)
    cert = certify_half_vertex(h)
    forged = type(cert)(NOT_VERTEX, "graph", decomposition=(L2A, L2A))
    assert not forged.verify(h)
    bad_kernel = type(cert)(NOT_VERTEX, "support-rank", kernel={(1, 1, 1): Fraction(1)})
    assert not bad_kernel.verify(h.to_cube())


def test_solve_on_support():
    sol = solve_on_support(2, L2A.entries)
    assert sol == dict(L2A.entries)
    assert solve_on_support(2, ALL8) is None


def test_upper_bound_formula():
    assert [support_upper_bound(n) for n in (1, 2, 3, 10)] == [1, 7, 19, 271]


def test_exhaustive_n3_vertices_respect_bounds():
    for v in enumerate_vertices_exhaustive(3):
        assert support_bounds(v).within
        assert len(v.entries) <= 19


def _permute(cube, perm, relabel):
    out = {}
    for cell, v in cube.entries.items():
        c = tuple(cell[p] for p in perm)
        out[tuple(relabel[a][x - 1] for a, x in enumerate(c))] = v
    return Cube(cube.n, out)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_verdict_invariant_under_symmetries(data):
    verts = enumerate_vertices_exhaustive(3)
    a, b = data.draw(st.sampled_from(verts)), data.draw(st.sampled_from(verts))
    t = Fraction(data.draw(st.integers(0, 4)), 4)
    z = Cube(3, {c: t * a[c] + (1 - t) * b[c] for c in set(a.entries) | set(b.entries)})
    assert validate_tristochastic(z) is True
    perm = data.draw(st.permutations(range(3)))
    relabel = [data.draw(st.permutations([1, 2, 3])) for _ in range(3)]
    w = _permute(z, perm, relabel)
    assert validate_tristochastic(w) is True
    cz, cw = certify_support_rank(z), certify_support_rank(w)
    assert cz.verdict == cw.verdict
    assert cz.verdict == (VERTEX if (a == b or t in (0, 1)) else NOT_VERTEX)
    if not cz.is_vertex:
        assert cz.verify(z)


def test_half_member_certifiers_agree_on_h3():
    for t in enumerate_H(3):
        assert t.agree
    assert is_bipartite(build_line_graph(HalfArray(2, ALL8)))
