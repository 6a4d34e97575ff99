import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tristoch.arrays import Cube, HalfArray, ShaftView
from tristoch.census import cycles_biadjacency, random_regular_biadjacency
from tristoch.construct import _standard_cycle_cells
from tristoch.graphs import (BipartiteGraph, LineOverflow, NoHamiltonianCycle, NoPerfectMatching,
                             NotRegular, OddCycleWitness, TwoColoring, build_cell_graphs,
                             build_line_graph, connected_components, count_hamiltonian_cycles,
                             hamiltonian_cycle, is_bipartite, matching_through_edge,
                             moon_moser_holds, perfect_matching, two_color)

ALL8 = frozenset(itertools.product((1, 2), repeat=3))


def cycle_adj(L, offset=0):
    return {offset + t: (offset + (t - 1) % L, offset + (t + 1) % L) for t in range(L)}


def brute_matchings(B):
    xs, ys = list(B.left), list(B.right)
    out = []
    for perm in itertools.permutations(ys):
        if all(B.has_edge(x, y) for x, y in zip(xs, perm)):
            out.append(frozenset(zip(xs, perm)))
    return out


def brute_ham_count(B):
    # fix left vertex 0 first; each undirected cycle is seen twice
    xs, ys = list(B.left), list(B.right)
    m = len(xs)
    total = 0
    for px in itertools.permutations(xs[1:]):
        order_x = [xs[0], *px]
        for py in itertools.permutations(ys):
            ok = all(B.has_edge(order_x[t], py[t]) and B.has_edge(order_x[(t + 1) % m], py[t])
                     for t in range(m))
            total += ok
    return total // 2


# -- line graphs -----------------------------------------------------------------

def test_line_graph_of_all_half_n2_is_the_cube_graph():
    g = build_line_graph(HalfArray(2, ALL8))
    assert len(g.vertices) == 8
    assert all(g.degree(v) == 3 for v in g.vertices)
    # adjacency = differ in exactly one coordinate
    for u, v in itertools.combinations(g.vertices, 2):
        assert (v in g.adjacency[u]) == (sum(a != b for a, b in zip(u, v)) == 1)


def test_line_graph_of_standard_cycle_is_one_cycle():
    cells = [(x + 1, y + 1, 1) for x, y in _standard_cycle_cells(range(5))]
    g = build_line_graph(cells)
    assert len(g.vertices) == 10
    assert all(g.degree(v) == 2 for v in g.vertices)
    assert len(connected_components(g)) == 1


def test_line_graph_of_latin_square_is_edgeless():
    sq = [[(i + j) % 4 + 1 for j in range(4)] for i in range(4)]
    g = build_line_graph(Cube.from_latin_square(sq))
    assert len(g.vertices) == 16 and g.edges() == []


def test_line_overflow_reports_line():
    with pytest.raises(LineOverflow) as exc:
        build_line_graph([(1, 1, 1), (1, 1, 2), (1, 1, 3)])
    assert exc.value.line.axis == "shaft"


def test_components():
    assert len(connected_components({v: () for v in range(5)})) == 5
    assert len(connected_components(cycle_adj(8))) == 1
    two = {**cycle_adj(4), **cycle_adj(6, offset=10)}
    assert len(connected_components(two)) == 2


# -- two-coloring -----------------------------------------------------------------

def test_even_cycle_coloring_alternates():
    res = two_color(cycle_adj(6))
    assert isinstance(res, TwoColoring)
    assert all(res.colors[t] != res.colors[(t + 1) % 6] for t in range(6))
    assert res.colors[0] == 0
    assert res.swapped().colors[0] == 1
    # determinism from the fixed root
    assert two_color(cycle_adj(6)).colors == res.colors


def test_triangle_gives_odd_witness():
    res = two_color(cycle_adj(3))
    assert isinstance(res, OddCycleWitness) and len(res) == 3
    assert res.verify(cycle_adj(3))


def test_cube_graph_colors_by_parity():
    g = build_line_graph(HalfArray(2, ALL8))
    res = two_color(g)
    assert isinstance(res, TwoColoring)
    assert len({(sum(v) + res.colors[v]) % 2 for v in g.vertices}) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 15), st.data())
def test_odd_witness_is_valid_on_random_graphs(N, data):
    edges = data.draw(st.sets(st.tuples(st.integers(0, N - 1), st.integers(0, N - 1)), max_size=3 * N))
    adj = {v: set() for v in range(N)}
    for a, b in edges:
        if a != b:
            adj[a].add(b)
            adj[b].add(a)
    adj = {v: tuple(sorted(ns)) for v, ns in adj.items()}
    for comp in connected_components(adj):
        res = two_color(adj, comp)
        if isinstance(res, OddCycleWitness):
            assert res.verify(adj)
        else:
            assert all(res.colors[u] != res.colors[v] for u in comp for v in adj[u])


# -- cell graphs ------------------------------------------------------------------

def shaft(n, value):
    return ShaftView(n, 1, tuple(tuple(Fraction(value) for _ in range(n)) for _ in range(n)))


def test_cell_graphs_extremes():
    G, Gb = build_cell_graphs(shaft(4, 0))
    assert G.regular_degree() == 4 and Gb.num_edges == 0
    G, Gb = build_cell_graphs(shaft(4, Fraction(1, 2)))
    assert Gb.regular_degree() == 4 and G.num_edges == 0


def test_cell_graphs_reject_bad_entries():
    with pytest.raises(ValueError):
        build_cell_graphs(shaft(3, Fraction(3, 2)))


# -- matchings --------------------------------------------------------------------

def test_matching_k33():
    B = BipartiteGraph.from_matrix(np.ones((3, 3), dtype=int))
    M = perfect_matching(B, seed=1)
    assert len(M) == 3 and len({x for x, _ in M}) == 3 and len({y for _, y in M}) == 3


def test_matching_hall_violator():
    M = np.zeros((3, 3), dtype=int)
    M[:, 0] = 1  # every left vertex only sees y=0
    with pytest.raises(NoPerfectMatching) as exc:
        perfect_matching(BipartiteGraph.from_matrix(M))
    assert len(exc.value.hall_violator) == 3 and len(exc.value.neighbourhood) == 1


@pytest.mark.parametrize("m", range(2, 11))
def test_regular_graphs_always_match(m):
    rng = np.random.default_rng(m)
    for d in range(1, m + 1):
        B = BipartiteGraph.from_matrix(random_regular_biadjacency(m, d, rng))
        M = perfect_matching(B, seed=d)
        assert len(M) == m and all(B.has_edge(x, y) for x, y in M)


def test_matching_through_edge_examples():
    K22 = BipartiteGraph.from_matrix(np.ones((2, 2), dtype=int))
    assert matching_through_edge(K22, (0, 0)) == {(0, 0), (1, 1)}
    C6 = BipartiteGraph.from_matrix(cycles_biadjacency([3]))
    for e in C6.edges():
        M = matching_through_edge(C6, e)
        assert e in M
        assert [mm for mm in brute_matchings(C6) if e in mm] == [M]


def test_matching_through_edge_random_4_regular():
    rng = np.random.default_rng(4)
    for t in range(10):
        B = BipartiteGraph.from_matrix(random_regular_biadjacency(8, 4, rng))
        e = B.edges()[int(rng.integers(B.num_edges))]
        M = matching_through_edge(B, e, seed=t)
        assert e in M and M in brute_matchings(B)


def test_matching_through_edge_needs_regular():
    M = np.ones((3, 3), dtype=int)
    M[0, 0] = 0
    with pytest.raises(NotRegular):
        matching_through_edge(BipartiteGraph.from_matrix(M), (1, 1))


# -- Hamiltonian cycles -----------------------------------------------------------

def test_hamiltonian_cycle_k44():
    B = BipartiteGraph.from_matrix(np.ones((4, 4), dtype=int))
    cyc = hamiltonian_cycle(B, seed=0)
    assert len(cyc) == 8 and cyc.verify(B)


def test_hamiltonian_cycle_of_a_cycle_is_itself():
    B = BipartiteGraph.from_matrix(cycles_biadjacency([6]))
    cyc = hamiltonian_cycle(B, seed=3)
    assert cyc.verify(B) and set(cyc.pairs()) == set(B.edges())


def test_hamiltonian_cycle_isolated_vertex():
    M = np.ones((3, 3), dtype=int)
    M[2, :] = 0
    with pytest.raises(NoHamiltonianCycle) as exc:
        hamiltonian_cycle(BipartiteGraph.from_matrix(M))
    assert exc.value.proven


def test_hamiltonian_cycle_two_squares_is_proven_absent():
    # min degree m/2 but disconnected: the non-strict degree condition is not enough
    B = BipartiteGraph.from_matrix(cycles_biadjacency([2, 2]))
    assert moon_moser_holds(B)
    with pytest.raises(NoHamiltonianCycle) as exc:
        hamiltonian_cycle(B)
    assert exc.value.proven


def test_hamiltonian_cycle_varies_with_seed():
    B = BipartiteGraph.from_matrix(np.ones((6, 6), dtype=int))
    cycles = {frozenset(hamiltonian_cycle(B, seed=s).pairs()) for s in range(10)}
    assert len(cycles) > 1


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.data())
def test_moon_moser_graphs_are_hamiltonian(m, data):
    # strictly above m/2 always suffices
    rows = []
    for _ in range(m):
        rows.append(data.draw(st.lists(st.booleans(), min_size=m, max_size=m)))
    M = np.array(rows, dtype=int)
    d = m // 2 + 1
    for x in range(m):
        M[x, [(x + t) % m for t in range(d)]] = 1  # circulant backbone keeps the minimum degree
    B = BipartiteGraph.from_matrix(M)
    assert 2 * min(B.degrees()) > m
    assert hamiltonian_cycle(B, seed=0).verify(B)


def test_moon_moser_examples():
    assert moon_moser_holds(BipartiteGraph.from_matrix(np.ones((4, 4), dtype=int)))
    assert moon_moser_holds(BipartiteGraph.from_matrix(cycles_biadjacency([4])))
    assert not moon_moser_holds(BipartiteGraph.from_matrix(cycles_biadjacency([5])))
    with pytest.raises(ValueError):
        moon_moser_holds(BipartiteGraph.from_matrix(np.ones((2, 3), dtype=int)))


def test_count_hamiltonian_cycles_examples():
    K33 = BipartiteGraph.from_matrix(np.ones((3, 3), dtype=int))
    assert count_hamiltonian_cycles(K33) == 6 == math.factorial(3) * math.factorial(2) // 2
    assert brute_ham_count(K33) == 6
    assert count_hamiltonian_cycles(BipartiteGraph.from_matrix(cycles_biadjacency([5]))) == 1
    assert count_hamiltonian_cycles(BipartiteGraph.from_matrix(np.ones((2, 2), dtype=int))) == 1


@pytest.mark.parametrize("m", [3, 4, 5])
def test_count_matches_formula_and_brute_force(m):
    Kmm = BipartiteGraph.from_matrix(np.ones((m, m), dtype=int))
    assert count_hamiltonian_cycles(Kmm) == math.factorial(m) * math.factorial(m - 1) // 2
    rng = np.random.default_rng(m)
    for _ in range(5):
        B = BipartiteGraph.from_matrix((rng.random((m, m)) < 0.6).astype(int))
        assert count_hamiltonian_cycles(B) == brute_ham_count(B)


def test_count_over_budget():
    with pytest.raises(ValueError):
        count_hamiltonian_cycles(BipartiteGraph.from_matrix(np.ones((11, 11), dtype=int)))


def test_is_bipartite():
    assert is_bipartite(cycle_adj(8))
    assert not is_bipartite({**cycle_adj(4), **cycle_adj(5, offset=10)})
