import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import brute_force_sccs, k2, reachable
from kappasens import DirectedWeightedGraph, EdgeSet, apply_perturbation, largest_scc
from kappasens.exceptions import EdgeListParseError, GraphError
from kappasens.generators import (
    directed_cycle,
    generate_er,
    generate_layered_example,
    generate_small_world,
    small_world_lattice,
)
from kappasens.graph import (
    is_strongly_connected,
    load_edge_list,
    load_graph,
    save_edge_list,
    save_graph_json,
)


def test_graph_invariants():
    with pytest.raises(GraphError):
        DirectedWeightedGraph(np.array([[1.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(GraphError):
        DirectedWeightedGraph(np.zeros((1, 1)))
    with pytest.raises(ValueError):
        DirectedWeightedGraph(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        DirectedWeightedGraph(np.array([[0.0, np.nan], [1.0, 0.0]]))


def test_adjacency_is_read_only():
    g = k2()
    with pytest.raises(ValueError):
        g.adjacency[0, 1] = 5.0


def test_edge_convention():
    g = DirectedWeightedGraph.from_edges(3, [(0, 1, 2.5)])
    assert g.adjacency[1, 0] == 2.5
    assert g.weight((0, 1)) == 2.5 and not g.has_edge((1, 0))
    np.testing.assert_array_equal(g.in_degrees(), [0, 2.5, 0])
    np.testing.assert_array_equal(g.out_degrees(), [2.5, 0, 0])


def test_edge_set_rejects_duplicates_and_loops():
    with pytest.raises(GraphError):
        EdgeSet([(0, 1), (0, 1)])
    with pytest.raises(GraphError):
        EdgeSet([(2, 2)])
    with pytest.raises(GraphError):
        EdgeSet([(0, 5)]).validate(3)


def test_load_k2(tmp_path):
    p = tmp_path / "k2.txt"
    p.write_text("0 1 1.0\n1 0 1.0\n")
    g = load_edge_list(p)
    assert g.n == 2
    assert g.adjacency[0, 1] == 1.0 and g.adjacency[1, 0] == 1.0


def test_self_loop_dropped_with_warning(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("0\t1\t1.0\n1\t0\t1.0\n3\t3\t1.0\n")
    with pytest.warns(UserWarning, match="dropped 1 self-loop"):
        g, info = load_edge_list(p, return_info=True)
    assert info.dropped_self_loops == 1
    # the self-loop vertex still exists, it is just isolated
    assert g.n == 3


def test_duplicate_edge_reports_line(tmp_path):
    p = tmp_path / "dup.txt"
    p.write_text("0 1 1.0\n0 1 2.0\n")
    with pytest.raises(EdgeListParseError) as exc:
        load_edge_list(p)
    assert exc.value.line == 2
    assert "0->1" in str(exc.value)


def test_malformed_row(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("0 1 1.0\n1 0 x\n")
    with pytest.raises(EdgeListParseError) as exc:
        load_edge_list(p)
    assert exc.value.line == 2
    p.write_text("0 1 1 1\n")
    with pytest.raises(EdgeListParseError):
        load_edge_list(p)


def test_too_few_vertices(tmp_path):
    p = tmp_path / "one.txt"
    p.write_text("# nothing\n")
    with pytest.raises(GraphError):
        load_edge_list(p)


def test_header_csv_and_default_weight(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("source,target,weight\n10,20\n20,10,0.5\n")
    g, info = load_edge_list(p, return_info=True)
    assert info.header and info.labels == [10, 20]
    assert g.adjacency[1, 0] == 1.0 and g.adjacency[0, 1] == 0.5


def test_string_labels(tmp_path):
    p = tmp_path / "s.txt"
    # a non-numeric first row is a header, so string labels need one
    p.write_text("src dst w\nb a 2\na b 3\n")
    g, info = load_edge_list(p, return_info=True)
    assert info.header and info.labels == ["a", "b"]
    assert g.weight((1, 0)) == 2.0


@given(arrays(np.float64, (5, 5), elements=st.floats(-3, 3, allow_nan=False)))
def test_edge_list_round_trip(tmp_path_factory, A):
    np.fill_diagonal(A, 0.0)
    g = DirectedWeightedGraph(A)
    p = tmp_path_factory.mktemp("rt") / "g.tsv"
    save_edge_list(g, p)
    assert load_edge_list(p) == g
    q = p.with_suffix(".json")
    save_graph_json(g, q)
    assert load_graph(q) == g


def test_json_schema(layered):
    d = layered.to_dict()
    assert d["n"] == 10
    pairs = [(s, t) for s, t, _ in d["edges"]]
    assert pairs == sorted(pairs)


def test_perturbation_examples():
    g = k2()
    assert apply_perturbation(g, [(0, 1)], 0.0) == g
    h = apply_perturbation(g, [(1, 0)], 0.5)   # edge 2 -> 1 in 1-based labels
    assert h.adjacency[0, 1] == 1.5 and h.adjacency[1, 0] == 1.0
    c = apply_perturbation(directed_cycle(3), [(1, 0)], -1.0)
    assert c.adjacency[0, 1] == -1.0


@given(st.integers(-8, 8), st.integers(-8, 8))
def test_perturbation_additive(a, b):
    # dyadic steps keep the floating-point sums exact
    a, b = a / 8, b / 8
    g = generate_er(6, 0.5, seed=2)
    F = [(0, 1), (2, 3), (5, 4)]
    assert apply_perturbation(apply_perturbation(g, F, a), F, b) == apply_perturbation(g, F, a + b)


def test_largest_scc_cycle_plus_sink():
    A = np.zeros((4, 4))
    for s, d in [(0, 1), (1, 2), (2, 0), (2, 3)]:
        A[d, s] = 1.0
    g = DirectedWeightedGraph(A)
    assert brute_force_sccs(A)[0] == [0, 1, 2]
    sub, mapping = largest_scc(g)
    assert sub.n == 3 and mapping == {0: 0, 1: 1, 2: 2}
    assert sub == directed_cycle(3)


def test_largest_scc_tie_break():
    A = np.zeros((4, 4))
    for s, d in [(2, 3), (3, 2), (0, 1), (1, 0)]:
        A[d, s] = 1.0
    sub, mapping = largest_scc(DirectedWeightedGraph(A))
    assert sorted(mapping) == [0, 1]


def test_largest_scc_fixed_point(layered):
    sub, mapping = largest_scc(layered)
    assert sub == layered and mapping == {i: i for i in range(10)}


def test_largest_scc_too_small():
    A = np.zeros((3, 3))
    A[1, 0] = A[2, 1] = 1.0
    with pytest.raises(GraphError):
        largest_scc(DirectedWeightedGraph(A))


@given(st.integers(2, 12), st.floats(0.05, 0.5), st.integers(0, 10_000))
def test_largest_scc_matches_brute_force(n, p, seed):
    rng = np.random.default_rng(seed)
    A = (rng.random((n, n)) < p).astype(float)
    np.fill_diagonal(A, 0.0)
    comps = brute_force_sccs(A)
    if len(comps[0]) < 2:
        with pytest.raises(GraphError):
            largest_scc(DirectedWeightedGraph(A))
        return
    sub, mapping = largest_scc(DirectedWeightedGraph(A))
    assert sorted(mapping) == comps[0]
    assert all(reachable(sub.adjacency, s) == set(range(sub.n)) for s in range(sub.n))


def test_layered_example():
    g = generate_layered_example()
    assert g.n == 10
    assert g.weight((1, 0)) == 0.3          # 2 -> 1
    assert g.weight((0, 1)) == 1.0
    backward = [e for e in g.edges() if g.weight(e) == 0.3]
    assert len(backward) == 12
    assert is_strongly_connected(g.adjacency)


def test_er_generator():
    g = generate_er(24, 0.14, 0.6, 1.4, seed=3)
    assert g.n == 24 and is_strongly_connected(g.adjacency)
    w = g.adjacency[g.adjacency != 0]
    assert w.min() >= 0.6 and w.max() <= 1.4
    assert generate_er(24, 0.14, seed=3) == g
    np.testing.assert_array_equal(generate_er(2, 0.999999, 1.0, 1.0, seed=0).adjacency,
                                  [[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        generate_er(5, 1.0)
    with pytest.raises(GraphError, match="n=6, p=0.01"):
        generate_er(6, 0.01, seed=0, max_tries=3)


def test_er_distinct_seeds():
    graphs = [generate_er(12, 0.3, seed=s) for s in range(5)]
    assert len({g.sha256() for g in graphs}) == 5


def test_small_world_generator():
    g = generate_small_world(20, 0.2, 0.6, 1.4, seed=0)
    assert is_strongly_connected(g.adjacency)
    out_deg = (g.adjacency != 0).sum(axis=0)
    assert out_deg.min() >= 4 and out_deg.max() <= 19
    assert generate_small_world(20, 0.2, seed=0) == g
    lattice = generate_small_world(12, 0.0, 1.0, 1.0, seed=5)
    expect = np.zeros((12, 12))
    for i, outs in enumerate(small_world_lattice(12)):
        for j in outs:
            expect[j, i] = 1.0
    np.testing.assert_array_equal(lattice.adjacency, expect)
    with pytest.raises(GraphError):
        generate_small_world(6)


def test_hash_and_equality():
    a, b = k2(), k2()
    assert a == b and a.sha256() == b.sha256()
    assert k2(2.0, 1.0).sha256() != a.sha256()
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert len({a, b}) == 1
