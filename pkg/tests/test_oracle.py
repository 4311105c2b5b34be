import networkx as nx
import pytest

from app.exceptions import DomainError, OracleBudgetExceeded
from app.models import GraphFamily
from app.services.graph_builder import build
from app.services.oracle import (
    BOUNDARY_CLASSES,
    MatchingCounter,
    boundary_vector,
    count_by_boundary,
    count_matchings,
)

HANOI = GraphFamily.HANOI
SIERPX = GraphFamily.SIERPX


def test_small_graphs():
    assert count_matchings([("a", "b")]) == 2
    assert count_matchings([("a", "b"), ("b", "c"), ("a", "c")]) == 4
    assert count_matchings([("a", "b"), ("b", "c")]) == 3
    # 4-cycle: empty, 4 single edges, 2 perfect matchings
    assert count_matchings([(0, 1), (1, 2), (2, 3), (3, 0)]) == 7


def test_disconnected_graph_factorizes():
    two_triangles = [("a", "b"), ("b", "c"), ("a", "c"), ("d", "e"), ("e", "f"), ("d", "f")]
    assert count_matchings(two_triangles) == 16


def test_built_instances():
    assert count_matchings(build(HANOI, 1)) == 125
    assert count_matchings(build(SIERPX, 1)) == 425


def test_boundary_classes():
    assert len(BOUNDARY_CLASSES) == 8
    assert len(set(BOUNDARY_CLASSES)) == 8


@pytest.mark.parametrize(
    "family, n, expected",
    [
        (HANOI, 0, (1, 0, 1, 0)),
        (HANOI, 1, (18, 16, 15, 14)),
        (SIERPX, 0, (1, 0, 1, 0)),
        (SIERPX, 1, (66, 56, 49, 44)),
    ],
)
def test_count_by_boundary(family, n, expected):
    result = count_by_boundary(build(family, n))
    assert boundary_vector(result).as_tuple() == expected
    assert result.m == expected[0] + 3 * expected[1] + 3 * expected[2] + expected[3]


def test_hanoi_stage2_ground_truth():
    result = count_by_boundary(build(HANOI, 2))
    assert (result.x, result.y, result.z, result.w) == (568301, 521504, 478579, 439204)
    assert result.m == 4007754


def test_parallel_matches_sequential():
    graph = build(HANOI, 1)
    sequential = count_by_boundary(graph)
    parallel = count_by_boundary(graph, parallel=True)
    assert boundary_vector(parallel).as_tuple() == boundary_vector(sequential).as_tuple()


def test_step_budget_exhaustion_carries_steps():
    with pytest.raises(OracleBudgetExceeded) as info:
        count_matchings(build(HANOI, 2), max_steps=10)
    assert info.value.steps > 10
    assert info.value.exit_code == 3


def test_parallel_classes_share_the_step_budget():
    with pytest.raises(OracleBudgetExceeded, match="budget of 2 exhausted") as info:
        count_by_boundary(build(HANOI, 2), max_steps=16, parallel=True)
    assert info.value.steps == 3

    budget = 50_000
    result = count_by_boundary(build(HANOI, 1), max_steps=budget, parallel=True)
    assert result.steps <= budget


def test_rejects_loops_and_multi_edges():
    with pytest.raises(DomainError):
        count_matchings([("a", "a")])
    with pytest.raises(DomainError):
        count_matchings([("a", "b"), ("b", "a")])


def test_count_constrained_on_path():
    adjacency = {0: frozenset({1}), 1: frozenset({0, 2}), 2: frozenset({1})}
    counter = MatchingCounter(adjacency)
    everything = frozenset(adjacency)
    assert counter.count(everything) == 3
    assert counter.count_constrained(everything, frozenset({1})) == 2
    assert counter.count_constrained(everything, frozenset(), frozenset({1})) == 1
    assert counter.count_constrained(everything, frozenset({0, 2})) == 0
    assert counter.count_constrained(everything, frozenset({1}), frozenset({1})) == 0


def _without_vertices(edges, removed):
    return [(u, v) for u, v in edges if u not in removed and v not in removed]


@pytest.mark.parametrize("seed", range(6))
def test_edge_deletion_identity_on_random_graphs(seed):
    graph = nx.gnp_random_graph(9, 0.4, seed=seed)
    edges = sorted(graph.edges())
    whole = count_matchings(edges)
    for u, v in edges[:5]:
        rest = [e for e in edges if e != (u, v)]
        assert whole == count_matchings(rest) + count_matchings(_without_vertices(edges, {u, v}))


def test_pendant_edge_identity():
    # pendant vertex 5 hangs on 2
    edges = [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2), (2, 5)]
    assert count_matchings(edges) == count_matchings(_without_vertices(edges, {5})) + count_matchings(
        _without_vertices(edges, {5, 2})
    )
