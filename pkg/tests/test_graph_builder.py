from fractions import Fraction

import pytest

from app.exceptions import DomainError, ResourceLimitError
from app.models import GraphFamily
from app.services.graph_builder import (
    build,
    corner_label,
    degree_histogram,
    expected_degree_histogram,
    graph_meta,
    validate_instance,
)

HANOI = GraphFamily.HANOI
SIERPX = GraphFamily.SIERPX


def test_hanoi_stage0_is_triangle():
    graph = build(HANOI, 0)
    assert len(graph.vertices) == 3
    assert len(graph.edges) == 3
    assert set(graph.outmost) == set(graph.vertices)


def test_hanoi_stage1_sizes():
    graph = build(HANOI, 1)
    assert len(graph.vertices) == 9
    assert len(graph.edges) == 12


def test_sierpx_stage0_is_triangle():
    graph = build(SIERPX, 0)
    assert len(graph.vertices) == 3
    assert len(graph.edges) == 3


def test_sierpx_stage1_sizes_and_degrees():
    graph = build(SIERPX, 1)
    assert len(graph.vertices) == 10
    assert len(graph.edges) == 18
    assert degree_histogram(graph) == {2: 3, 4: 6, 6: 1}


@pytest.mark.parametrize("family", list(GraphFamily))
@pytest.mark.parametrize("n", range(0, 6))
def test_instances_match_closed_forms(family, n):
    graph = build(family, n)
    meta = graph_meta(family, n)
    assert len(graph.vertices) == meta.vertex_count
    assert len(graph.edges) == meta.edge_count
    assert validate_instance(graph) == []


@pytest.mark.parametrize("n", range(0, 7))
def test_hanoi_edge_count_formula(n):
    assert len(build(HANOI, n).edges) == (3 ** (n + 2) - 3) // 2


@pytest.mark.parametrize("family", list(GraphFamily))
def test_outmost_vertices_have_degree_two(family):
    graph = build(family, 3)
    g = graph.to_networkx()
    assert [g.degree(v) for v in graph.outmost] == [2, 2, 2]


def test_build_is_deterministic():
    assert build(SIERPX, 3) == build(SIERPX, 3)
    graph = build(HANOI, 2)
    assert graph.vertices == sorted(graph.vertices)
    assert graph.edges == sorted(graph.edges)


@pytest.mark.parametrize("family, extra", [(HANOI, 3), (SIERPX, 9)])
def test_stage_is_three_copies_plus_joining_edges(family, extra):
    n = 3
    whole = set(build(family, n).edges)
    previous = set(build(family, n - 1).edges)

    inside = set()
    for copy in "012":
        copy_edges = {(u, v) for u, v in whole if u.startswith(copy) and v.startswith(copy)}
        assert {(u[1:], v[1:]) for u, v in copy_edges} == previous
        inside |= copy_edges
    assert len(whole - inside) == extra


def test_corner_labels():
    assert corner_label(0, 0) == "a"
    assert corner_label(2, 1) == "11b"
    assert build(HANOI, 2).outmost == ("00a", "11b", "22c")


def test_build_cap_is_enforced():
    with pytest.raises(ResourceLimitError, match="8"):
        build(HANOI, 9)
    with pytest.raises(ResourceLimitError, match="build cap of 2"):
        build(SIERPX, 3, build_cap=2)


def test_negative_stage_rejected():
    with pytest.raises(DomainError):
        build(HANOI, -1)
    with pytest.raises(DomainError):
        graph_meta(SIERPX, -1)


def test_meta_beyond_build_cap():
    meta = graph_meta(HANOI, 50)
    assert meta.vertex_count == 3 ** 51
    assert meta.edge_count == (3 ** 52 - 3) // 2
    assert graph_meta(SIERPX, 40).vertex_count == (7 * 3 ** 40 - 1) // 2


def test_vertex_over_edge_limits():
    assert graph_meta(HANOI, 1).vertex_over_edge_limit == Fraction(2, 3)
    assert graph_meta(SIERPX, 1).vertex_over_edge_limit == Fraction(7, 15)


def test_sierpx_degree_histogram_closed_form():
    for n in range(1, 5):
        assert degree_histogram(build(SIERPX, n)) == expected_degree_histogram(SIERPX, n)
    assert expected_degree_histogram(SIERPX, 2) == {2: 3, 6: 4, 4: 24}
