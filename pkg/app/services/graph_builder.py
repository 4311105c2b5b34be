"""Explicit construction of the Tower of Hanoi graphs H_n and the Sierpinski variant X_n.

Vertex labels are the copy path from the root (digits 0/1/2, outermost copy first)
followed by a local id: ``a``/``b``/``c`` for the corners of a stage-0 triangle and
``h`` for the hub that X_n adds at each level.
"""

import logging
from collections import Counter
from typing import Dict, List, Set, Tuple

import networkx as nx

from app.config import get_limits
from app.exceptions import DomainError, ResourceLimitError
from app.models import GraphFamily, GraphFamilyMeta, GraphInstance

logger = logging.getLogger(__name__)

CORNER_IDS = ("a", "b", "c")
HUB_ID = "h"


def corner_label(stage: int, corner: int) -> str:
    """Label of outmost vertex `corner` of the stage-`stage` graph."""
    return str(corner) * stage + CORNER_IDS[corner]


def _edge(u: str, v: str) -> Tuple[str, str]:
    return (u, v) if u < v else (v, u)


def _expand(family: GraphFamily, stage: int, vertices: Set[str], edges: Set[Tuple[str, str]]):
    """Glue three copies of the stage-`stage` graph into stage + 1."""
    new_vertices: Set[str] = set()
    new_edges: Set[Tuple[str, str]] = set()

    for copy in range(3):
        prefix = str(copy)
        new_vertices.update(prefix + v for v in vertices)
        new_edges.update(_edge(prefix + u, prefix + v) for u, v in edges)

    # copy i, corner j  <->  copy j, corner i
    inner_corners: List[str] = []
    for i in range(3):
        for j in range(i + 1, 3):
            u = str(i) + corner_label(stage, j)
            v = str(j) + corner_label(stage, i)
            new_edges.add(_edge(u, v))
            inner_corners.extend((u, v))

    if family is GraphFamily.SIERPX:
        new_vertices.add(HUB_ID)
        new_edges.update(_edge(HUB_ID, corner) for corner in inner_corners)

    return new_vertices, new_edges


def build(family: GraphFamily, n: int, build_cap: int = None) -> GraphInstance:
    """Materialize H_n or X_n with canonical labels."""
    cap = get_limits().build_cap if build_cap is None else build_cap
    if n < 0:
        raise DomainError(f"stage must be non-negative, got {n}")
    if n > cap:
        raise ResourceLimitError(
            f"stage {n} exceeds the build cap of {cap}; explicit instances are limited to n <= {cap}"
        )

    vertices = set(CORNER_IDS)
    edges = {_edge("a", "b"), _edge("b", "c"), _edge("a", "c")}
    for stage in range(n):
        vertices, edges = _expand(family, stage, vertices, edges)

    instance = GraphInstance(
        family=family,
        stage=n,
        vertices=sorted(vertices),
        edges=sorted(edges),
        outmost=tuple(corner_label(n, j) for j in range(3)),
    )
    logger.debug(f"Built {family.value} stage {n}: {len(vertices)} vertices, {len(edges)} edges")
    return instance


def graph_meta(family: GraphFamily, n: int) -> GraphFamilyMeta:
    """Closed-form sizes; valid for any stage, no instance is built."""
    if n < 0:
        raise DomainError(f"stage must be non-negative, got {n}")
    if family is GraphFamily.HANOI:
        vertex_count = 3 ** (n + 1)
        edge_count = (3 ** (n + 2) - 3) // 2
    else:
        vertex_count = (7 * 3 ** n - 1) // 2
        edge_count = (5 * 3 ** (n + 1) - 9) // 2
    return GraphFamilyMeta(
        family=family,
        stage=n,
        vertex_count=vertex_count,
        edge_count=edge_count,
        vertex_over_edge_limit=family.vertex_over_edge_limit,
    )


def expected_degree_histogram(family: GraphFamily, n: int) -> Dict[int, int]:
    if n == 0:
        return {2: 3}
    if family is GraphFamily.HANOI:
        return {2: 3, 3: 3 ** (n + 1) - 3}
    return {2: 3, 6: (3 ** n - 1) // 2, 4: 3 * (3 ** n - 1)}


def degree_histogram(graph: GraphInstance) -> Dict[int, int]:
    degrees = Counter(dict(graph.to_networkx().degree()).values())
    return dict(sorted(degrees.items()))


def validate_instance(graph: GraphInstance) -> List[str]:
    """Return the list of violated structural invariants (empty when valid)."""
    problems = []
    g = graph.to_networkx()
    meta = graph_meta(graph.family, graph.stage)

    if g.number_of_nodes() != meta.vertex_count:
        problems.append(f"vertex count {g.number_of_nodes()} != {meta.vertex_count}")
    if g.number_of_edges() != meta.edge_count or len(graph.edges) != meta.edge_count:
        problems.append(f"edge count {g.number_of_edges()} != {meta.edge_count}")
    if nx.number_of_selfloops(g):
        problems.append("graph has loops")
    if not nx.is_connected(g):
        problems.append("graph is not connected")
    if any(g.degree(v) != 2 for v in graph.outmost):
        problems.append("outmost vertices must have degree 2")
    if degree_histogram(graph) != expected_degree_histogram(graph.family, graph.stage):
        problems.append(f"degree histogram {degree_histogram(graph)} differs from closed form")
    return problems
