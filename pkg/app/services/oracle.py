"""Independent matching counter used as ground truth for the recursions.

Counts independent edge subsets of an explicit graph by vertex elimination,

    m(G) = m(G - v) + sum over neighbours u of v of m(G - v - u),

factorizing over connected components and memoizing on the set of remaining
vertices (every residual graph is an induced subgraph, so that set is a
canonical key).
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple, Union

from app.config import get_limits
from app.exceptions import ConsistencyError, DomainError, OracleBudgetExceeded
from app.models import BoundaryCountVector, GraphInstance, OracleResult

logger = logging.getLogger(__name__)

EdgeInput = Iterable[Tuple[Hashable, Hashable]]

# (dimer on outmost 0, 1, 2) for the 8 boundary classes
BOUNDARY_CLASSES: List[Tuple[bool, bool, bool]] = list(product((False, True), repeat=3))


class MatchingCounter:
    """Memoized matching counter over one fixed graph."""

    def __init__(
        self,
        adjacency: Dict[int, FrozenSet[int]],
        max_steps: Optional[int] = None,
        max_seconds: Optional[float] = None,
    ):
        limits = get_limits()
        self.adjacency = adjacency
        self.max_steps = limits.oracle_steps if max_steps is None else max_steps
        self.max_seconds = limits.oracle_seconds if max_seconds is None else max_seconds
        self.steps = 0
        self.cache: Dict[FrozenSet[int], int] = {}
        self._started = time.monotonic()

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self._started

    def _tick(self) -> None:
        self.steps += 1
        if self.steps > self.max_steps:
            raise OracleBudgetExceeded(
                f"oracle step budget of {self.max_steps} exhausted", self.steps, self.elapsed
            )
        if self.steps % 256 == 0 and self.elapsed > self.max_seconds:
            raise OracleBudgetExceeded(
                f"oracle time budget of {self.max_seconds}s exhausted", self.steps, self.elapsed
            )

    def _neighbours(self, v: int, alive: FrozenSet[int]) -> List[int]:
        return sorted(u for u in self.adjacency[v] if u in alive)

    def _components(self, alive: FrozenSet[int]) -> List[FrozenSet[int]]:
        seen = set()
        components = []
        for start in sorted(alive):
            if start in seen:
                continue
            stack = [start]
            seen.add(start)
            members = []
            while stack:
                v = stack.pop()
                members.append(v)
                for u in self.adjacency[v]:
                    if u in alive and u not in seen:
                        seen.add(u)
                        stack.append(u)
            components.append(frozenset(members))
        return components

    def count(self, alive: FrozenSet[int]) -> int:
        """Number of matchings of the subgraph induced by `alive`."""
        # isolated vertices contribute a factor 1
        alive = frozenset(v for v in alive if any(u in alive for u in self.adjacency[v]))
        if not alive:
            return 1
        cached = self.cache.get(alive)
        if cached is not None:
            return cached

        self._tick()
        components = self._components(alive)
        if len(components) > 1:
            result = 1
            for component in components:
                result *= self.count(component)
        else:
            degree = {v: sum(1 for u in self.adjacency[v] if u in alive) for v in alive}
            pivot = min(alive, key=lambda v: (degree[v], v))
            rest = alive - {pivot}
            result = self.count(rest)
            for u in self._neighbours(pivot, alive):
                result += self.count(rest - {u})

        self.cache[alive] = result
        return result

    def count_constrained(
        self,
        alive: FrozenSet[int],
        covered: FrozenSet[int],
        uncovered: FrozenSet[int] = frozenset(),
    ) -> int:
        """Matchings in which every vertex of `covered` is matched and none of `uncovered` is."""
        if covered & uncovered:
            return 0
        alive = alive - uncovered
        if not covered:
            return self.count(alive)
        if not covered <= alive:
            return 0

        self._tick()
        v = min(covered)
        total = 0
        for u in self._neighbours(v, alive):
            total += self.count_constrained(alive - {v, u}, covered - {v, u})
        return total


def _index_graph(edges: EdgeInput) -> Tuple[List[Hashable], Dict[int, FrozenSet[int]]]:
    pairs = [tuple(edge) for edge in edges]
    labels = sorted({v for edge in pairs for v in edge}, key=str)
    index = {label: i for i, label in enumerate(labels)}

    neighbours: Dict[int, set] = {i: set() for i in range(len(labels))}
    seen = set()
    for u, v in pairs:
        if u == v:
            raise DomainError(f"graph has a loop at {u!r}")
        key = frozenset((index[u], index[v]))
        if key in seen:
            raise DomainError(f"graph has a multiple edge between {u!r} and {v!r}")
        seen.add(key)
        neighbours[index[u]].add(index[v])
        neighbours[index[v]].add(index[u])
    return labels, {v: frozenset(adj) for v, adj in neighbours.items()}


def _edges_of(graph: Union[GraphInstance, EdgeInput]) -> EdgeInput:
    if isinstance(graph, GraphInstance):
        return graph.edges
    return graph


def count_matchings(
    graph: Union[GraphInstance, EdgeInput],
    max_steps: Optional[int] = None,
    max_seconds: Optional[float] = None,
) -> int:
    """Exact number of matchings (the empty matching included)."""
    _, adjacency = _index_graph(_edges_of(graph))
    counter = MatchingCounter(adjacency, max_steps, max_seconds)
    try:
        return counter.count(frozenset(adjacency))
    except RecursionError:
        raise OracleBudgetExceeded("graph too deep for the oracle recursion", counter.steps, counter.elapsed)


def _count_class(
    counter: MatchingCounter,
    all_vertices: FrozenSet[int],
    outmost: Sequence[int],
    status: Tuple[bool, bool, bool],
) -> int:
    covered = frozenset(v for v, dimer in zip(outmost, status) if dimer)
    uncovered = frozenset(v for v, dimer in zip(outmost, status) if not dimer)
    try:
        return counter.count_constrained(all_vertices, covered, uncovered)
    except RecursionError:
        raise OracleBudgetExceeded("graph too deep for the oracle recursion", counter.steps, counter.elapsed)


def count_by_boundary(
    graph: GraphInstance,
    max_steps: Optional[int] = None,
    max_seconds: Optional[float] = None,
    parallel: bool = False,
) -> OracleResult:
    """Count matchings in each of the 8 outmost-status classes and collapse them to (x, y, z, w)."""
    started = time.perf_counter()
    labels, adjacency = _index_graph(graph.edges)
    index = {label: i for i, label in enumerate(labels)}
    outmost = [index[label] for label in graph.outmost]
    all_vertices = frozenset(adjacency)

    if parallel:
        # each class gets an equal share of the step budget
        total_steps = get_limits().oracle_steps if max_steps is None else max_steps
        per_class = max(total_steps // len(BOUNDARY_CLASSES), 1)
        counters = [MatchingCounter(adjacency, per_class, max_seconds) for _ in BOUNDARY_CLASSES]
        with ThreadPoolExecutor(max_workers=len(BOUNDARY_CLASSES)) as pool:
            futures = [
                pool.submit(_count_class, counter, all_vertices, outmost, status)
                for counter, status in zip(counters, BOUNDARY_CLASSES)
            ]
            values = [future.result() for future in futures]
        steps = sum(counter.steps for counter in counters)
    else:
        counter = MatchingCounter(adjacency, max_steps, max_seconds)
        values = [_count_class(counter, all_vertices, outmost, status) for status in BOUNDARY_CLASSES]
        steps = counter.steps

    by_class = dict(zip(BOUNDARY_CLASSES, values))
    grouped: Dict[int, List[int]] = {0: [], 1: [], 2: [], 3: []}
    for status, value in by_class.items():
        grouped[sum(status)].append(value)

    for dimers in (1, 2):
        if len(set(grouped[dimers])) != 1:
            logger.error(f"Rotational symmetry broken for {dimers}-dimer classes: {grouped[dimers]}")
            raise ConsistencyError(
                f"{dimers}-dimer boundary classes disagree ({grouped[dimers]}); "
                f"the graph construction is not rotationally symmetric"
            )

    vector = BoundaryCountVector(
        x=grouped[0][0], y=grouped[1][0], z=grouped[2][0], w=grouped[3][0],
        source=f"oracle:{graph.family.value}:{graph.stage}",
    )
    elapsed = time.perf_counter() - started
    logger.info(f"Oracle counted {graph.family.value} stage {graph.stage}: m={vector.total()} in {steps} steps")
    return OracleResult(
        family=graph.family,
        stage=graph.stage,
        x=vector.x, y=vector.y, z=vector.z, w=vector.w,
        m=vector.total(),
        elapsed=round(elapsed, 6),
        steps=steps,
    )


def boundary_vector(result: OracleResult) -> BoundaryCountVector:
    return BoundaryCountVector(
        x=result.x, y=result.y, z=result.z, w=result.w,
        source=f"oracle:{result.family.value if result.family else 'raw'}:{result.stage}",
    )
