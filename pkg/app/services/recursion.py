"""Exact boundary-count recursions for H_n and X_n.

Stage n + 1 glues three stage-n copies. A copy whose outer corner has status o
and whose two inner corners are each either forced free (their connecting edge
is in the matching) or unconstrained contributes

    o free:     x (both inner corners forced), S (one), T (none)
    o covered:  y (both inner corners forced), R (one), P (none)

Summing over the subsets of connecting edges (and, for X_n, the hub edge)
gives the structural forms below. They are the source of truth; the
expanded coefficient tables are checked against them.
"""

import logging
import threading
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from app.config import get_limits
from app.exceptions import CoefficientDiscrepancyError, ConsistencyError, DomainError, ResourceLimitError
from app.models import AggregateCounts, BoundaryCountVector, GraphFamily, StageRecord

logger = logging.getLogger(__name__)

COORDINATES = ("x", "y", "z", "w")

Monomial = Tuple[int, int, int, int]
Terms = Sequence[Tuple[int, Monomial]]

INITIAL_VECTOR = BoundaryCountVector(x=1, y=0, z=1, w=0, source="stage0")


def hanoi_structural(x, y, z, w):
    S, R, T, P = x + y, y + z, x + 2 * y + z, y + 2 * z + w
    return (
        T ** 3 + 3 * S ** 2 * T + 3 * x * S ** 2 + x ** 3,
        P * T ** 2 + 2 * R * S * T + P * S ** 2 + 2 * x * R * S + y * S ** 2 + x ** 2 * y,
        P ** 2 * T + 2 * P * R * S + R ** 2 * T + 2 * y * R * S + x * R ** 2 + x * y ** 2,
        P ** 3 + 3 * R ** 2 * P + 3 * y * R ** 2 + y ** 3,
    )


def sierpx_structural(x, y, z, w):
    S, R, T, P = x + y, y + z, x + 2 * y + z, y + 2 * z + w
    return (
        T ** 3 + 3 * S ** 2 * T + 6 * S * T ** 2 + 3 * x * S ** 2 + 6 * x * S * T
        + 6 * S ** 3 + 6 * x ** 2 * S + x ** 3,

        T ** 2 * P + 2 * S * R * T + S ** 2 * P + 2 * R * T ** 2 + 2 * S * T * P + 2 * S * T * P
        + 2 * x * S * R + y * S ** 2 + 2 * x * R * T + 2 * S ** 2 * R + 2 * S ** 2 * R + 2 * y * S * T
        + 2 * x * S * P + 2 * S ** 2 * R + 2 * x * y * S + 2 * x ** 2 * R + 2 * x * y * S + x ** 2 * y,

        T * P ** 2 + 2 * S * R * P + R ** 2 * T + 2 * S * P ** 2 + 2 * R * T * P + 2 * R * T * P
        + 2 * y * S * R + x * R ** 2 + 2 * y * S * P + 2 * S * R ** 2 + 2 * S * R ** 2 + 2 * x * R * P
        + 2 * y * R * T + 2 * S * R ** 2 + 2 * x * y * R + 2 * y ** 2 * S + 2 * x * y * R + x * y ** 2,

        P ** 3 + 3 * R ** 2 * P + 6 * R * P ** 2 + 3 * y * R ** 2 + 6 * y * R * P
        + 6 * R ** 3 + 6 * y ** 2 * R + y ** 3,
    )


STRUCTURAL: Dict[GraphFamily, Callable] = {
    GraphFamily.HANOI: hanoi_structural,
    GraphFamily.SIERPX: sierpx_structural,
}

# Monomials are exponents of (x, y, z, w).
HANOI_EXPANDED: Dict[str, Terms] = {
    "x": [
        (8, (3, 0, 0, 0)), (24, (2, 1, 0, 0)), (6, (2, 0, 1, 0)), (30, (1, 2, 0, 0)),
        (18, (1, 1, 1, 0)), (3, (1, 0, 2, 0)), (14, (0, 3, 0, 0)), (15, (0, 2, 1, 0)),
        (6, (0, 1, 2, 0)), (1, (0, 0, 3, 0)),
    ],
    "y": [
        (8, (2, 1, 0, 0)), (8, (2, 0, 1, 0)), (2, (2, 0, 0, 1)), (16, (1, 2, 0, 0)),
        (24, (1, 1, 1, 0)), (6, (1, 1, 0, 1)), (6, (1, 0, 2, 0)), (2, (1, 0, 1, 1)),
        (10, (0, 3, 0, 0)), (20, (0, 2, 1, 0)), (5, (0, 2, 0, 1)), (11, (0, 1, 2, 0)),
        (4, (0, 1, 1, 1)), (2, (0, 0, 3, 0)), (1, (0, 0, 2, 1)),
    ],
    "z": [
        (8, (1, 2, 0, 0)), (16, (1, 1, 1, 0)), (4, (1, 1, 0, 1)), (10, (1, 0, 2, 0)),
        (6, (1, 0, 1, 1)), (1, (1, 0, 0, 2)), (8, (0, 3, 0, 0)), (22, (0, 2, 1, 0)),
        (6, (0, 2, 0, 1)), (20, (0, 1, 2, 0)), (12, (0, 1, 1, 1)), (2, (0, 1, 0, 2)),
        (5, (0, 0, 3, 0)), (4, (0, 0, 2, 1)), (1, (0, 0, 1, 2)),
    ],
    "w": [
        (8, (0, 3, 0, 0)), (24, (0, 2, 1, 0)), (6, (0, 2, 0, 1)), (30, (0, 1, 2, 0)),
        (18, (0, 1, 1, 1)), (3, (0, 1, 0, 2)), (14, (0, 0, 3, 0)), (15, (0, 0, 2, 1)),
        (6, (0, 0, 1, 2)), (1, (0, 0, 0, 3)),
    ],
}

# As printed, in printed order, typo included.
SIERPX_PRINTED: Dict[str, Terms] = {
    "x": [
        (32, (3, 0, 0, 0)), (96, (2, 1, 0, 0)), (24, (2, 0, 1, 0)), (108, (1, 2, 0, 0)),
        (60, (1, 1, 1, 0)), (9, (1, 0, 2, 0)), (44, (0, 3, 0, 0)), (39, (0, 2, 1, 0)),
        (12, (0, 1, 2, 0)), (1, (0, 0, 3, 0)),
    ],
    "y": [
        (32, (2, 1, 0, 0)), (32, (2, 0, 1, 0)), (8, (2, 0, 0, 1)), (64, (1, 2, 0, 0)),
        (88, (1, 1, 1, 0)), (20, (1, 2, 0, 0)), (20, (1, 0, 2, 0)), (6, (1, 0, 1, 1)),
        (36, (0, 3, 0, 0)), (64, (0, 2, 1, 0)), (13, (0, 2, 0, 1)), (29, (0, 1, 2, 0)),
        (8, (0, 1, 1, 1)), (4, (0, 0, 3, 0)), (1, (0, 0, 2, 1)),
    ],
    "z": [
        (32, (1, 2, 0, 0)), (64, (1, 1, 1, 0)), (16, (1, 1, 0, 1)), (36, (1, 0, 2, 0)),
        (20, (1, 0, 1, 1)), (1, (0, 0, 1, 2)), (32, (0, 3, 0, 0)), (80, (0, 2, 1, 0)),
        (20, (0, 2, 0, 1)), (64, (0, 1, 2, 0)), (32, (0, 1, 1, 1)), (4, (0, 1, 0, 2)),
        (13, (0, 0, 3, 0)), (8, (0, 0, 2, 1)), (3, (1, 0, 0, 2)),
    ],
    "w": [
        (32, (0, 3, 0, 0)), (96, (0, 2, 1, 0)), (24, (0, 2, 0, 1)), (108, (0, 1, 2, 0)),
        (60, (0, 1, 1, 1)), (9, (0, 1, 0, 2)), (44, (0, 0, 3, 0)), (39, (0, 0, 2, 1)),
        (12, (0, 0, 1, 2)), (1, (0, 0, 0, 3)),
    ],
}

# (coordinate, term position) -> replacement; the printed 20*x*y^2 in y' is 20*x*y*w
SIERPX_CORRECTIONS: Dict[Tuple[str, int], Tuple[int, Monomial]] = {
    ("y", 5): (20, (1, 1, 0, 1)),
}


def _apply_corrections(printed: Dict[str, Terms], corrections) -> Dict[str, Terms]:
    corrected = {coordinate: list(terms) for coordinate, terms in printed.items()}
    for (coordinate, position), term in corrections.items():
        corrected[coordinate][position] = term
    return corrected


SIERPX_EXPANDED: Dict[str, Terms] = _apply_corrections(SIERPX_PRINTED, SIERPX_CORRECTIONS)

EXPANDED: Dict[GraphFamily, Dict[str, Terms]] = {
    GraphFamily.HANOI: HANOI_EXPANDED,
    GraphFamily.SIERPX: SIERPX_EXPANDED,
}


def evaluate_terms(terms: Terms, values: Sequence[int]) -> int:
    powers = [[1, v, v * v, v * v * v] for v in values]
    total = 0
    for coefficient, exponents in terms:
        term = coefficient
        for variable, exponent in enumerate(exponents):
            if exponent:
                term *= powers[variable][exponent]
        total += term
    return total


def evaluate_expanded(expanded: Dict[str, Terms], values: Sequence[int]) -> Tuple[int, int, int, int]:
    return tuple(evaluate_terms(expanded[c], values) for c in COORDINATES)


def _check_input(v: BoundaryCountVector) -> None:
    if v.as_tuple() == (0, 0, 0, 0):
        raise DomainError("boundary-count vector must not be all zero")


def _compare(structural, expanded, stage: Optional[int]) -> None:
    for coordinate, s_value, e_value in zip(COORDINATES, structural, expanded):
        if s_value != e_value:
            logger.error(f"Coefficient discrepancy in {coordinate}' (stage {stage})")
            raise CoefficientDiscrepancyError(coordinate, s_value, e_value, stage)


def step_hanoi(v: BoundaryCountVector, stage: Optional[int] = None) -> BoundaryCountVector:
    """Advance an H_n vector to H_{n+1}; structural and expanded forms must agree."""
    _check_input(v)
    structural = hanoi_structural(*v.as_tuple())
    _compare(structural, evaluate_expanded(HANOI_EXPANDED, v.as_tuple()), stage)
    x, y, z, w = structural
    return BoundaryCountVector(x=x, y=y, z=z, w=w, source="hanoi")


def printed_form_diagnostics(v: BoundaryCountVector) -> List[str]:
    """Disagreements between the uncorrected printed X_n expansions and the structural forms."""
    structural = sierpx_structural(*v.as_tuple())
    printed = evaluate_expanded(SIERPX_PRINTED, v.as_tuple())
    return [
        f"{coordinate}': printed form gives {p_value}, structural form gives {s_value}"
        for coordinate, s_value, p_value in zip(COORDINATES, structural, printed)
        if s_value != p_value
    ]


def step_sierpx(v: BoundaryCountVector, stage: Optional[int] = None) -> BoundaryCountVector:
    """Advance an X_n vector to X_{n+1} from the structural forms."""
    _check_input(v)
    structural = sierpx_structural(*v.as_tuple())
    _compare(structural, evaluate_expanded(SIERPX_EXPANDED, v.as_tuple()), stage)
    if logger.isEnabledFor(logging.DEBUG):
        for message in printed_form_diagnostics(v):
            logger.debug(f"Stage {stage}: {message}")
    x, y, z, w = structural
    return BoundaryCountVector(x=x, y=y, z=z, w=w, source="sierpx")


STEP_FUNCTIONS: Dict[GraphFamily, Callable[..., BoundaryCountVector]] = {
    GraphFamily.HANOI: step_hanoi,
    GraphFamily.SIERPX: step_sierpx,
}


def total_count(v: BoundaryCountVector) -> int:
    return v.x + 3 * v.y + 3 * v.z + v.w


def make_record(family: GraphFamily, n: int, counts: BoundaryCountVector) -> StageRecord:
    return StageRecord(
        family=family,
        n=n,
        counts=counts,
        aggregates=AggregateCounts.from_counts(counts),
        m=total_count(counts),
    )


_ledgers: Dict[Tuple[GraphFamily, Callable], List[StageRecord]] = {}
_ledger_lock = threading.Lock()


def iterate(family: GraphFamily, n_max: int, exact_cap: Optional[int] = None) -> List[StageRecord]:
    """Stage records 0..n_max, starting from (x0, y0, z0, w0) = (1, 0, 1, 0)."""
    cap = get_limits().exact_cap if exact_cap is None else exact_cap
    if n_max < 0:
        raise DomainError(f"n_max must be non-negative, got {n_max}")
    if n_max > cap:
        raise ResourceLimitError(f"stage {n_max} exceeds the exact cap of {cap}")

    stepper = STEP_FUNCTIONS[family]
    key = (family, stepper)
    with _ledger_lock:
        ledger = _ledgers.setdefault(key, [make_record(family, 0, INITIAL_VECTOR)])
        while len(ledger) <= n_max:
            n = len(ledger)
            counts = stepper(ledger[-1].counts, stage=n)
            ledger.append(make_record(family, n, counts))
            logger.info(f"{family.value} stage {n}: x has {counts.x.bit_length()} bits")
        return list(ledger[: n_max + 1])


def terms_to_dict(terms: Terms) -> Dict[Monomial, int]:
    merged: Dict[Monomial, int] = {}
    for coefficient, exponents in terms:
        merged[exponents] = merged.get(exponents, 0) + coefficient
    return {monomial: c for monomial, c in merged.items() if c}


def expand_structural(family: GraphFamily) -> Dict[str, Dict[Monomial, int]]:
    """Symbolic expansion of the structural forms into monomial coefficients."""
    import sympy

    x, y, z, w = sympy.symbols("x y z w")
    forms = STRUCTURAL[family](x, y, z, w)
    expansion = {}
    for coordinate, expression in zip(COORDINATES, forms):
        poly = sympy.Poly(sympy.expand(expression), x, y, z, w)
        expansion[coordinate] = {tuple(monomial): int(c) for monomial, c in poly.terms()}
    return expansion


def coefficient_report(family: GraphFamily, printed: bool = True) -> List[str]:
    """Coefficient differences between a coefficient table and the expanded structural forms."""
    if family is GraphFamily.SIERPX and printed:
        table = SIERPX_PRINTED
    else:
        table = EXPANDED[family]
    structural = expand_structural(family)

    names = "xyzw"
    differences = []
    for coordinate in COORDINATES:
        listed = terms_to_dict(table[coordinate])
        derived = structural[coordinate]
        for monomial in sorted(set(listed) | set(derived), reverse=True):
            if listed.get(monomial, 0) != derived.get(monomial, 0):
                label = "*".join(
                    f"{names[i]}^{e}" if e > 1 else names[i] for i, e in enumerate(monomial) if e
                )
                differences.append(
                    f"{coordinate}': coefficient of {label} is {listed.get(monomial, 0)} in the table, "
                    f"{derived.get(monomial, 0)} in the structural expansion"
                )
    return differences


def assert_oracle_agreement(family: GraphFamily, stages: Sequence[int], **budget) -> None:
    """Raise ConsistencyError unless the oracle reproduces the recursion at every stage."""
    from app.services.graph_builder import build
    from app.services.oracle import boundary_vector, count_by_boundary

    ledger = iterate(family, max(stages))
    for n in stages:
        observed = boundary_vector(count_by_boundary(build(family, n), **budget))
        expected = ledger[n].counts
        if observed.as_tuple() != expected.as_tuple():
            logger.error(f"Oracle disagrees with the {family.value} recursion at stage {n}")
            raise ConsistencyError(
                f"{family.value} stage {n}: recursion gives {expected.as_tuple()}, "
                f"oracle gives {observed.as_tuple()}"
            )
