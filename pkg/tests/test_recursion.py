import json

import pytest

from app.exceptions import CoefficientDiscrepancyError, DomainError, ResourceLimitError
from app.models import BoundaryCountVector, GraphFamily
from app.services import recursion
from app.services.recursion import (
    HANOI_EXPANDED,
    INITIAL_VECTOR,
    assert_oracle_agreement,
    coefficient_report,
    expand_structural,
    iterate,
    printed_form_diagnostics,
    step_hanoi,
    step_sierpx,
    terms_to_dict,
    total_count,
)
from app.utils.helpers import dump_json

HANOI = GraphFamily.HANOI
SIERPX = GraphFamily.SIERPX

HANOI_TABLE = [
    (1, 0, 1, 0),
    (18, 16, 15, 14),
    (568301, 521504, 478579, 439204),
    (18782596680434060148, 17236435531779805328, 15817552541478488865, 14515470321889909750),
]
SIERPX_TABLE = [
    (1, 0, 1, 0),
    (66, 56, 49, 44),
    (87837347, 76020480, 65794261, 56944448),
    (
        213175217650167042919081256,
        184498173678586828013178352,
        159678861670954453048115477,
        138198326607977450114587516,
    ),
]


def vector(values):
    x, y, z, w = values
    return BoundaryCountVector(x=x, y=y, z=z, w=w)


@pytest.mark.parametrize("n", range(3))
def test_step_hanoi(n):
    assert step_hanoi(vector(HANOI_TABLE[n])).as_tuple() == HANOI_TABLE[n + 1]


@pytest.mark.parametrize("n", range(3))
def test_step_sierpx(n):
    assert step_sierpx(vector(SIERPX_TABLE[n])).as_tuple() == SIERPX_TABLE[n + 1]


def test_iterate_reproduces_tables():
    assert [r.counts.as_tuple() for r in iterate(HANOI, 3)] == HANOI_TABLE
    assert [r.counts.as_tuple() for r in iterate(SIERPX, 3)] == SIERPX_TABLE


def test_iterate_totals():
    assert iterate(HANOI, 0)[-1].m == 4
    assert iterate(HANOI, 1)[-1].m == 125
    assert iterate(HANOI, 3)[-1].m == 132460031222098852477
    assert iterate(SIERPX, 1)[-1].m == 425
    assert iterate(HANOI, 2)[-1].m == 4007754


def test_total_count():
    assert total_count(INITIAL_VECTOR) == 4
    assert total_count(vector((18, 16, 15, 14))) == 125
    assert total_count(vector((0, 0, 0, 0))) == 0


def test_zero_vector_rejected():
    with pytest.raises(DomainError):
        step_hanoi(vector((0, 0, 0, 0)))
    with pytest.raises(DomainError):
        step_sierpx(vector((0, 0, 0, 0)))


@pytest.mark.parametrize("step", [step_hanoi, step_sierpx])
@pytest.mark.parametrize("c", [2, 3, 7])
def test_recursions_are_homogeneous_cubics(step, c):
    v = vector((18, 16, 15, 14))
    assert step(v.scaled(c)).as_tuple() == step(v).scaled(c ** 3).as_tuple()


@pytest.mark.parametrize("family", list(GraphFamily))
def test_strict_ordering_and_aggregates(family):
    for record in iterate(family, 8)[1:]:
        assert record.counts.is_strictly_ordered()
        assert record.aggregates.T == record.aggregates.S + record.aggregates.R


def test_exact_cap():
    with pytest.raises(ResourceLimitError):
        iterate(HANOI, 13)
    with pytest.raises(ResourceLimitError, match="exact cap of 4"):
        iterate(SIERPX, 5, exact_cap=4)
    with pytest.raises(DomainError):
        iterate(HANOI, -1)


def test_hanoi_expanded_agrees_through_stage_12():
    records = iterate(HANOI, 12)
    assert len(records) == 13
    assert records[12].counts.is_strictly_ordered()


def test_hanoi_structural_expansion_matches_table():
    expansion = expand_structural(HANOI)
    for coordinate in "xyzw":
        assert expansion[coordinate] == terms_to_dict(HANOI_EXPANDED[coordinate])
    assert coefficient_report(HANOI) == []


def test_sierpx_corrected_table_matches_expansion():
    assert coefficient_report(SIERPX, printed=False) == []


def test_sierpx_printed_table_has_one_typo():
    differences = coefficient_report(SIERPX, printed=True)
    assert len(differences) == 2
    assert all(line.startswith("y'") for line in differences)
    assert any("x*y^2" in line for line in differences)
    assert any("x*y*w" in line for line in differences)


def test_printed_form_diagnostics():
    messages = printed_form_diagnostics(vector((66, 56, 49, 44)))
    assert len(messages) == 1
    assert messages[0].startswith("y'")


def test_corrupted_expansion_is_detected(monkeypatch):
    broken = list(HANOI_EXPANDED["x"])
    broken[0] = (7, broken[0][1])
    monkeypatch.setitem(recursion.HANOI_EXPANDED, "x", broken)
    with pytest.raises(CoefficientDiscrepancyError) as info:
        step_hanoi(vector((18, 16, 15, 14)), stage=2)
    assert info.value.coordinate == "x"
    assert info.value.stage == 2


def test_oracle_agreement():
    assert_oracle_agreement(HANOI, [0, 1, 2])
    assert_oracle_agreement(SIERPX, [0, 1])


def test_record_json_round_trips():
    text = dump_json(iterate(SIERPX, 3))
    assert json.dumps(json.loads(text), indent=2, ensure_ascii=False) + "\n" == text
    assert json.loads(text)[3]["counts"]["w"] == "138198326607977450114587516"
