import pytest
from mpmath import mp, mpf

from app.exceptions import ConvergenceError, DomainError, PrecisionInsufficientError, ResourceLimitError
from app.models import BoundaryCountVector, GraphFamily
from app.services import asymptotics
from app.services.asymptotics import (
    HANOI_RATIO_POLYNOMIALS,
    bound_m_hanoi,
    entropy,
    entropy_bounds,
    exact_ratio_states,
    float_path_states,
    log_x_accumulated,
    nesting_violations,
    normalized_structural_coefficients,
    path_mismatches,
    ratio_fixed_point,
    ratio_properties,
    ratio_step,
    ratios_from_counts,
    sandwich_table,
    update_coefficients,
)
from app.services.recursion import iterate
from app.utils.helpers import working_precision

HANOI = GraphFamily.HANOI
SIERPX = GraphFamily.SIERPX


def vector(x, y, z, w):
    return BoundaryCountVector(x=x, y=y, z=z, w=w)


def close(value, printed):
    """One unit in the last printed digit, never tighter than 4e-16."""
    decimals = len(printed.split(".")[1])
    with working_precision(256):
        bound = max(mpf(10) ** (-decimals), mpf("4e-16"))
        return abs(value - mpf(printed)) <= bound


@pytest.mark.parametrize(
    "family, counts, expected",
    [
        (HANOI, (18, 16, 15, 14), ("0.888888888888889", "0.9375", "0.933333333333333")),
        (SIERPX, (66, 56, 49, 44), ("0.8484848484848485", "0.875", "0.8979591836734694")),
        (
            HANOI,
            (568301, 521504, 478579, 439204),
            ("0.917654552781009", "0.917689988955022", "0.917725182258311"),
        ),
    ],
)
def test_ratios_from_counts(family, counts, expected):
    state = ratios_from_counts(vector(*counts), 256, family=family)
    assert close(state.alpha, expected[0])
    assert close(state.beta, expected[1])
    assert close(state.gamma, expected[2])
    with working_precision(256):
        assert state.epsilon == state.gamma - state.alpha


def test_stage_zero_ratios_undefined():
    with pytest.raises(DomainError, match="n >= 1"):
        ratios_from_counts(vector(1, 0, 1, 0))


def test_hanoi_ratio_step_reproduces_table():
    state = ratios_from_counts(vector(18, 16, 15, 14), 512, family=HANOI, n=1)
    state = ratio_step(HANOI, state)
    assert state.n == 2
    assert close(state.alpha, "0.917654552781009")
    assert close(state.beta, "0.917689988955022")
    assert close(state.gamma, "0.917725182258311")

    state = ratio_step(HANOI, state)
    assert close(state.alpha, "0.9176811824818183")
    assert close(state.beta, "0.9176811825342172")
    assert close(state.gamma, "0.9176811825866157")


def test_sierpx_ratio_step_reproduces_table():
    state = exact_ratio_states(SIERPX, 2, 512)[-1]
    state = ratio_step(SIERPX, state)
    assert state.n == 3
    assert close(state.alpha, "0.8654766520813835")
    assert close(state.beta, "0.8654766520839932")
    assert close(state.gamma, "0.8654766520866030")


def test_ratio_step_rejects_other_family():
    state = exact_ratio_states(HANOI, 1)[0]
    with pytest.raises(DomainError):
        ratio_step(SIERPX, state)


def test_hanoi_polynomials_have_constant_term_eight():
    for terms in HANOI_RATIO_POLYNOMIALS.values():
        assert [c for c, monomial in terms if monomial == (0, 0, 0)] == [8]


def test_hanoi_polynomials_are_normalized_structural_forms():
    state = exact_ratio_states(HANOI, 2, 256)[-1]
    printed = update_coefficients(HANOI, state)
    with working_precision(256):
        derived = normalized_structural_coefficients(HANOI, state.alpha, state.beta, state.gamma)
        for name in "ABCD":
            assert abs(getattr(printed, name) - derived[name]) < mpf(10) ** -60


@pytest.mark.parametrize("family", list(GraphFamily))
def test_float_path_agrees_with_exact_path(family):
    assert path_mismatches(family, 8) == []
    assert [s.n for s in float_path_states(family, 4)] == [1, 2, 3, 4]


def test_fixed_point_enclosures():
    quick = ratio_fixed_point(HANOI, 1)
    assert quick.stage == 2

    hanoi = ratio_fixed_point(HANOI, 16)
    assert hanoi.stage == 4
    with working_precision(hanoi.precision_bits):
        assert abs(hanoi.value - mpf("0.9176811825212464")) < mpf(10) ** -16
        assert hanoi.radius < mpf(10) ** -16

    sierpx = ratio_fixed_point(SIERPX, 11)
    assert sierpx.stage == 3
    with working_precision(sierpx.precision_bits):
        assert abs(sierpx.value - mpf("0.86547665208")) < mpf(10) ** -11


def test_fixed_point_digit_guard():
    with pytest.raises(ResourceLimitError):
        ratio_fixed_point(HANOI, 121)
    with pytest.raises(DomainError):
        ratio_fixed_point(HANOI, 0)


def test_hanoi_limit_reached_once_epsilon_is_small():
    for state in exact_ratio_states(HANOI, 6):
        if state.epsilon < mpf(10) ** -16:
            with working_precision(state.precision_bits):
                assert abs(state.alpha - mpf("0.9176811825212464")) < mpf(10) ** -15


def test_sandwich_for_stage_one():
    bounds = bound_m_hanoi(1, 1)
    with working_precision(bounds.precision_bits):
        assert abs(mp.exp(bounds.log_lower) - mpf("121.3")) < mpf("0.1")
        assert abs(mp.exp(bounds.log_upper) - mpf("130.1")) < mpf("0.1")
    assert bounds.exact_m == 125
    assert bounds.verdict is True


def test_sandwich_for_stage_two():
    bounds = bound_m_hanoi(1, 2)
    assert bounds.exact_m == 4007754
    assert bounds.verdict is True
    with working_precision(bounds.precision_bits):
        assert bounds.log_lower < mp.log(4007754) < bounds.log_upper


def test_sandwich_middle_factor_vanishes_when_k_equals_n():
    records = iterate(HANOI, 3)
    bounds = bound_m_hanoi(3, 3, records)
    state = ratios_from_counts(records[3].counts, bounds.precision_bits, n=3)
    with working_precision(bounds.precision_bits):
        expected = mp.log(records[3].counts.x) + 3 * mp.log(1 + state.alpha)
        assert abs(bounds.log_lower - expected) < mpf(10) ** -100


def test_sandwich_rejects_k_above_n():
    with pytest.raises(DomainError):
        bound_m_hanoi(2, 1)


def test_sandwich_beyond_exact_ledger_has_no_verdict():
    bounds = bound_m_hanoi(2, 14)
    assert bounds.exact_m is None
    assert bounds.verdict is None
    assert bounds.log_lower < bounds.log_upper


def test_sandwich_table_has_no_violations():
    table = sandwich_table(7)
    assert len(table) == 28
    assert all(bounds.verdict is True for bounds in table)


def test_entropy_bounds_stage_one():
    hanoi = entropy_bounds(HANOI, 1)
    assert abs(hanoi.lower - mpf("0.5743")) < mpf("0.0001")
    assert abs(hanoi.upper - mpf("0.5810")) < mpf("0.0001")
    assert hanoi.lower < mpf("0.57646") < hanoi.upper

    sierpx = entropy_bounds(SIERPX, 1)
    assert abs(sierpx.lower - mpf("0.67103")) < mpf("0.0001")
    assert abs(sierpx.upper - mpf("0.67392")) < mpf("0.0001")
    assert sierpx.lower < mpf("0.67195") < sierpx.upper


def test_entropy_bounds_hundred_digits():
    hanoi = entropy_bounds(HANOI, 7)
    assert hanoi.agreed_digits >= 100
    assert hanoi.precision_bits >= 1024

    sierpx = entropy_bounds(SIERPX, 6)
    assert sierpx.agreed_digits >= 100


def test_entropy_bounds_without_escalation():
    with pytest.raises(PrecisionInsufficientError) as info:
        entropy_bounds(HANOI, 7, precision_bits=512, auto_escalate=False)
    assert info.value.precision_bits == 512


def test_entropy_bounds_domain():
    with pytest.raises(DomainError):
        entropy_bounds(HANOI, 0)
    with pytest.raises(ResourceLimitError):
        entropy_bounds(HANOI, 13)
    with pytest.raises(ResourceLimitError, match="exact cap of 3"):
        entropy_bounds(HANOI, 4, exact_cap=3)


def test_precision_doubling_is_stable():
    single = entropy_bounds(HANOI, 4, 512)
    double = entropy_bounds(HANOI, 4, 1024)
    unit = mpf(10) ** (-single.agreed_digits)
    with working_precision(1024):
        assert abs(single.lower - double.lower) < unit
        assert abs(single.upper - double.upper) < unit


@pytest.mark.parametrize("family", list(GraphFamily))
def test_bounds_nest_as_k_grows(family):
    assert nesting_violations(family, 5) == []


def test_entropy_hanoi():
    estimate = entropy(HANOI, 19)
    assert estimate.value == "0.5764643016505283752"
    assert estimate.k <= 5
    with working_precision(estimate.precision_bits):
        assert estimate.lower < mpf("0.57646430165052837528566855") < estimate.upper
        assert abs(estimate.mu_per_edge - estimate.mu_per_vertex * 2 / 3) < mpf(10) ** -100
        assert abs(estimate.mu_per_edge - mpf("0.3843095344336856")) < mpf(10) ** -15


def test_entropy_sierpx():
    estimate = entropy(SIERPX, 16)
    with working_precision(estimate.precision_bits):
        assert abs(mpf(estimate.value) - mpf("0.6719549820008285")) <= mpf(10) ** -16
        assert abs(estimate.mu_per_edge - estimate.mu_per_vertex * 7 / 15) < mpf(10) ** -100


def test_entropy_hundred_digits_uses_stage_seven():
    estimate = entropy(HANOI, 100)
    assert estimate.k == 7
    assert len(estimate.value) == 102
    assert estimate.value.startswith("0.576464301650528375")


def test_entropy_digit_guard():
    with pytest.raises(ResourceLimitError):
        entropy(HANOI, 121)


def test_entropy_stops_at_the_exact_cap():
    with pytest.raises(ConvergenceError, match="k = 2"):
        entropy(HANOI, 19, exact_cap=2)
    assert entropy(HANOI, 19, exact_cap=5).value == "0.5764643016505283752"


@pytest.mark.parametrize("family", list(GraphFamily))
def test_accumulated_log_matches_direct_log(family):
    records = iterate(family, 5)
    accumulated = log_x_accumulated(family, 5, 512)
    with working_precision(512):
        assert abs(accumulated - mp.log(records[5].counts.x)) < mpf(10) ** -100


def test_ratio_properties_hanoi_through_cap():
    assert ratio_properties(HANOI, 12) == []


def test_ratio_properties_sierpx():
    assert ratio_properties(SIERPX, 10) == []


def test_ratio_properties_need_two_stages():
    with pytest.raises(DomainError):
        ratio_properties(HANOI, 1)


def test_rounding_noise_shrinks_with_precision():
    with working_precision(128):
        assert asymptotics.rounding_noise(1024) < asymptotics.rounding_noise(512)
