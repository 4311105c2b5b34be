"""High-precision ratio dynamics, matching-count bounds and entropy constants.

The ratios alpha = y/x, beta = z/y, gamma = w/z of a boundary-count vector obey

    alpha' = alpha * B / A,   beta' = alpha * C / B,   gamma' = alpha * D / C

where A, B, C, D are x', y', z', w' evaluated at (1, alpha, alpha*beta,
alpha*beta*gamma) and divided by 1, alpha, alpha^2, alpha^3. All reals are
mpmath values computed inside ``working_precision``.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

from mpmath import mp, mpf
from pydantic import ValidationError

from app.config import get_limits, get_settings
from app.exceptions import ConvergenceError, DomainError, PrecisionInsufficientError, ResourceLimitError
from app.models import (
    BoundaryCountVector,
    EntropyBounds,
    EntropyEstimate,
    FixedPointEnclosure,
    GraphFamily,
    MatchingCountBounds,
    RatioState,
    RatioUpdateCoefficients,
    StageRecord,
)
from app.services.recursion import STRUCTURAL, iterate
from app.utils.helpers import (
    bits_to_digits,
    common_decimal_prefix,
    digits_to_bits,
    truncate_decimal,
    working_precision,
)

logger = logging.getLogger(__name__)

# Exponents of (alpha, beta, gamma).
RatioMonomial = Tuple[int, int, int]
RatioTerms = Sequence[Tuple[int, RatioMonomial]]

HANOI_RATIO_POLYNOMIALS: Dict[str, RatioTerms] = {
    "A": [
        (8, (0, 0, 0)), (24, (1, 0, 0)), (6, (1, 1, 0)), (30, (2, 0, 0)), (18, (2, 1, 0)),
        (3, (2, 2, 0)), (14, (3, 0, 0)), (15, (3, 1, 0)), (6, (3, 2, 0)), (1, (3, 3, 0)),
    ],
    "B": [
        (8, (0, 0, 0)), (8, (0, 1, 0)), (2, (0, 1, 1)), (16, (1, 0, 0)), (24, (1, 1, 0)),
        (6, (1, 1, 1)), (6, (1, 2, 0)), (2, (1, 2, 1)), (10, (2, 0, 0)), (20, (2, 1, 0)),
        (5, (2, 1, 1)), (11, (2, 2, 0)), (4, (2, 2, 1)), (2, (2, 3, 0)), (1, (2, 3, 1)),
    ],
    "C": [
        (8, (0, 0, 0)), (16, (0, 1, 0)), (4, (0, 1, 1)), (10, (0, 2, 0)), (6, (0, 2, 1)),
        (1, (0, 2, 2)), (8, (1, 0, 0)), (22, (1, 1, 0)), (6, (1, 1, 1)), (20, (1, 2, 0)),
        (12, (1, 2, 1)), (2, (1, 2, 2)), (5, (1, 3, 0)), (4, (1, 3, 1)), (1, (1, 3, 2)),
    ],
    "D": [
        (8, (0, 0, 0)), (24, (0, 1, 0)), (6, (0, 1, 1)), (30, (0, 2, 0)), (18, (0, 2, 1)),
        (3, (0, 2, 2)), (14, (0, 3, 0)), (15, (0, 3, 1)), (6, (0, 3, 2)), (1, (0, 3, 3)),
    ],
}


def _precision(precision_bits: Optional[int]) -> int:
    return get_settings().default_precision_bits if precision_bits is None else precision_bits


def rounding_noise(precision_bits: int) -> mpf:
    """Absolute error budget for quantities of order one at this precision."""
    return mpf(2) ** (16 - precision_bits)


# ---------------------------------------------------------------------------
# Ratio states
# ---------------------------------------------------------------------------

def ratios_from_counts(
    v: BoundaryCountVector,
    precision_bits: Optional[int] = None,
    family: GraphFamily = GraphFamily.HANOI,
    n: int = 1,
) -> RatioState:
    """Exact-path ratios of one boundary-count vector, rounded once to `precision_bits`."""
    bits = _precision(precision_bits)
    x, y, z, w = v.as_tuple()
    if x == 0 or y == 0 or z == 0:
        raise DomainError(
            f"ratios are defined for stage n >= 1 only; {v.as_tuple()[:3]} has a zero denominator"
        )

    with working_precision(bits):
        alpha = mpf(y) / x
        beta = mpf(z) / y
        gamma = mpf(w) / z
        epsilon = gamma - alpha

    try:
        return RatioState(
            family=family, n=n, alpha=alpha, beta=beta, gamma=gamma,
            epsilon=epsilon, precision_bits=bits,
        )
    except ValidationError as e:
        raise DomainError(f"counts do not give ratios in (0, 1): {e}")


def ratios_from_record(record: StageRecord, precision_bits: Optional[int] = None) -> RatioState:
    return ratios_from_counts(record.counts, precision_bits, family=record.family, n=record.n)


def exact_ratio_states(
    family: GraphFamily,
    n_max: int,
    precision_bits: Optional[int] = None,
    exact_cap: Optional[int] = None,
) -> List[RatioState]:
    """Ratio states for stages 1..n_max from the exact integer ledger."""
    if n_max < 1:
        raise DomainError(f"ratios are defined for stage n >= 1 only, got n = {n_max}")
    records = iterate(family, n_max, exact_cap)
    return [ratios_from_record(record, precision_bits) for record in records[1:]]


def _evaluate_ratio_terms(terms: RatioTerms, alpha: mpf, beta: mpf, gamma: mpf) -> mpf:
    total = mpf(0)
    for coefficient, (i, j, k) in terms:
        total += coefficient * alpha ** i * beta ** j * gamma ** k
    return total


def normalized_structural_coefficients(family: GraphFamily, alpha, beta, gamma) -> Dict[str, mpf]:
    """A, B, C, D obtained by normalizing the structural recursion at x = 1."""
    y = alpha
    z = alpha * beta
    w = z * gamma
    x_next, y_next, z_next, w_next = STRUCTURAL[family](mpf(1), y, z, w)
    return {
        "A": x_next,
        "B": y_next / alpha,
        "C": z_next / alpha ** 2,
        "D": w_next / alpha ** 3,
    }


def update_coefficients(family: GraphFamily, state: RatioState) -> RatioUpdateCoefficients:
    with working_precision(state.precision_bits):
        if family is GraphFamily.HANOI:
            values = {
                name: _evaluate_ratio_terms(terms, state.alpha, state.beta, state.gamma)
                for name, terms in HANOI_RATIO_POLYNOMIALS.items()
            }
        else:
            values = normalized_structural_coefficients(family, state.alpha, state.beta, state.gamma)
    return RatioUpdateCoefficients(**values)


def ratio_step(family: GraphFamily, s: RatioState) -> RatioState:
    """Advance a ratio state by one stage without touching the integer ledger."""
    if s.family is not family:
        raise DomainError(f"state belongs to {s.family.value}, not {family.value}")

    bits = s.precision_bits
    coefficients = update_coefficients(family, s)
    with working_precision(bits):
        alpha = s.alpha * coefficients.B / coefficients.A
        beta = s.alpha * coefficients.C / coefficients.B
        gamma = s.alpha * coefficients.D / coefficients.C
        tolerance = mpf(2) ** (8 - bits)
        broken = alpha > beta + tolerance or beta > gamma + tolerance
        epsilon = gamma - alpha

    if broken:
        logger.error(f"Ratio ordering broken at {family.value} stage {s.n + 1} with {bits} bits")
        raise PrecisionInsufficientError(
            f"alpha < beta < gamma fails at stage {s.n + 1} beyond rounding tolerance; "
            f"increase the precision above {bits} bits",
            bits,
        )

    try:
        return RatioState(
            family=family, n=s.n + 1, alpha=alpha, beta=beta, gamma=gamma,
            epsilon=epsilon, precision_bits=bits,
        )
    except ValidationError as e:
        raise PrecisionInsufficientError(f"ratio state left (0, 1) at stage {s.n + 1}: {e}", bits)


def float_path_states(
    family: GraphFamily,
    n_max: int,
    precision_bits: Optional[int] = None,
) -> List[RatioState]:
    """Stages 1..n_max by ratio_step, seeded with the exact stage-1 ratios."""
    if n_max < 1:
        raise DomainError(f"ratios are defined for stage n >= 1 only, got n = {n_max}")
    state = ratios_from_record(iterate(family, 1)[1], precision_bits)
    states = [state]
    while state.n < n_max:
        state = ratio_step(family, state)
        states.append(state)
    return states


def path_mismatches(
    family: GraphFamily,
    n_max: int,
    precision_bits: Optional[int] = None,
    exact_cap: Optional[int] = None,
) -> List[str]:
    """Stages where the float path and the exact path differ by more than the working digits allow."""
    bits = _precision(precision_bits)
    exact = exact_ratio_states(family, n_max, bits, exact_cap)
    floating = float_path_states(family, n_max, bits)

    mismatches = []
    with working_precision(bits):
        tolerance = mpf(10) ** (5 - bits_to_digits(bits))
        for e, f in zip(exact, floating):
            for name in ("alpha", "beta", "gamma"):
                if abs(getattr(e, name) - getattr(f, name)) > tolerance:
                    mismatches.append(f"stage {e.n}: {name} differs between exact and float paths")
    return mismatches


def ratio_fixed_point(
    family: GraphFamily,
    target_digits: int,
    precision_bits: Optional[int] = None,
) -> FixedPointEnclosure:
    """Enclose the common limit of alpha, beta, gamma to within 10^-target_digits."""
    limits = get_limits()
    if target_digits < 1:
        raise DomainError(f"target digits must be positive, got {target_digits}")
    if target_digits > limits.max_target_digits:
        raise ResourceLimitError(
            f"{target_digits} digits exceeds the guard of {limits.max_target_digits}"
        )

    bits = max(_precision(precision_bits), digits_to_bits(target_digits))
    while True:
        try:
            return _enclose_fixed_point(family, target_digits, bits)
        except PrecisionInsufficientError:
            if bits * 2 > limits.max_precision_bits:
                raise
            bits *= 2
            logger.info(f"Escalating fixed-point precision to {bits} bits")


def _enclose_fixed_point(family: GraphFamily, target_digits: int, bits: int) -> FixedPointEnclosure:
    state = ratios_from_record(iterate(family, 1)[1], bits)
    for _ in range(get_limits().fixed_point_max_iterations):
        state = ratio_step(family, state)
        with working_precision(bits):
            noise = rounding_noise(bits)
            gap = state.gamma - state.alpha
            if gap + 2 * noise < mpf(10) ** (-target_digits):
                # alpha increases and gamma decreases from stage 2 on
                return FixedPointEnclosure(
                    family=family,
                    stage=state.n,
                    value=(state.alpha + state.gamma) / 2,
                    radius=gap / 2 + noise,
                    target_digits=target_digits,
                    precision_bits=bits,
                )
            if gap < 4 * noise:
                raise PrecisionInsufficientError(
                    f"{bits} bits cannot resolve {target_digits} digits of the ratio limit", bits
                )
    raise ConvergenceError(
        f"no enclosure of width 10^-{target_digits} within "
        f"{get_limits().fixed_point_max_iterations} iterations"
    )


# ---------------------------------------------------------------------------
# Matching-count bounds on H_n
# ---------------------------------------------------------------------------

def _sandwich_holds(counts_k: BoundaryCountVector, counts_n: BoundaryCountVector, k: int, n: int) -> bool:
    """lower < m(H_n) < upper decided on integers after clearing denominators."""
    xk, yk, zk, _ = counts_k.as_tuple()
    xn, yn, zn, wn = counts_n.as_tuple()
    m = counts_n.total()
    power = 3 ** (n - k)
    exponent = 3 * (power - 1) // 2

    # alpha_k^2 + 2 alpha_k + 2 = (yk^2 + 2 xk yk + 2 xk^2) / xk^2 and 1 + alpha_n = (xn + yn) / xn
    lower_num = (yk * yk + 2 * xk * yk + 2 * xk * xk) ** exponent * (xn + yn) ** 3
    lower_den = xn ** 3
    shift = power - 2 * exponent
    if shift >= 0:
        lower_num *= xk ** shift
    else:
        lower_den *= xk ** (-shift)

    # beta_k = zk / yk and 1 + gamma_n = (zn + wn) / zn
    upper_num = xk ** power * (zk * zk + 2 * yk * zk + 2 * yk * yk) ** exponent * (zn + wn) ** 3
    upper_den = yk ** (2 * exponent) * zn ** 3

    return lower_num < m * lower_den and m * upper_den < upper_num


def bound_m_hanoi(
    k: int,
    n: int,
    records: Optional[List[StageRecord]] = None,
    precision_bits: Optional[int] = None,
) -> MatchingCountBounds:
    """Natural logs of the two-sided bounds on m(H_n) built from stage k.

    Beyond the exact ledger the stage-n ratios come from the float path and no
    verdict is given.
    """
    if k < 1 or k > n:
        raise DomainError(f"bounds need 1 <= k <= n, got k = {k}, n = {n}")
    bits = _precision(precision_bits)
    if records is None:
        records = iterate(GraphFamily.HANOI, min(n, get_limits().exact_cap))
    if k >= len(records):
        raise ResourceLimitError(f"stage k = {k} is beyond the exact ledger (n <= {len(records) - 1})")
    if records[k].family is not GraphFamily.HANOI:
        raise DomainError("matching-count bounds are defined for the Hanoi family")

    state_k = ratios_from_record(records[k], bits)
    if n < len(records):
        state_n = ratios_from_record(records[n], bits)
        exact_m = records[n].m
        verdict = _sandwich_holds(records[k].counts, records[n].counts, k, n)
    else:
        state_n = ratios_from_record(records[-1], bits)
        while state_n.n < n:
            state_n = ratio_step(GraphFamily.HANOI, state_n)
        exact_m = None
        verdict = None

    power = 3 ** (n - k)
    exponent = 3 * (power - 1) // 2
    with working_precision(bits):
        log_x = mp.log(records[k].counts.x)
        alpha_k, beta_k = state_k.alpha, state_k.beta
        log_lower = (
            power * log_x
            + exponent * mp.log(alpha_k ** 2 + 2 * alpha_k + 2)
            + 3 * mp.log(1 + state_n.alpha)
        )
        log_upper = (
            power * log_x
            + exponent * mp.log(beta_k ** 2 + 2 * beta_k + 2)
            + 3 * mp.log(1 + state_n.gamma)
        )

    if verdict is False:
        logger.warning(f"Sandwich bound fails for k = {k}, n = {n}")
    return MatchingCountBounds(
        k=k, n=n, log_lower=log_lower, log_upper=log_upper,
        exact_m=exact_m, verdict=verdict, precision_bits=bits,
    )


def sandwich_table(n_max: Optional[int] = None, precision_bits: Optional[int] = None) -> List[MatchingCountBounds]:
    """bound_m_hanoi for every 1 <= k <= n <= n_max."""
    n_max = get_limits().sandwich_stage_cap if n_max is None else n_max
    if n_max < 1:
        raise DomainError(f"n_max must be at least 1, got {n_max}")
    records = iterate(GraphFamily.HANOI, n_max)
    return [
        bound_m_hanoi(k, n, records, precision_bits)
        for n in range(1, n_max + 1)
        for k in range(1, n + 1)
    ]


# ---------------------------------------------------------------------------
# Entropy
# ---------------------------------------------------------------------------

def _entropy_interval(family: GraphFamily, counts: BoundaryCountVector, k: int, bits: int) -> Tuple[mpf, mpf]:
    x, y, z, _ = counts.as_tuple()
    with working_precision(bits):
        alpha = mpf(y) / x
        beta = mpf(z) / y
        log_x = mp.log(x)
        if family is GraphFamily.HANOI:
            base = log_x / 3 ** (k + 1)
            lower = base + mp.log(alpha ** 2 + 2 * alpha + 2) / (2 * 3 ** k)
            upper = base + mp.log(beta ** 2 + 2 * beta + 2) / (2 * 3 ** k)
        else:
            scale = 7 * 3 ** k
            lower = (2 * log_x + mp.log(alpha ** 2 + 8 * alpha + 8) + 2 * mp.log(alpha ** 2 + 2 * alpha + 2)) / scale
            upper = (2 * log_x + mp.log(beta ** 2 + 8 * beta + 8) + 2 * mp.log(beta ** 2 + 2 * beta + 2)) / scale
    return lower, upper


def entropy_bounds(
    family: GraphFamily,
    k: int,
    precision_bits: Optional[int] = None,
    auto_escalate: bool = True,
    exact_cap: Optional[int] = None,
) -> EntropyBounds:
    """Two-sided bounds on the entropy per vertex from the exact stage-k counts."""
    limits = get_limits()
    cap = limits.exact_cap if exact_cap is None else exact_cap
    if k < 1:
        raise DomainError(f"entropy bounds need k >= 1, got {k}")
    if k > cap:
        raise ResourceLimitError(f"stage k = {k} exceeds the exact cap of {cap}")

    bits = _precision(precision_bits)
    counts = iterate(family, k, cap)[k].counts
    while True:
        lower, upper = _entropy_interval(family, counts, k, bits)
        with working_precision(bits):
            separated = upper - lower > rounding_noise(bits)
        if separated:
            break
        if not auto_escalate or bits * 2 > limits.max_precision_bits:
            logger.error(f"Entropy bounds for {family.value} k = {k} not separated at {bits} bits")
            raise PrecisionInsufficientError(
                f"{bits} bits cannot separate the stage-{k} entropy bounds from rounding noise", bits
            )
        bits *= 2
        logger.info(f"Escalating entropy precision to {bits} bits ({family.value}, k = {k})")

    decimals = max(bits_to_digits(bits) - 5, 1)
    agreed = max(common_decimal_prefix(lower, upper, decimals) - limits.guard_digits, 0)
    return EntropyBounds(
        family=family, k=k, lower=lower, upper=upper,
        agreed_digits=agreed, precision_bits=bits,
    )


def nesting_violations(family: GraphFamily, k_max: int, precision_bits: Optional[int] = None) -> List[str]:
    """Stages where the bound interval at k + 1 is not inside the interval at k."""
    intervals = [entropy_bounds(family, k, precision_bits) for k in range(1, k_max + 1)]
    violations = []
    for outer, inner in zip(intervals, intervals[1:]):
        bits = max(outer.precision_bits, inner.precision_bits)
        with working_precision(bits):
            slack = rounding_noise(min(outer.precision_bits, inner.precision_bits))
            if inner.lower < outer.lower - slack or inner.upper > outer.upper + slack:
                violations.append(f"k = {inner.k}: interval not nested in k = {outer.k}")
    return violations


def entropy(
    family: GraphFamily,
    target_digits: int,
    precision_bits: Optional[int] = None,
    exact_cap: Optional[int] = None,
) -> EntropyEstimate:
    """Entropy per vertex to `target_digits` decimals from the smallest sufficient stage."""
    limits = get_limits()
    cap = limits.exact_cap if exact_cap is None else exact_cap
    if target_digits < 1:
        raise DomainError(f"target digits must be positive, got {target_digits}")
    if target_digits > limits.max_target_digits:
        raise ResourceLimitError(
            f"{target_digits} digits exceeds the guard of {limits.max_target_digits}; "
            f"request at most {limits.max_target_digits}"
        )

    bits = max(_precision(precision_bits), digits_to_bits(target_digits))
    bounds = None
    for k in range(1, cap + 1):
        bounds = entropy_bounds(family, k, bits, exact_cap=cap)
        if bounds.agreed_digits >= target_digits:
            break
    else:
        if bounds is None:
            raise ResourceLimitError(f"entropy needs an exact cap of at least 1, got {cap}")
        raise ConvergenceError(
            f"bounds up to k = {cap} agree on only {bounds.agreed_digits} digits; raise the exact cap"
        )

    limit = family.vertex_over_edge_limit
    with working_precision(bounds.precision_bits):
        mu_per_vertex = (bounds.lower + bounds.upper) / 2
        mu_per_edge = mu_per_vertex * limit.numerator / limit.denominator

    logger.info(f"{family.value} entropy to {target_digits} digits from k = {bounds.k}")
    return EntropyEstimate(
        family=family,
        k=bounds.k,
        value=truncate_decimal(bounds.lower, target_digits),
        mu_per_vertex=mu_per_vertex,
        mu_per_edge=mu_per_edge,
        digits=target_digits,
        lower=bounds.lower,
        upper=bounds.upper,
        precision_bits=bounds.precision_bits,
    )


def log_x_accumulated(family: GraphFamily, k: int, precision_bits: Optional[int] = None) -> mpf:
    """ln x_k via L_{n+1} = 3 L_n + ln A_n along the float path."""
    if k < 1:
        raise DomainError(f"k must be at least 1, got {k}")
    bits = _precision(precision_bits)
    record = iterate(family, 1)[1]
    state = ratios_from_record(record, bits)
    with working_precision(bits):
        total = mp.log(record.counts.x)
    while state.n < k:
        coefficients = update_coefficients(family, state)
        with working_precision(bits):
            total = 3 * total + mp.log(coefficients.A)
        state = ratio_step(family, state)
    return total


def ratio_properties(family: GraphFamily, n_max: Optional[int] = None) -> List[str]:
    """Ordering, monotonicity and contraction of the ratios on exact integers, n >= 2.

    Returns the list of violations; empty means every property holds.
    """
    n_max = get_limits().exact_cap if n_max is None else n_max
    if n_max < 2:
        raise DomainError(f"ratio properties start at stage 2, got n_max = {n_max}")
    records = iterate(family, n_max)
    violations = []

    for record in records[2:]:
        x, y, z, w = record.counts.as_tuple()
        if not 2 * y > x:
            violations.append(f"stage {record.n}: alpha <= 1/2")
        if not y * y < x * z:
            violations.append(f"stage {record.n}: alpha >= beta")
        if not z * z < y * w:
            violations.append(f"stage {record.n}: beta >= gamma")
        if not w < z:
            violations.append(f"stage {record.n}: gamma >= 1")

    for before, after in zip(records[2:], records[3:]):
        x0, y0, z0, w0 = before.counts.as_tuple()
        x1, y1, z1, w1 = after.counts.as_tuple()
        if not y1 * x0 > y0 * x1:
            violations.append(f"stage {after.n}: alpha did not increase")
        if not w1 * z0 < w0 * z1:
            violations.append(f"stage {after.n}: gamma did not decrease")

        # epsilon = (w x - y z) / (z x); numerators are exact, the ratio of the two sides is far from 1
        with working_precision(128):
            epsilon_before = mpf(w0 * x0 - y0 * z0) / mpf(z0 * x0)
            epsilon_after = mpf(w1 * x1 - y1 * z1) / mpf(z1 * x1)
            contracted = epsilon_after < 2 * epsilon_before ** 2
        if not contracted:
            violations.append(f"stage {after.n}: epsilon did not contract below 2 * epsilon^2")

    if violations:
        logger.warning(f"{len(violations)} ratio property violations for {family.value}")
    return violations
