import pytest

from app.config import get_limits
from app.models import GraphFamily, RunConfig
from app.services import recursion


@pytest.fixture
def make_config():
    """RunConfig factory with small caps so verify runs stay quick."""
    limits = get_limits()

    def factory(family=None, **overrides):
        values = dict(
            family=family,
            precision_bits=512,
            oracle_steps=limits.oracle_steps,
            oracle_seconds=limits.oracle_seconds,
            exact_cap=4,
            build_cap=2,
        )
        values.update(overrides)
        return RunConfig(**values)

    return factory


@pytest.fixture
def corrupted_hanoi(monkeypatch):
    """Hanoi stepper that returns a wrong x from stage 2 on."""
    original = recursion.STEP_FUNCTIONS[GraphFamily.HANOI]

    def corrupted(v, stage=None):
        result = original(v, stage)
        if stage == 2:
            return result.copy(update={"x": result.x + 1})
        return result

    monkeypatch.setitem(recursion.STEP_FUNCTIONS, GraphFamily.HANOI, corrupted)
    return corrupted
