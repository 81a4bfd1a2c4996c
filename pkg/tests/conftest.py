from __future__ import annotations

from hypothesis import strategies as st

from psieq.generate import GenSpec, random_game


@st.composite
def small_games(draw, max_n=4, max_degree=3, max_resources=4, max_strategies=3, rational_weights=True):
    """A random explicit game plus a random state, via the seeded generator."""
    resources = draw(st.integers(1, max_resources))
    spec = GenSpec(
        n=draw(st.integers(1, max_n)),
        degree=draw(st.integers(1, max_degree)),
        resources=resources,
        strategies=draw(st.integers(1, min(max_strategies, 2**resources - 1))),
        weight_range=(1, 4),
        coeff_range=(1, 3),
        density=draw(st.sampled_from([0.3, 0.6, 1.0])),
        rational_weights=rational_weights and draw(st.booleans()),
    )
    return random_game(spec, draw(st.integers(0, 2**32)))


# --- acceptance summary ----------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
