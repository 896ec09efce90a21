import numpy as np
import pytest
from hypothesis import strategies as st

from murspin.qcoeff import AngleGrid
from murspin.spin import SpinValue

ACCEPTANCE_LINES: list = []


def grid_from_weights(spin: SpinValue, raw) -> AngleGrid:
    """Symmetric grid whose cell widths are proportional to 0.5 + raw[k].

    Every cell is at least a third of the equal-width cell, which keeps the
    smallest q-coefficients well above rounding level.
    """
    d = spin.dim
    half = (d + 1) // 2
    w = 0.5 + np.asarray(raw[:half], dtype=float)
    widths = np.concatenate([w, w[: d // 2][::-1]])
    widths = 2 * widths / widths.sum()
    c = 1 - np.concatenate([[0.0], np.cumsum(widths)])
    free = c[1 : 1 + spin.n_free_angles]
    return AngleGrid.from_free(spin, free)


def grid_strategy(spin: SpinValue):
    half = (spin.dim + 1) // 2
    return st.lists(st.floats(0.0, 1.0), min_size=half, max_size=half).map(
        lambda raw: grid_from_weights(spin, raw)
    )


def simplex_strategy(dim: int):
    return st.lists(st.floats(0.0, 1.0), min_size=dim, max_size=dim).filter(lambda v: sum(v) > 1e-3).map(
        lambda v: tuple(np.asarray(v) / sum(v))
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
