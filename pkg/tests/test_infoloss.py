import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from murspin.infoloss import (
    INFINITE_LOSS,
    ProbVector,
    bias_from_cells,
    device_loss_by_states,
    device_loss_closed,
    mixed_state_bias,
    noisy_decomposition,
    relative_entropy,
    s_cx,
    visibility,
)
from murspin.minimize import a0_spin_one_trig, a0_spin_three_halves
from murspin.qcoeff import AngleGrid, LambdaWeights, unbiased_grid
from murspin.spin import SpinValue, direction

from conftest import grid_strategy, simplex_strategy

probs = st.lists(st.floats(0.0, 1.0), min_size=2, max_size=6).filter(lambda v: sum(v) > 1e-3)


def test_prob_vector_renormalizes_small_drift():
    p = ProbVector([0.5, 0.5 + 5e-11])
    assert abs(p.p.sum() - 1) < 1e-15
    with pytest.raises(ValueError):
        ProbVector([0.5, 0.6])
    with pytest.raises(ValueError):
        ProbVector([1.1, -0.1])


@settings(max_examples=100, deadline=None)
@given(a=probs, b=probs)
def test_relative_entropy_properties(a, b):
    n = min(len(a), len(b))
    p = np.asarray(a[:n]) / sum(a[:n]) if sum(a[:n]) > 0 else None
    q = np.asarray(b[:n]) / sum(b[:n]) if sum(b[:n]) > 0 else None
    if p is None or q is None:
        return
    val = relative_entropy(p, q)
    assert val >= 0
    assert relative_entropy(p, p) == 0.0


def test_relative_entropy_values():
    assert relative_entropy([1, 0], [0.5, 0.5]) == 1.0
    assert relative_entropy([1, 0], [0, 1]) == INFINITE_LOSS
    assert math.isclose(relative_entropy([0.5, 0.5], [0.25, 0.75]), 0.5 * math.log2(2) + 0.5 * math.log2(2 / 3))


def test_spin_half_visibility():
    lam = LambdaWeights.delta("1/2", "1/2")
    assert abs(visibility("1/2", lam, None) - 0.75) < 1e-15
    assert abs(device_loss_closed("1/2", lam, None) - math.log2(4 / 3)) < 1e-14


@pytest.mark.parametrize("twice", range(1, 7))
@settings(max_examples=15, deadline=None)
@given(data=st.data(), theta=st.floats(0, math.pi), phi=st.floats(0, 2 * math.pi))
def test_closed_form_equals_state_maximum(twice, data, theta, phi):
    spin = SpinValue(twice)
    grid = data.draw(grid_strategy(spin))
    lam = data.draw(simplex_strategy(spin.dim))
    closed = device_loss_closed(spin, lam, grid)
    assert abs(device_loss_by_states(spin, lam, grid, direction(theta, phi)) - closed) < 1e-9


def test_direction_independence():
    spin = SpinValue(3)
    grid = AngleGrid.from_a(spin, 0.55)
    lam = (0.4, 0.3, 0.2, 0.1)
    vals = [device_loss_by_states(spin, lam, grid, direction(t, p)) for t, p in [(0, 0), (0.4, 1), (2.0, 5.5), (math.pi, 0)]]
    assert max(vals) - min(vals) < 1e-12


@pytest.mark.parametrize("twice", range(1, 6))
def test_noisy_decomposition(twice):
    spin = SpinValue(twice)
    lam = np.linspace(1, 2, spin.dim)
    lam /= lam.sum()
    dec = noisy_decomposition(spin, lam, None, direction(0.8, 0.3))
    assert dec.reconstruction_error() < 1e-12
    assert np.abs(dec.noise_elements.sum(axis=0) - np.eye(spin.dim)).max() < 1e-10
    for e in dec.noise_elements:
        assert np.linalg.eigvalsh(e).min() > -1e-12
    assert abs(dec.visibility - visibility(spin, lam, None)) < 1e-15


def test_spin_one_optimal_visibility():
    a = a0_spin_one_trig()
    eta = visibility(1, LambdaWeights.delta(1, 1), AngleGrid.from_a(1, a))
    assert abs(eta - a * (3 - a * a) / 2) < 1e-14


def test_bias_zero_on_unbiased_grid():
    for twice in range(1, 9):
        spin = SpinValue(twice)
        assert mixed_state_bias(spin, LambdaWeights.uniform(spin), unbiased_grid(spin)) < 1e-13


def test_bias_spin_three_halves():
    a = a0_spin_three_halves()
    grid = AngleGrid.from_a("3/2", a)
    val = mixed_state_bias("3/2", LambdaWeights.delta("3/2", "3/2"), grid)
    assert abs(val - 0.5 * math.log2(1 / (4 * a * (1 - a)))) < 1e-12
    assert abs(val - 0.0644280655) < 1e-9


def test_bias_spin_one_matches_cell_formula():
    # cells are (1-a)/2, a, (1-a)/2 in probability; bias = (2/3) log2(2/(3(1-a))) + (1/3) log2(1/(3a))
    a = a0_spin_one_trig()
    grid = AngleGrid.from_a(1, a)
    val = mixed_state_bias(1, LambdaWeights.delta(1, 1), grid)
    hand = (2 / 3) * math.log2(2 / (3 * (1 - a))) + (1 / 3) * math.log2(1 / (3 * a))
    assert abs(val - hand) < 1e-12
    assert abs(val - bias_from_cells(grid)) < 1e-12
    assert abs(val - 0.0371787727) < 1e-9


def test_bias_independent_of_lambda():
    grid = AngleGrid.from_a("3/2", 0.5)
    b1 = mixed_state_bias("3/2", LambdaWeights.delta("3/2", "3/2"), grid)
    b2 = mixed_state_bias("3/2", LambdaWeights.uniform("3/2"), grid)
    assert abs(b1 - b2) < 1e-13


def test_s_cx():
    assert s_cx(0.5, 0.0) == 0.0
    assert math.isclose(s_cx(0.5, 1.0), math.log2(2 / 1.5))
    with pytest.raises(ValueError):
        s_cx(1.0, 0.5)
