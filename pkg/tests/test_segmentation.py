import numpy as np
import pytest
from scipy import stats

from recomb.errors import FeasibilityError, ValidationError
from recomb.forward import coefficients_by_recursion
from recomb.genome import GenomeLayout, interval, linkset
from recomb.rng import stream
from recomb.segmentation import (SegmentationState, SegmentationTrajectory,
                                 backward_decomposition_gap, exact_distribution, exact_table,
                                 marginal_check, mc_distribution, mc_trajectories,
                                 segmentation_step, simulate_cut_times, transition_kernel)

from conftest import random_layout


def test_kernel_is_stochastic():
    K = transition_kernel([0.1, 0.2, 0.3, 0.15])
    assert np.allclose(np.asarray(K.sum(axis=1)).ravel(), 1.0, atol=1e-15)
    # absorbing full set, and only supersets are reachable
    assert K[15, 15] == 1.0
    rows, cols = K.nonzero()
    assert np.all(rows & ~cols == 0)


def test_instance_a(instance_a):
    assert np.max(np.abs(exact_distribution(instance_a, 2) - [0.49, 0.15, 0.32, 0.04])) <= 1e-12
    assert np.array_equal(exact_distribution(instance_a, 0), [1, 0, 0, 0])


def test_one_step_law():
    rng = np.random.default_rng(11)
    L = random_layout(rng, 4)
    law = exact_distribution(L, 1)
    assert abs(law[0] - (1 - sum(L.rho))) <= 1e-15
    for i, r in enumerate(L.rho):
        assert abs(law[1 << i] - r) <= 1e-15


def test_scalar_step_law(instance_a):
    rng = stream(1, 2)
    counts = np.zeros(4)
    for _ in range(20000):
        counts[segmentation_step(SegmentationState(0), instance_a, rng).cut_links] += 1
    p = np.array([0.7, 0.1, 0.2, 0.0])
    assert counts[3] == 0
    se = np.sqrt(p * (1 - p) / 20000)
    assert np.all(np.abs(counts / 20000 - p) <= 4 * se + 1e-12)


def test_absorbing_full_set(instance_a):
    rng = stream(3)
    state = SegmentationState(3, 4)
    for _ in range(5):
        state = segmentation_step(state, instance_a, rng)
        assert state.cut_links == 3


def test_oracle_against_recursion():
    rng = np.random.default_rng(12)
    for n_links in (1, 2, 3, 4, 5, 6):
        L = random_layout(rng, n_links)
        for t in (1, 3, 10, 30):
            assert exact_table(L, t).max_gap(coefficients_by_recursion(L, t)) <= 1e-12


def test_backward_decomposition():
    rng = np.random.default_rng(13)
    L = random_layout(rng, 4)
    for tau in range(8):
        assert backward_decomposition_gap(L, tau) <= 1e-14


def test_marginalisation_windows():
    rng = np.random.default_rng(14)
    L = random_layout(rng, 3)
    for t in range(11):
        assert marginal_check(L, t, linkset([0])) <= 1e-12
        assert marginal_check(L, t, L.full) == 0.0
        assert marginal_check(L, t, interval(1, 3)) <= 1e-12


def test_empty_window():
    L = GenomeLayout.from_rho([0.2, 0.3])
    law = exact_distribution(L, 5, window=0)
    assert law[0] == 1.0 and law.sum() == 1.0


def test_oracle_limits():
    with pytest.raises(FeasibilityError):
        exact_distribution(GenomeLayout.from_rho([0.01] * 13), 1)
    with pytest.raises(ValidationError):
        exact_distribution(GenomeLayout.from_rho([0.1, 0.1, 0.1]), 2, window=0b101)
    with pytest.raises(ValidationError):
        exact_distribution(GenomeLayout.from_rho([0.1]), -1)


def test_mc_matches_exact(instance_a):
    freq, se = mc_distribution(instance_a, 2, 200_000, seed=5)
    exact = exact_distribution(instance_a, 2)
    assert np.all(np.abs(freq - exact) <= 3 * se)


def test_mc_edge_cases(instance_a):
    freq, _ = mc_distribution(instance_a, 0, 100, seed=1)
    assert freq[0] == 1.0
    freq, _ = mc_distribution(instance_a, 4, 1, seed=1)
    assert sorted(freq) == [0, 0, 0, 1]
    with pytest.raises(ValidationError):
        mc_distribution(instance_a, 1, 0, seed=1)


def test_mc_independent_of_workers(instance_a):
    a = mc_trajectories(instance_a, 5, 5000, seed=9, workers=1, block=1000)
    b = mc_trajectories(instance_a, 5, 5000, seed=9, workers=4, block=1000)
    assert np.array_equal(a, b)


def test_cut_times_are_consistent():
    rng = np.random.default_rng(15)
    L = random_layout(rng, 5)
    cut = simulate_cut_times(L, 12, stream(4), 3000)
    for row in cut[:300]:
        traj = SegmentationTrajectory(tuple(int(c) for c in row))
        cut_so_far = 0
        for step, new in traj.steps:
            # at most one new cut per segment present before the step
            segs = [interval(lo, hi) for lo, hi in _segment_bounds(cut_so_far, L.n_links)]
            for s in segs:
                assert bin(new & s).count("1") <= 1
            assert new & cut_so_far == 0
            cut_so_far |= new
        assert cut_so_far == traj.final


def _segment_bounds(G, n):
    out, start = [], 0
    for i in range(n):
        if G >> i & 1:
            out.append((start, i))
            start = i + 1
    out.append((start, n))
    return [(a, b) for a, b in out if b > a]


def test_segments_cut_independently():
    # after a first-step cut at 3/2 the two sides are cut independently of each other
    L = GenomeLayout.from_rho([0.1, 0.15, 0.2])
    cut = mc_trajectories(L, 6, 100_000, seed=21)
    first_mid = cut[:, 1] == 1
    left = cut[first_mid, 0] >= 0
    right = cut[first_mid, 2] >= 0
    table = np.array([[np.sum(~left & ~right), np.sum(~left & right)],
                      [np.sum(left & ~right), np.sum(left & right)]])
    _, pvalue, _, _ = stats.chi2_contingency(table)
    assert pvalue > 1e-3
