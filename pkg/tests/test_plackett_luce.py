"""Plackett-Luce core: oracle checks against brute force and finite differences."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plrank.errors import CapacityError
from plrank.plackett_luce import (
    enumerate_rankings,
    log_probability,
    mode_ranking,
    nll_and_gradient_matrix,
    nll_gradient,
    sample_ranking,
)


def oracle_probability(ranking, scores):
    """Direct product form of the PL probability, no log-domain tricks."""
    v = [math.exp(w) for w in scores]
    remaining = list(ranking)
    p = 1.0
    while len(remaining) > 1:
        p *= v[remaining[0]] / sum(v[i] for i in remaining)
        remaining.pop(0)
    return p


def oracle_fd_gradient(ranking, scores, step=1e-5):
    """Central finite differences of -log P through log_probability."""
    scores = np.asarray(scores, dtype=np.float64)
    g = np.zeros_like(scores)
    for j in range(scores.size):
        up, down = scores.copy(), scores.copy()
        up[j] += step
        down[j] -= step
        g[j] = (log_probability(ranking, down) - log_probability(ranking, up)) / (2 * step)
    return g


# ---------------------------------------------------------------- probability


def test_two_item_probability():
    assert log_probability((0, 1), (math.log(2.0), 0.0)) == pytest.approx(math.log(2 / 3), abs=1e-12)


def test_uniform_scores_give_uniform_probability():
    for pi in itertools.permutations(range(3)):
        assert log_probability(pi, (0.0, 0.0, 0.0)) == pytest.approx(math.log(1 / 6), abs=1e-12)


def test_three_item_probability():
    # v = (3, 2, 1): P((0,1,2)) = (3/6) * (2/3) = 1/3
    w = (math.log(3.0), math.log(2.0), 0.0)
    assert log_probability((0, 1, 2), w) == pytest.approx(math.log(1 / 3), abs=1e-12)


def test_log_probability_matches_product_oracle():
    rng = np.random.default_rng(42)
    for _ in range(50):
        K = int(rng.integers(2, 7))
        w = rng.normal(scale=2.0, size=K)
        n = int(rng.integers(2, K + 1))
        pi = tuple(rng.permutation(K)[:n].tolist())
        assert log_probability(pi, w) == pytest.approx(math.log(oracle_probability(pi, w)), abs=1e-10)


def test_log_probability_is_nonpositive():
    rng = np.random.default_rng(3)
    for _ in range(100):
        K = int(rng.integers(2, 8))
        w = rng.normal(scale=5.0, size=K)
        pi = tuple(rng.permutation(K).tolist())
        assert log_probability(pi, w) <= 0.0


def test_partial_ranking_equals_restricted_scores():
    # Marginal property: the partial-ranking likelihood is the full PL
    # likelihood on the score vector restricted to the ranked items.
    rng = np.random.default_rng(7)
    for _ in range(20):
        w = rng.normal(size=6)
        pi = tuple(rng.permutation(6)[:3].tolist())
        restricted = w[list(pi)]
        assert log_probability(pi, w) == pytest.approx(
            log_probability((0, 1, 2), restricted), abs=1e-12
        )


def test_probability_input_validation():
    with pytest.raises(ValueError):
        log_probability((0, 3), (0.0, 0.0))  # index out of range
    with pytest.raises(ValueError):
        log_probability((0, 0), (0.0, 0.0))  # duplicate
    with pytest.raises(ValueError):
        log_probability((0,), (0.0, 0.0))  # too short for a likelihood
    with pytest.raises(ValueError):
        log_probability((0, 1), (np.inf, 0.0))  # non-finite score


@given(
    st.lists(st.floats(-30, 30), min_size=2, max_size=6),
    st.floats(-100, 100),
)
@settings(max_examples=50, deadline=None)
def test_translation_invariance(scores, shift):
    w = np.asarray(scores)
    pi = tuple(range(w.size))
    assert log_probability(pi, w) == pytest.approx(log_probability(pi, w + shift), abs=1e-10)


# ------------------------------------------------------------------- gradient


def test_gradient_two_item_hand_value():
    g = nll_gradient((0, 1), (0.0, 0.0))
    assert np.allclose(g, [-0.5, 0.5], atol=1e-12)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(100):
        K = int(rng.integers(2, 11))
        w = rng.normal(scale=2.0, size=K)
        n = int(rng.integers(2, K + 1))
        pi = tuple(rng.permutation(K)[:n].tolist())
        g = nll_gradient(pi, w)
        fd = oracle_fd_gradient(pi, w)
        assert np.max(np.abs(g - fd)) < 1e-6


def test_gradient_zero_outside_ranking():
    g = nll_gradient((2, 0), np.array([0.3, -1.0, 0.7, 2.0]))
    assert g[1] == 0.0 and g[3] == 0.0


@given(st.lists(st.floats(-20, 20), min_size=2, max_size=8))
@settings(max_examples=50, deadline=None)
def test_gradient_sums_to_zero_full_ranking(scores):
    w = np.asarray(scores)
    g = nll_gradient(tuple(range(w.size)), w)
    assert abs(g.sum()) < 1e-10


def test_gradient_sums_to_zero_partial_ranking():
    rng = np.random.default_rng(5)
    for _ in range(50):
        w = rng.normal(scale=3.0, size=8)
        n = int(rng.integers(2, 8))
        pi = tuple(rng.permutation(8)[:n].tolist())
        g = nll_gradient(pi, w)
        assert abs(g[list(pi)].sum()) < 1e-10


def test_gradient_matrix_agrees_with_single():
    rng = np.random.default_rng(13)
    w = rng.normal(size=(40, 5))
    nll, grad = nll_and_gradient_matrix(w)
    for r in range(40):
        assert -nll[r] == pytest.approx(log_probability((0, 1, 2, 3, 4), w[r]), abs=1e-12)
        assert np.allclose(grad[r], nll_gradient((0, 1, 2, 3, 4), w[r]), atol=1e-12)


def test_gradient_no_overflow_for_extreme_scores():
    w = np.array([700.0, -700.0, 0.0])
    g = nll_gradient((1, 2, 0), w)
    assert np.all(np.isfinite(g))


# ------------------------------------------------------------------- sampling


def test_sample_single_item():
    rng = np.random.default_rng(0)
    assert sample_ranking((0.25,), 1, rng) == (0,)


def test_sample_size_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_ranking((0.0, 1.0), 3, rng)


def test_sample_uniform_frequencies():
    rng = np.random.default_rng(101)
    draws = 60_000
    counts = {pi: 0 for pi in itertools.permutations(range(3))}
    for _ in range(draws):
        counts[sample_ranking((0.0, 0.0, 0.0), 3, rng)] += 1
    p = 1 / 6
    bound = 3 * math.sqrt(p * (1 - p) / draws)
    for pi, c in counts.items():
        assert abs(c / draws - p) < bound, pi


def test_sample_matches_enumerated_probabilities():
    w = (2.0, 1.0, 0.0)
    table = enumerate_rankings(w)
    rng = np.random.default_rng(202)
    draws = 60_000
    counts = {pi: 0 for pi in table}
    for _ in range(draws):
        counts[sample_ranking(w, 3, rng)] += 1
    for pi, p in table.items():
        bound = 3 * math.sqrt(p * (1 - p) / draws)
        assert abs(counts[pi] / draws - p) < bound, pi


def test_sample_prefix_marginal():
    # P(first item = i) must equal softmax(w)_i for truncated draws.
    w = np.array([1.0, 0.0, -1.0, 0.5])
    probs = np.exp(w) / np.exp(w).sum()
    rng = np.random.default_rng(303)
    draws = 60_000
    counts = np.zeros(4)
    for _ in range(draws):
        counts[sample_ranking(w, 2, rng)[0]] += 1
    for i in range(4):
        bound = 3 * math.sqrt(probs[i] * (1 - probs[i]) / draws)
        assert abs(counts[i] / draws - probs[i]) < bound, i


# ----------------------------------------------------------------------- mode


def test_mode_sorts_descending():
    assert mode_ranking((0.5, 2.0, 1.0)) == (1, 2, 0)


def test_mode_tie_break_ascending_index():
    assert mode_ranking((1.0, 1.0)) == (0, 1)


def test_mode_translation_invariant():
    rng = np.random.default_rng(17)
    for _ in range(20):
        w = rng.normal(size=5)
        assert mode_ranking(w) == mode_ranking(w + 123.456)


def test_mode_attains_enumeration_maximum():
    rng = np.random.default_rng(19)
    for _ in range(20):
        K = int(rng.integers(2, 6))
        w = rng.normal(size=K)
        table = enumerate_rankings(w)
        best = max(table, key=table.get)
        assert table[mode_ranking(w)] == pytest.approx(table[best], abs=1e-15)


# ---------------------------------------------------------------- enumeration


def test_enumerate_two_items():
    table = enumerate_rankings((math.log(2.0), 0.0))
    assert table[(0, 1)] == pytest.approx(2 / 3, abs=1e-12)
    assert table[(1, 0)] == pytest.approx(1 / 3, abs=1e-12)


def test_enumerate_uniform_three():
    table = enumerate_rankings((0.0, 0.0, 0.0))
    assert len(table) == 6
    for p in table.values():
        assert p == pytest.approx(1 / 6, abs=1e-12)


def test_enumerate_normalization():
    rng = np.random.default_rng(23)
    for _ in range(20):
        K = int(rng.integers(1, 7))
        w = rng.normal(scale=2.0, size=K)
        table = enumerate_rankings(w)
        assert len(table) == math.factorial(K)
        assert math.fsum(table.values()) == pytest.approx(1.0, abs=1e-12)


def test_enumerate_matches_product_oracle():
    rng = np.random.default_rng(29)
    w = rng.normal(size=4)
    table = enumerate_rankings(w)
    for pi, p in table.items():
        assert p == pytest.approx(oracle_probability(pi, w), rel=1e-10)


def test_enumerate_capacity_guard():
    with pytest.raises(CapacityError):
        enumerate_rankings(np.zeros(9))


def test_marginal_consistency():
    # Summing enumerate() over full rankings whose restriction to J keeps a
    # given order must equal the PL probability of that order on scores[J].
    rng = np.random.default_rng(31)
    for _ in range(10):
        K = int(rng.integers(3, 7))
        w = rng.normal(size=K)
        table = enumerate_rankings(w)
        J = tuple(rng.permutation(K)[: int(rng.integers(2, K + 1))].tolist())
        total = math.fsum(
            p for pi, p in table.items() if tuple(i for i in pi if i in set(J)) == J
        )
        assert math.log(total) == pytest.approx(log_probability(J, w), abs=1e-10)
