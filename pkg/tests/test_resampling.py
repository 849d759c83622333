import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dlmsearch.resampling import (
    ResamplingError,
    WeightedFrontier,
    ess,
    expected_offspring,
    materialize,
    ssp_round,
    ssp_round_many,
    tilt_weights,
)
from dlmsearch.rng import Stream, derive, seed_key

scores_st = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=16)
# scores on a 1/100 grid, so distinct scores stay distinguishable after tilting
grid_scores_st = st.lists(st.integers(0, 100).map(lambda x: x / 100), min_size=1, max_size=16)


def test_tilt_lambda_zero_is_uniform():
    w = tilt_weights([0.1, 0.9, 0.5, 0.5], 0.0)
    assert np.allclose(w, 0.25, atol=1e-15)


def test_tilt_two_point():
    # exp(ln 3 * 1) : exp(0) = 3 : 1
    w = tilt_weights([1.0, 0.0], np.log(3.0))
    assert np.allclose(w, [0.75, 0.25], atol=1e-15)


def test_tilt_large_lambda_limit():
    w = tilt_weights([0.2, 0.9, 0.9, 0.1], 1e6)
    assert w.tolist() == [0.0, 0.5, 0.5, 0.0]


@pytest.mark.parametrize("bad", [[], [0.1, np.nan]])
def test_tilt_rejects_bad_scores(bad):
    with pytest.raises(ResamplingError):
        tilt_weights(bad, 1.0)


def test_tilt_rejects_negative_lambda():
    with pytest.raises(ResamplingError):
        tilt_weights([0.5], -1.0)


@settings(max_examples=200, deadline=None)
@given(grid_scores_st, st.floats(1e-3, 50.0), st.floats(1e-3, 5e3))
def test_argmax_invariant_in_lambda(scores, l1, l2):
    # lambda below ~1e-16 rounds every weight to the same double
    s = np.array(scores)
    a, b = tilt_weights(s, l1), tilt_weights(s, l2)
    assert np.isclose(a.sum(), 1.0) and np.isclose(b.sum(), 1.0)
    top = np.flatnonzero(s == s.max())
    assert np.argmax(a) in top and np.argmax(b) in top


def test_ess_bounds():
    assert ess(np.full(8, 1 / 8)) == pytest.approx(8.0)
    assert ess(np.array([1.0, 0, 0])) == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(scores_st, st.integers(1, 6))
def test_lambda_zero_offspring(scores, n):
    xi = expected_offspring(tilt_weights(scores, 0.0), n)
    assert np.all(np.abs(xi - n / len(scores)) < 1e-12)


@settings(max_examples=200, deadline=None)
@given(scores_st, st.integers(1, 6), st.floats(0.0, 20.0), st.integers(0, 2**32))
def test_frontier_rounding_invariants(scores, n, lam, seed):
    fr = WeightedFrontier.build(scores, lam, n, Stream.from_seed(seed))
    assert fr.counts.sum() == n
    assert np.all(fr.counts >= np.floor(fr.expected_offspring + 1e-9) - 0)
    assert np.all(fr.counts <= np.ceil(fr.expected_offspring - 1e-9))
    assert 1.0 - 1e-9 <= fr.ess <= len(scores) + 1e-9


def test_ssp_rejects_non_integer_total():
    with pytest.raises(ResamplingError):
        ssp_round([0.5, 0.7], Stream.from_seed(0))


def test_ssp_rejects_negative():
    with pytest.raises(ResamplingError):
        ssp_round([1.5, -0.5], Stream.from_seed(0))


def test_ssp_marginals_small_case():
    xi = np.array([0.3, 0.9, 1.2, 0.6])
    u = np.random.default_rng(0).random((100_000, 4))
    counts = ssp_round_many(xi, u)
    assert np.all(counts.sum(axis=1) == 3)
    mean = counts.mean(axis=0)
    se = counts.std(axis=0) / np.sqrt(counts.shape[0])
    assert np.all(np.abs(mean - xi) <= 4 * se + 1e-12)


def test_ssp_negatively_correlated_pairs():
    # two halves must never both round up when the total is 1
    u = np.random.default_rng(1).random((20_000, 2))
    counts = ssp_round_many(np.array([0.5, 0.5]), u)
    assert set(map(tuple, counts)) == {(0, 1), (1, 0)}


def test_materialize_streams():
    child = derive(seed_key(0)[0], np.arange(3))
    index, streams = materialize([2, 0, 1], child)
    assert index.tolist() == [0, 0, 2]
    assert streams[0] != streams[1]
    again = materialize([2, 1, 0], child)[1]
    # the first copies of child 0 do not depend on what else survived
    assert streams[0] == again[0] and streams[1] == again[1]
