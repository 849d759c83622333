import numpy as np
import pytest

from dlmsearch.core import ConfigError, Mode, RunConfig, Schedule
from dlmsearch.model import EnumerableChain, PlantedSynthetic, PositionwiseModel
from dlmsearch.search import (
    confidence_trace,
    majority_vote_select,
    run,
    run_baseline,
    run_best_of_k,
    run_lookahead_only,
    run_s3,
    run_tilting_only,
)
from dlmsearch.verifier import TableReward, TargetSimilarity, TokenVerifier, default_verifier


class Constant(TokenVerifier):
    def score_batch(self, tokens, confidences=None):
        return np.full(np.atleast_2d(tokens).shape[0], 0.5)

    def answers(self, tokens):
        return [None] * np.atleast_2d(tokens).shape[0]


def chain():
    m = EnumerableChain(2, 3, seed=0)
    return m, Schedule(3, 1)


def cfg(mode, n=4, b=2, lam=4.0, sched=None, seed=0):
    return RunConfig(n, b, lam, 1.0, sched or Schedule(3, 1), seed, mode)


@pytest.mark.parametrize(
    "mode,want",
    [(Mode.S3, 32), (Mode.LOOKAHEAD_ONLY, 32), (Mode.BEST_OF_K, 32), (Mode.TILTING_ONLY, 32), (Mode.BASELINE, 4)],
)
def test_nfe(mode, want):
    m = PlantedSynthetic(length=16)
    sched = Schedule(16, 4)
    assert sched.steps == 4
    res = run(m, default_verifier(m), cfg(mode, sched=sched))
    assert res.nfe == want
    assert len(res.records) == 4


def test_degenerate_modes_bit_identical():
    m = PlantedSynthetic(length=16)
    v = default_verifier(m)
    sched = Schedule(16, 2)
    for seed in range(5):
        outs = {mode: run(m, v, cfg(mode, 1, 1, 3.0, sched, seed)).output.tokens for mode in Mode}
        assert len(set(outs.values())) == 1


def test_lambda_zero_offspring():
    m, sched = chain()
    res = run_s3(m, default_verifier(m), cfg(Mode.S3, 3, 4, 0.0, sched))
    for r in res.records:
        assert np.max(np.abs(r.expected_offspring - 3 / 12)) < 1e-12


def test_record_shapes_and_counts():
    m = PlantedSynthetic(length=16)
    res = run_s3(m, default_verifier(m), cfg(Mode.S3, 5, 3, 4.0, Schedule(16, 4)))
    for r in res.records:
        for arr in (r.scores, r.weights, r.expected_offspring, r.counts):
            assert arr.shape == (15,)
        assert r.counts.sum() == 5
        assert abs(r.weights.sum() - 1) < 1e-12
        assert np.all((r.counts == np.floor(r.expected_offspring)) | (r.counts == np.ceil(r.expected_offspring)))
        assert 1 <= r.ess <= 15
    assert res.terminals.shape == (5, 16)
    assert res.cleanpred_nfe == 4 * 15


def test_mode_mismatch():
    m, sched = chain()
    with pytest.raises(ConfigError):
        run_s3(m, default_verifier(m), cfg(Mode.BEST_OF_K, sched=sched))


def test_same_seed_reproducible():
    m = PlantedSynthetic(length=16)
    v = default_verifier(m)
    c = cfg(Mode.S3, sched=Schedule(16, 1), seed=11)
    a, b = run(m, v, c), run(m, v, c)
    assert np.array_equal(a.terminals, b.terminals)
    assert a.records[-1].scores.tolist() == b.records[-1].scores.tolist()


def test_baseline_deterministic_model():
    m = PositionwiseModel.deterministic((2, 0, 1, 1), vocab_size=3)
    res = run_baseline(m, Constant(), cfg(Mode.BASELINE, sched=Schedule(4, 2)))
    assert res.output.tokens == (2, 0, 1, 1)
    assert res.nfe == 2


def test_baseline_frequencies_match_enumeration():
    m, sched = chain()
    table = m.enumerate_terminal_distribution(sched)
    n = 100_000
    # each row of a flat population runs the baseline loop on its own stream
    res = run_best_of_k(m, Constant(), RunConfig(n, 1, 0.0, 1.0, sched, 7, Mode.BEST_OF_K))
    codes = res.terminals @ (2 ** np.arange(2, -1, -1))
    freq = np.bincount(codes, minlength=8) / n
    se = np.sqrt(table.probs * (1 - table.probs) / n)
    assert np.all(np.abs(freq - table.probs) <= 3 * se + 1e-12)


def test_separate_baseline_runs_match_enumeration():
    m, sched = chain()
    table = m.enumerate_terminal_distribution(sched)
    v = Constant()
    n = 2000
    codes = [
        int(np.dot(run_baseline(m, v, cfg(Mode.BASELINE, sched=sched, seed=s)).output.tokens, [4, 2, 1]))
        for s in range(n)
    ]
    freq = np.bincount(codes, minlength=8) / n
    se = np.sqrt(table.probs * (1 - table.probs) / n)
    assert np.all(np.abs(freq - table.probs) <= 4 * se + 1e-3)


def test_s3_beats_base_mean_on_indicator():
    m, sched = chain()
    v = TargetSimilarity.for_model(m, indicator=True)
    table = m.enumerate_terminal_distribution(sched)
    q = float(table.probs @ v.score_batch(table.states))
    f = [run_s3(m, v, cfg(Mode.S3, 4, 2, 4.0, sched, s)).output_score for s in range(2000)]
    assert np.mean(f) > q


def test_best_of_k_one_is_baseline():
    m = PlantedSynthetic(length=16)
    v = default_verifier(m)
    sched = Schedule(16, 4)
    for seed in range(3):
        base = run_baseline(m, v, cfg(Mode.BASELINE, sched=sched, seed=seed)).output.tokens
        assert run_best_of_k(m, v, cfg(Mode.BEST_OF_K, 1, 1, sched=sched, seed=seed)).output.tokens == base
        assert run_tilting_only(m, v, cfg(Mode.TILTING_ONLY, 1, 1, sched=sched, seed=seed)).output.tokens == base


def test_tilting_selection_ignores_lambda():
    m = PlantedSynthetic(length=16)
    v = default_verifier(m)
    sched = Schedule(16, 4)
    for seed in range(5):
        outs = {run_tilting_only(m, v, cfg(Mode.TILTING_ONLY, 4, 2, lam, sched, seed)).output_index for lam in (0.1, 4, 300)}
        assert len(outs) == 1
        res = run_tilting_only(m, v, cfg(Mode.TILTING_ONLY, 4, 2, 1.0, sched, seed))
        assert res.output_score == res.terminal_scores.max()


def test_tilting_equal_scores_pick_lowest_nll():
    m, sched = chain()
    res = run_tilting_only(m, Constant(), cfg(Mode.TILTING_ONLY, 4, 2, 2.0, sched, 3))
    nll = m.sequence_nll(res.terminals, sched)
    assert nll[res.output_index] == nll.min()


def test_lookahead_ties_keep_first_children():
    m, sched = chain()
    res = run_lookahead_only(m, Constant(), cfg(Mode.LOOKAHEAD_ONLY, 3, 2, sched=sched))
    for r in res.records:
        assert r.counts.tolist() == [1, 1, 1, 0, 0, 0]


def test_lookahead_single_particle_keeps_best_child():
    m = PlantedSynthetic(length=16)
    res = run_lookahead_only(m, default_verifier(m), cfg(Mode.LOOKAHEAD_ONLY, 1, 2, sched=Schedule(16, 2), seed=5))
    for r in res.records:
        assert r.counts[int(np.argmax(r.scores))] == 1 and r.counts.sum() == 1


def test_lookahead_b1_is_independent_population():
    m = PlantedSynthetic(length=16)
    v = default_verifier(m)
    sched = Schedule(16, 4)
    look = run_lookahead_only(m, v, cfg(Mode.LOOKAHEAD_ONLY, 4, 1, sched=sched, seed=2))
    bok = run_best_of_k(m, v, cfg(Mode.BEST_OF_K, 4, 1, sched=sched, seed=2))
    assert np.array_equal(look.terminals, bok.terminals)
    assert look.output_index == bok.output_index


def test_majority_vote_cases():
    m = PositionwiseModel(np.array([[0.6, 0.4], [0.9, 0.1]]))
    sched = Schedule(2, 1)
    rows = np.array([[1, 1], [0, 0], [1, 1]])
    assert majority_vote_select(rows, m, sched, ["42", "17", "42"]) in (0, 2)
    pair = np.array([[1, 1], [0, 0]])
    nll = m.sequence_nll(pair, sched)
    assert majority_vote_select(pair, m, sched, ["42", "17"]) == int(np.argmin(nll))
    assert majority_vote_select(rows[:1], m, sched, [None]) == 0
    # missing answers never pool together
    assert majority_vote_select(rows, m, sched, [None, "17", None]) == 1


def test_majority_vote_representative_is_lowest_nll():
    m = PositionwiseModel(np.array([[0.6, 0.4], [0.9, 0.1]]))
    sched = Schedule(2, 1)
    rows = np.array([[1, 1], [0, 0], [0, 1]])
    assert majority_vote_select(rows, m, sched, ["a", "a", "b"]) == 1


def test_confidence_trace():
    sched = Schedule(6, 2)
    det = PositionwiseModel.deterministic((1, 2, 0, 1, 0, 2), vocab_size=3)
    tr = confidence_trace(run_s3(det, Constant(), cfg(Mode.S3, sched=sched)))
    assert len(tr) == 3 and np.allclose(tr, 1.0)
    uni = PositionwiseModel.uniform(4, 6)
    tr = confidence_trace(run_s3(uni, Constant(), cfg(Mode.S3, sched=sched)))
    assert len(tr) == 3 and np.allclose(tr, 0.25)


def test_population_sizes():
    m = PlantedSynthetic(length=16)
    v = default_verifier(m)
    sched = Schedule(16, 4)
    assert run(m, v, cfg(Mode.S3, 3, 2, sched=sched)).terminals.shape[0] == 3
    assert run(m, v, cfg(Mode.LOOKAHEAD_ONLY, 3, 2, sched=sched)).terminals.shape[0] == 3
    assert run(m, v, cfg(Mode.BEST_OF_K, 3, 2, sched=sched)).terminals.shape[0] == 6
    assert run(m, v, cfg(Mode.TILTING_ONLY, 3, 2, sched=sched)).terminals.shape[0] == 6
    assert run(m, v, cfg(Mode.BASELINE, 3, 2, sched=sched)).terminals.shape[0] == 1


def test_table_reward_drives_search():
    m, sched = chain()
    vals = np.zeros(8)
    vals[0b100] = 1.0
    v = TableReward(vals, 2, 3)
    hits = np.mean([run_s3(m, v, cfg(Mode.S3, 4, 2, 8.0, sched, s)).output_score for s in range(300)])
    base = m.enumerate_terminal_distribution(sched).probs[0b100]
    assert hits > base
