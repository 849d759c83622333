import numpy as np
import pytest
from hypothesis import given, strategies as st

from dlmsearch.core import ConfigError, Mode, PartialState, Policy, RunConfig, Schedule, Vocabulary, full_mask
from dlmsearch.rng import Stream, derive


@given(st.integers(1, 40), st.integers(1, 12), st.sampled_from(list(Policy)), st.integers(0, 1000))
def test_schedule_partitions_positions(length, k, policy, seed):
    s = Schedule(length, k, policy, seed)
    seen = []
    for t in range(s.steps, 0, -1):
        seen.extend(s.updatable_positions(t))
    assert sorted(seen) == list(range(length))
    assert s.steps == -(-length // k)


def test_left_to_right_short_tail():
    s = Schedule(5, 2)
    assert [s.updatable_positions(t) for t in (3, 2, 1)] == [(0, 1), (2, 3), (4,)]
    assert s.masked_after(2) == (2, 3, 4)


def test_step_out_of_range():
    with pytest.raises(ValueError):
        Schedule(4, 1).updatable_positions(5)
    with pytest.raises(ValueError):
        Schedule(4, 1).updatable_positions(0)


def test_random_blocks_reproducible():
    a = Schedule(12, 3, Policy.RANDOM, seed=4)
    b = Schedule(12, 3, "RandomBlocks", seed=4)
    assert [a.updatable_positions(t) for t in range(4, 0, -1)] == [b.updatable_positions(t) for t in range(4, 0, -1)]


def test_vocabulary_and_full_mask():
    v = Vocabulary(3)
    assert v.mask_id == 3
    st0 = full_mask(Schedule(4, 2), v)
    assert st0.tokens == (3, 3, 3, 3) and st0.step == 2
    assert st0.masked(3) == (0, 1, 2, 3) and not st0.is_terminal(3)
    with pytest.raises(ConfigError):
        Vocabulary(1)


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(particles=0)
    with pytest.raises(ConfigError):
        RunConfig(lam=-1.0)
    with pytest.raises(ConfigError):
        RunConfig(lam=float("inf"))
    assert RunConfig(4, 2).budget == 8
    assert RunConfig(4, 2, mode="Baseline").budget == 1
    assert RunConfig(mode=Mode.S3).with_(particles=2).particles == 2


def test_partial_state_array():
    p = PartialState(np.array([1, 0, 2]), 0)
    assert p.tokens == (1, 0, 2) and p.array().dtype == np.int64


def test_streams_are_addressable():
    s = Stream.from_seed(9)
    assert s.child(1, 2).key == s.child(1, 2).key
    assert s.child(1, 2).key != s.child(2, 1).key
    keys = derive(np.uint64(s.key), 1, np.arange(4))
    assert len(set(keys.tolist())) == 4
    assert int(keys[2]) == s.child(1, 2).key
