import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hrsma_vr.baselines import (
    UPA_GRID,
    MyopicPolicy,
    RandomPolicy,
    UPAPolicy,
    is_projection_fixed_point,
    mp_select,
    mp_update,
    upa_action,
    upa_grid_search,
)
from hrsma_vr.config import SystemConfig
from hrsma_vr.env import StreamingEnv

CFG = SystemConfig()
FULL = np.array([[1, 0, 0, 1, 0, 0], [0, 1, 0, 0, 1, 0], [0, 0, 1, 0, 0, 1]])


def test_upa_degenerate_split():
    a = upa_action(0.0, 0.0, 1.0, CFG)
    assert a.alpha.alpha_c == 0.0
    np.testing.assert_array_equal(a.alpha.alpha_group, 0.0)
    np.testing.assert_allclose(a.alpha.alpha_private, 1 / 6, rtol=1e-15)


def test_upa_arithmetic_and_conservation():
    a = upa_action(0.4, 0.5, 1.0, CFG)
    assert a.alpha.alpha_c == 0.4
    np.testing.assert_allclose(a.alpha.alpha_group, 0.1, rtol=1e-14)
    np.testing.assert_allclose(a.alpha.alpha_private, 0.05, rtol=1e-14)
    assert a.alpha.total == pytest.approx(1.0, rel=1e-15)
    np.testing.assert_array_equal(a.cpu_shares, 1.0)


def test_upa_skips_empty_groups():
    m = np.array([[1, 1, 1, 0, 0, 0], [0, 0, 0, 1, 1, 1], [0] * 6])
    a = upa_action(0.0, 1.0, 0.5, CFG, m)
    np.testing.assert_allclose(a.alpha.alpha_group, [0.5, 0.5, 0.0])


@given(c=st.sampled_from(list(UPA_GRID)), g=st.sampled_from(list(UPA_GRID)),
       f=st.floats(0.01, 1.0))
def test_upa_is_projection_fixed_point(c, g, f):
    a = upa_action(c, g, f, CFG, FULL)
    assert a.alpha.total <= 1 + 1e-12
    assert is_projection_fixed_point(a, FULL)


def test_upa_grid_search_logs_and_is_deterministic(caplog):
    with caplog.at_level(logging.INFO, logger="hrsma_vr.baselines"):
        t1 = upa_grid_search(StreamingEnv(seed=0), num_states=2, seed=0)
    t2 = upa_grid_search(StreamingEnv(seed=0), num_states=2, seed=0)
    assert t1 == t2
    assert "UPA grid" in caplog.text
    assert all(0.0 <= v <= 1.0 for v in t1)


def test_upa_policy_action():
    pol = UPAPolicy(CFG, (0.4, 0.5, 1.0))
    state = StreamingEnv(seed=0).reset()
    np.testing.assert_array_equal(pol.act(state),
                                  upa_action(0.4, 0.5, 1.0, CFG, state.membership).to_vector())


def test_mp_repeats_when_last_equals_best():
    rng = np.random.default_rng(0)
    mem = mp_update(None, rng.random(5), 3.0)
    a = mp_select(mem, np.random.default_rng(1), 5)
    np.testing.assert_array_equal(a, mem.last_action)


def test_mp_explores_deterministically_when_behind():
    mem = mp_update(None, np.zeros(5), 3.0)
    mem = mp_update(mem, np.ones(5), 1.0)
    a = mp_select(mem, np.random.default_rng(7), 5)
    b = mp_select(mem, np.random.default_rng(7), 5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, mem.last_action)


def test_mp_update_bookkeeping():
    mem = mp_update(None, np.zeros(2), 0.0)
    assert mem.best_reward == 0.0
    for r, a in ((1.0, [1, 1]), (3.0, [3, 3]), (2.0, [2, 2])):
        mem = mp_update(mem, np.array(a, float), r)
    assert mem.best_reward == 3.0
    np.testing.assert_array_equal(mem.best_action, [3, 3])
    np.testing.assert_array_equal(mem.last_action, [2, 2])
    mem = mp_update(mem, np.array([9.0, 9.0]), 3.0)
    np.testing.assert_array_equal(mem.best_action, [3, 3])


@given(rewards=st.lists(st.floats(0, 100), min_size=1, max_size=50))
def test_best_reward_is_running_max(rewards):
    mem = None
    best = []
    for i, r in enumerate(rewards):
        mem = mp_update(mem, np.full(2, float(i)), r)
        best.append(mem.best_reward)
        assert mem.best_reward == max(rewards[: i + 1])
    assert best == sorted(best)


def test_mp_settles_in_stationary_deterministic_env():
    # reward depends on the action only; MP must lock onto its best action
    def reward(a):
        return -float(np.sum((a - 0.3) ** 2))

    pol = MyopicPolicy(4, np.random.default_rng(0))
    rewards = []
    for _ in range(300):
        a = pol.act()
        r = reward(a)
        pol.observe(a, r)
        rewards.append(r)
    tail = rewards[-50:]
    assert len(set(tail)) == 1
    assert tail[0] == pol.memory.best_reward == max(rewards)


def test_random_policy_is_seeded():
    a = RandomPolicy(37, np.random.default_rng(3)).act()
    b = RandomPolicy(37, np.random.default_rng(3)).act()
    np.testing.assert_array_equal(a, b)
    assert a.shape == (37,) and np.all((a >= 0) & (a < 1))
