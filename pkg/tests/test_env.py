import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpmab.env import CHUNK, ChannelModel, ConfigurationError, Environment, oracle_slot_value, resolve_slot
from mpmab.radio import idle, sense, transmit


def model(means, occ=None, **kw):
    means = np.asarray(means, dtype=float)
    return ChannelModel(means, np.zeros(means.shape[-1]) if occ is None else np.asarray(occ), **kw)


def test_lone_transmission_earns_the_draw():
    g = resolve_slot([False, False], [0.0, 1.0], {0: transmit(1)})
    assert g.success[0] and g.rewards[0] == 1.0
    assert not g.collision_sets


def test_collision_zeroes_every_collider():
    g = resolve_slot([False, False, False], [1.0, 1.0, 1.0], {0: transmit(2), 1: transmit(2), 2: transmit(0)})
    assert g.collision_sets == frozenset({2})
    assert g.rewards[0] == g.rewards[1] == 0.0
    assert g.rewards[2] == 1.0


def test_pu_occupied_channel_fails_and_counts_interference():
    g = resolve_slot([True, False], [1.0, 1.0], {0: transmit(0), 1: sense(0)})
    assert not g.success[0]
    assert g.pu_interference_events == 1
    assert g.busy(0)


def test_sensing_and_idle_do_not_occupy():
    g = resolve_slot([False, False], [1.0, 1.0], {0: sense(1), 1: idle(), 2: transmit(1)})
    assert g.tx_count == [0, 1]
    assert g.success == {2: True}


def test_invalid_channel_rejected():
    with pytest.raises(ConfigurationError):
        resolve_slot([False], [1.0], {0: transmit(3)})


def test_model_validation():
    with pytest.raises(ConfigurationError):
        model([[1.2, 0.1]])
    with pytest.raises(ConfigurationError):
        model([0.1, 0.2], occ=[0.1])
    with pytest.raises(ConfigurationError):
        model([0.1, 0.2], reward_law="gaussian")
    with pytest.raises(ConfigurationError):
        ChannelModel(np.array([[0.2, 0.3]]), np.zeros(2), change_points=[(0, [[0.1, 0.1]])])


def test_environment_is_counter_based():
    m = model([0.3, 0.6, 0.9], occ=[0.2, 0.0, 0.5])
    a = Environment(m, 7, 0)
    b = Environment(m, 7, 0)
    later = [b.draw_slot(t) for t in (3 * CHUNK + 5, 17, CHUNK - 1)]
    assert [a.draw_slot(t) for t in (3 * CHUNK + 5, 17, CHUNK - 1)] == later
    w = a.window(CHUNK - 3, 6)
    for i in range(6):
        pu, rewards, _ = b.draw_slot(CHUNK - 3 + i)
        assert w.pu[i].tolist() == pu
        assert w.rewards[i].tolist() == rewards


def test_replications_get_different_streams():
    m = model([0.5] * 4)
    a = Environment(m, 1, 0).window(0, 200).rewards
    b = Environment(m, 1, 1).window(0, 200).rewards
    assert not np.array_equal(a, b)


def test_bernoulli_and_occupancy_frequencies_match_monte_carlo():
    means = [0.29, 0.5, 0.78]
    occ = [0.1, 0.4, 0.0]
    env = Environment(model(means, occ=occ), 3, 0)
    w = env.window(0, 50000)
    assert np.allclose(w.rewards[:, 0, :].mean(axis=0), means, atol=0.01)
    assert np.allclose(w.pu.mean(axis=0), occ, atol=0.01)


def test_uniform_law_keeps_mean_and_width():
    means = [0.05, 0.5, 0.97]
    env = Environment(model(means, reward_law="uniform", half_width=0.1), 3, 0)
    r = env.window(0, 40000).rewards[:, 0, :]
    assert np.allclose(r.mean(axis=0), means, atol=0.005)
    assert np.all(r >= 0) and np.all(r <= 1)
    assert r[:, 1].min() >= 0.4 and r[:, 1].max() <= 0.6


def test_fading_drops_transmissions_at_given_rate():
    env = Environment(model([0.5, 0.5], fade_probability=0.25), 0, 0)
    assert env.window(0, 40000).fade.mean() == pytest.approx(0.25, abs=0.01)


def test_change_points_switch_means():
    m = ChannelModel(np.array([[0.9, 0.1]]), np.zeros(2), change_points=[(100, [[0.1, 0.9]])])
    env = Environment(m, 0, 0)
    w = env.window(0, 20000)
    assert w.rewards[:100, 0, 0].mean() > 0.7
    assert w.rewards[100:, 0, 1].mean() == pytest.approx(0.9, abs=0.01)
    assert env.segment(99) == 0 and env.segment(100) == 1


def test_oracle_homogeneous_discounts_occupancy():
    m = model([0.2, 0.8, 0.6], occ=[0.0, 0.5, 0.0])
    # 0.8 * 0.5 = 0.4 < 0.6, so the best two are 0.6 and 0.4
    assert oracle_slot_value(m, 2) == pytest.approx(1.0)
    assert oracle_slot_value(m, 0) == 0.0


def test_oracle_heterogeneous_matches_brute_force():
    from conftest import brute_force_matching

    rng = np.random.default_rng(2)
    w = rng.random((3, 5))
    m = model(w)
    assert oracle_slot_value(m, 3) == pytest.approx(brute_force_matching(w)[0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-1, 3), min_size=1, max_size=6), st.lists(st.booleans(), min_size=4, max_size=4))
def test_collision_model_invariants(choices, pu):
    actions = {u: (transmit(c) if c >= 0 else idle()) for u, c in enumerate(choices)}
    g = resolve_slot(pu, [1.0] * 4, actions)
    for u, c in enumerate(choices):
        if c < 0:
            assert u not in g.success
            continue
        alone = choices.count(c) == 1
        assert g.success[u] == (alone and not pu[c])
    assert g.pu_interference_events == sum(1 for c in choices if c >= 0 and pu[c])
