import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpmab.env import ConfigurationError
from mpmab.policies import REGISTRY
from mpmab.policies.base import Policy
from mpmab.radio import transmit
from mpmab.runner import (
    DynamicsEvent,
    ReplicationAborted,
    aggregate,
    resolve_threads,
    run_experiment,
    run_replication,
    with_overrides,
)
from helpers import config, leave_enter


def test_horizon_must_be_positive():
    with pytest.raises(ConfigurationError, match="horizon must be ≥ 1"):
        config("sh", horizon=0)


def test_sensing_algorithm_needs_sensing_radio():
    with pytest.raises(ConfigurationError, match="sense"):
        config("scf", radio="type3")


def test_cap_violation_names_the_slot():
    with pytest.raises(ConfigurationError, match="slot 50"):
        config("tdn", users=2, max_users=2, dynamics=[DynamicsEvent(50, "enter")])


def test_leave_of_unknown_user_rejected():
    with pytest.raises(ConfigurationError, match="not active"):
        config("tdn", users=2, dynamics=[DynamicsEvent(5, "leave", 7)])


def test_single_user_hopping_regret_is_exact():
    # One user cycling over two channels loses 0.6 every other slot.
    cfg = config("sh", users=1, horizon=1000, means=[0.2, 0.8], record_stride=100)
    res = run_replication(cfg, 0)
    assert res.final("pseudo_regret") == pytest.approx(300.0)
    assert res.slots.tolist() == list(range(100, 1001, 100))
    assert res.final("collisions") == 0


def test_collisions_count_each_colliding_user():
    cfg = config("random_hop", users=2, horizon=50, means=[0.5])
    res = run_replication(cfg, 0)
    assert res.final("collisions") == 100
    assert res.final("pseudo_regret") == pytest.approx(25.0)
    assert res.final("realized_regret") == pytest.approx(res.final("pseudo_regret"), abs=50)


def test_realized_regret_tracks_pseudo_regret_on_average():
    cfg = config("sh", users=2, horizon=20000, replications=8)
    out = run_experiment(cfg)
    gap = out.finals("realized_regret") - out.finals("pseudo_regret")
    # Zero-mean noise: the sampled mean stays within a few standard errors.
    assert abs(gap.mean()) < 4 * gap.std(ddof=1) / np.sqrt(len(gap)) + 1e-9


def test_dynamics_change_active_users():
    cfg = config("tdn", users=4, horizon=5000, dynamics=leave_enter(1000, 2000), record_stride=500)
    res = run_replication(cfg, 0)
    active = dict(zip(res.slots.tolist(), res.series["active_users"].tolist()))
    assert active[1000] == 4 and active[1500] == 3 and active[2500] == 4
    assert [e[1] for e in res.events] == ["leave", "enter"]


def test_replications_are_isolated():
    cfg = config("mc", users=3, horizon=6000, replications=3, params={"learning_length": 1000})
    full = run_experiment(cfg)
    part = run_experiment(cfg, replications=[2])
    assert np.array_equal(full.replications[2].series["pseudo_regret"], part.replications[0].series["pseudo_regret"])


def test_thread_count_does_not_change_results():
    cfg = config("scf", users=3, horizon=8000, replications=3)
    a = run_experiment(cfg, threads=1)
    b = run_experiment(cfg, threads=3)
    for m in a.aggregates:
        for s in a.aggregates[m]:
            assert np.array_equal(a.aggregates[m][s], b.aggregates[m][s])


def test_resolve_threads_env(monkeypatch):
    monkeypatch.setenv("MPMAB_THREADS", "5")
    assert resolve_threads(None) == 5
    assert resolve_threads(2) == 2


def test_aggregate_statistics():
    cfg = config("random_hop", users=2, horizon=100, replications=5, record_stride=50)
    out = run_experiment(cfg)
    finals = out.finals("collisions")
    assert out.aggregates["collisions"]["median"][-1] == np.median(finals)
    assert out.aggregates["collisions"]["p95"][-1] == np.percentile(finals, 95)
    assert aggregate(out.replications)["collisions"]["mean"][-1] == finals.mean()


class _Rogue(Policy):
    name = "rogue"

    def act(self, t):
        return transmit(self.K + 1) if t == 7 else transmit(0)

    def update(self, obs):
        pass


def test_contract_violation_aborts_replication(monkeypatch):
    monkeypatch.setitem(REGISTRY, "rogue", (_Rogue, "Rogue"))
    cfg = config("rogue", users=1, horizon=20)
    with pytest.raises(ReplicationAborted) as exc:
        run_replication(cfg, 0)
    assert exc.value.slot == 7


def test_with_overrides_keeps_other_fields():
    cfg = config("sh", users=2, horizon=100)
    other = with_overrides(cfg, seed=9)
    assert other.seed == 9 and other.horizon == 100


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(["random_hop", "sh", "mctopm", "mc", "scf", "tsn", "mega", "dscf", "tdn"]), st.integers(0, 2**32), st.integers(1, 6))
def test_pseudo_regret_never_decreases(alg, seed, users):
    params = {"learning_length": 500} if alg == "mc" else {}
    cfg = config(alg, users=users, horizon=3000, seed=seed, params=params)
    res = run_replication(cfg, 0)
    assert res.min_increment >= -1e-12
    assert res.negative_increments == 0
    assert np.all(np.diff(res.series["pseudo_regret"]) >= 0)
    assert np.all(np.diff(res.series["collisions"]) >= 0)
