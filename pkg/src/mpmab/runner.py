"""Deterministic Monte Carlo engine: slotted rounds, user dynamics, aggregation.

Random streams are derived from ``(seed, replication)`` with
:class:`numpy.random.SeedSequence`: the environment uses ``[seed, rep, 0]``
(see :class:`~mpmab.env.Environment`), user ``u`` uses ``[seed, rep, 1, u]``
and the dynamics schedule ``[seed, rep, 2]``. Nothing is shared between
replications, so results do not depend on how replications are scheduled.

Long stretches in which every user follows a known plan (fixed channel,
hopping cycle, pre-drawn sequence) are processed in bulk with numpy. The
bulk path reproduces the slot-by-slot path exactly and is skipped when a
full trace is requested.
"""
from __future__ import annotations

import dataclasses
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .env import ChannelModel, ConfigurationError, Environment, resolve_slot
from .policies import PolicyContext, algorithm_key, make_policy
from .policies.base import Outcomes, Plan, Policy
from .radio import TRANSMIT, ContractViolation, RadioCapability, observe, radio_from_name, validate_action

ENTER = "enter"
LEAVE = "leave"
METRICS = ("pseudo_regret", "realized_regret", "collisions", "pu_interference", "active_users")
STATISTICS = ("mean", "median", "p5", "p95")

_MIN_WINDOW = 64
_MAX_WINDOW = 65536
_ZERO_TOL = 1e-12


class ReplicationAborted(RuntimeError):
    def __init__(self, replication: int, slot: int, reason: str):
        self.replication = replication
        self.slot = slot
        self.reason = reason
        super().__init__(f"replication {replication} aborted at slot {slot}: {reason}")


@dataclass(frozen=True)
class DynamicsEvent:
    """``enter`` adds a user with a fresh id; ``leave`` removes ``user`` (or a
    uniformly chosen active user when ``user`` is None)."""

    slot: int
    kind: str
    user: Optional[int] = None


@dataclass
class ExperimentConfig:
    model: ChannelModel
    algorithm: str
    num_users: int
    horizon: int
    replications: int = 1
    seed: int = 0
    radio: RadioCapability = field(default_factory=lambda: radio_from_name("type2_nb"))
    params: dict = field(default_factory=dict)
    dynamics: list = field(default_factory=list)
    max_users: Optional[int] = None
    record_stride: Optional[int] = None
    record_slots: tuple = ()
    means_seed: Optional[int] = None  # draw a fresh U[0,1] mean matrix per replication

    def __post_init__(self):
        if isinstance(self.radio, str):
            self.radio = radio_from_name(self.radio)
        self.algorithm = algorithm_key(self.algorithm)
        self.validate()

    @property
    def stride(self) -> int:
        return self.record_stride or max(1, self.horizon // 1000)

    def validate(self):
        if self.horizon < 1:
            raise ConfigurationError("horizon must be ≥ 1")
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")
        if self.num_users < 1:
            raise ConfigurationError("initial user count must be >= 1")
        if self.record_stride is not None and self.record_stride < 1:
            raise ConfigurationError("downsample stride must be >= 1")
        from .policies import needs_sensing

        if needs_sensing(self.algorithm) and not self.radio.can_sense:
            raise ConfigurationError(f"{self.algorithm} needs a radio that can sense")
        cap = self.max_users if self.max_users is not None else None
        n = self.num_users
        if cap is not None and n > cap:
            raise ConfigurationError(f"initial user count {n} exceeds the cap {cap}")
        last = -1
        next_id = self.num_users
        active = set(range(self.num_users))
        for ev in self.dynamics:
            if ev.slot < last:
                raise ConfigurationError(f"dynamics event at slot {ev.slot} is out of order")
            if ev.slot < 0:
                raise ConfigurationError(f"dynamics event at slot {ev.slot} is negative")
            last = ev.slot
            if ev.kind == ENTER:
                active.add(next_id)
                next_id += 1
                if cap is not None and len(active) > cap:
                    raise ConfigurationError(f"event at slot {ev.slot}: {len(active)} users exceed the cap {cap}")
            elif ev.kind == LEAVE:
                if not active:
                    raise ConfigurationError(f"event at slot {ev.slot}: leave with no active user")
                if ev.user is None:
                    active.pop()
                elif ev.user not in active:
                    raise ConfigurationError(f"event at slot {ev.slot}: user {ev.user} is not active")
                else:
                    active.discard(ev.user)
            else:
                raise ConfigurationError(f"event at slot {ev.slot}: unknown kind {ev.kind!r}")
        self.total_users = next_id
        if self.means_seed is None and not self.model.homogeneous and next_id > self.model.rows:
            raise ConfigurationError(
                f"{next_id} users need {next_id} mean-matrix rows, only {self.model.rows} given"
            )

    def model_for(self, replication: int) -> ChannelModel:
        """The channel model of one replication (per-replication random means
        when ``means_seed`` is set; one row per user that ever joins)."""
        if self.means_seed is None:
            return self.model
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.means_seed, replication, 3])))
        means = rng.random((self.total_users, self.model.num_channels))
        return dataclasses.replace(self.model, mean_rates=means, change_points=[])

    def record_points(self) -> np.ndarray:
        """Slot counts (1..T) at which cumulative metrics are recorded."""
        pts = set(range(self.stride, self.horizon + 1, self.stride))
        pts.add(self.horizon)
        pts.update(int(s) for s in self.record_slots if 1 <= int(s) <= self.horizon)
        return np.array(sorted(pts), dtype=np.int64)


@dataclass
class ReplicationResult:
    replication: int
    slots: np.ndarray
    series: dict
    collisions_by_phase: dict
    min_increment: float
    negative_increments: int
    histogram: dict
    events: list
    contexts: dict
    seeds: dict
    trace: Optional[list] = None
    observations: Optional[dict] = None
    policies: Optional[dict] = None

    def final(self, metric: str) -> float:
        return float(self.series[metric][-1])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    slots: np.ndarray
    replications: list
    aggregates: dict  # metric -> statistic -> array

    def finals(self, metric: str) -> np.ndarray:
        return np.array([r.final(metric) for r in self.replications])


def user_seed(seed: int, replication: int, uid: int) -> int:
    ss = np.random.SeedSequence([seed, replication, 1, uid])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class _User:
    uid: int
    policy: Policy
    row: int


class _Replication:
    def __init__(self, cfg: ExperimentConfig, replication: int, trace: bool, fast: bool, keep: bool = False):
        self.cfg = cfg
        self.keep = keep
        self.rep = replication
        self.trace_on = trace
        self.fast = fast and not trace
        self.model = cfg.model_for(replication)
        self.K = self.model.num_channels
        self.env = Environment(self.model, cfg.seed, replication)
        self.dyn_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, replication, 2])))
        self.users: dict[int, _User] = {}
        self.next_uid = 0
        self.contexts: dict = {}
        self.seeds: dict = {}
        self.events: list = []
        self.points = cfg.record_points()
        self.series = {m: np.zeros(len(self.points)) for m in METRICS}
        self.rec = 0
        self.pseudo = 0.0
        self.realized = 0.0
        self.collisions = 0
        self.interference = 0
        self.min_inc = np.inf
        self.negative = 0
        self.by_phase: dict = {}
        self.hist: dict = {}
        self.trace = [] if trace else None
        self.obs_log = {} if trace else None
        self.window = _MIN_WINDOW
        self.skip_fast = 0
        self.fast_fail = 0

    # -- users -------------------------------------------------------------

    def _add_user(self, t: int, late: bool):
        uid = self.next_uid
        self.next_uid += 1
        ctx = PolicyContext(
            num_channels=self.K,
            horizon=self.cfg.horizon,
            radio=self.cfg.radio,
            params=dict(self.cfg.params),
            num_users=len(self.users) + 1 if late else self.cfg.num_users,
            start_slot=t,
            late_entry=late,
            user_index=uid,
        )
        seed = user_seed(self.cfg.seed, self.rep, uid)
        self.contexts[uid] = ctx
        self.seeds[uid] = seed
        policy = make_policy(self.cfg.algorithm, ctx, random.Random(seed))
        self.users[uid] = _User(uid, policy, self.model.row_of(uid))
        self.hist[uid] = np.zeros(self.K, dtype=np.int64)
        if self.obs_log is not None:
            self.obs_log[uid] = []
        return uid

    def apply_dynamics(self, t: int, events):
        for ev in events:
            if ev.kind == ENTER:
                uid = self._add_user(t, late=True)
            else:
                if ev.user is None:
                    active = sorted(self.users)
                    uid = active[int(self.dyn_rng.integers(len(active)))]
                else:
                    uid = ev.user
                del self.users[uid]
            self.events.append((t, ev.kind, uid))
        self.rows = tuple(u.row for u in self.users.values())

    # -- bookkeeping ----------------------------------------------------------

    def _record(self, upto: int, cum: dict):
        """Store metric values for record points <= ``upto`` (slot count)."""
        pts = self.points
        while self.rec < len(pts) and pts[self.rec] <= upto:
            for m in METRICS:
                v = cum[m]
                self.series[m][self.rec] = v(pts[self.rec]) if callable(v) else v
            self.rec += 1

    def _oracle(self, seg: int) -> float:
        return self.env.oracle(self.rows, seg)

    # -- slot by slot ---------------------------------------------------------

    def step(self, t: int):
        users = self.users
        actions = {}
        for uid, u in users.items():
            a = u.policy.act(t)
            reason = validate_action(self.cfg.radio, a)
            if reason is not None:
                raise ContractViolation(f"slot {t}, user {uid}, action {a}: {reason}")
            if a.kind == TRANSMIT and not 0 <= a.channel < self.K:
                raise ContractViolation(f"slot {t}, user {uid}, action {a}: channel out of range")
            actions[uid] = a
        pu, rewards, fade = self.env.draw_slot(t)
        rows = {uid: u.row for uid, u in users.items()}
        ground = resolve_slot(
            pu, rewards, actions, slot=t, rows=rows, faded=fade if self.model.fade_probability > 0 else ()
        )
        seg = self.env.segment(t) if self.model.change_points else 0
        ev = self.env.segment_values(seg)
        achieved = 0.0
        got = 0.0
        count = ground.tx_count
        for uid, a in actions.items():
            if a.kind != TRANSMIT:
                continue
            c = a.channel
            self.hist[uid][c] += 1
            if count[c] >= 2:
                self.collisions += 1
                phase = users[uid].policy.phase
                self.by_phase[phase] = self.by_phase.get(phase, 0) + 1
            elif a.data:
                achieved += ev[rows[uid]][c]
                if ground.success[uid]:
                    got += ground.rewards[uid]
        self.interference += ground.pu_interference_events
        oracle = self._oracle(seg)
        inc = oracle - achieved
        if inc < self.min_inc:
            self.min_inc = inc
        if inc < -_ZERO_TOL:
            self.negative += 1
        if abs(inc) < _ZERO_TOL:
            inc = 0.0
        self.pseudo += inc
        self.realized += oracle - got
        if self.trace is not None:
            self.trace.append(ground)
        for uid, u in users.items():
            obs = observe(self.cfg.radio, ground, uid)
            if self.obs_log is not None:
                self.obs_log[uid].append(obs)
            u.policy.update(obs)
        self._record(t + 1, self._cum())

    def _cum(self):
        return {
            "pseudo_regret": self.pseudo,
            "realized_regret": self.realized,
            "collisions": self.collisions,
            "pu_interference": self.interference,
            "active_users": len(self.users),
        }

    # -- bulk ---------------------------------------------------------------

    def try_window(self, t: int, limit: int) -> int:
        """Process up to ``limit`` slots in bulk; returns the number committed."""
        users = list(self.users.values())
        if not users:
            return 0
        cap = min(self.window, limit)
        plans: list[Plan] = []
        for u in users:
            p = u.policy.plan(t, cap)
            if p is None or len(p) == 0:
                return 0
            plans.append(p)
        L = min(len(p) for p in plans)
        plans = [p if len(p) == L else _truncate(p, L) for p in plans]
        w = self.env.window(t, L)
        K = self.K
        idx = np.arange(L)
        count = np.zeros((L, K), dtype=np.int64)
        for p in plans:
            tx = p.tx
            on = tx >= 0
            if on.all():
                count[idx, tx] += 1
            elif on.any():
                count[idx[on], tx[on]] += 1
        can_sense = self.cfg.radio.can_sense
        outs = []
        for u, p in zip(users, plans):
            tx = p.tx
            on = tx >= 0
            c = np.where(on, tx, 0)
            cnt = np.where(on, count[idx, c], 0)
            clash = on & (cnt >= 2)
            ok = on & (cnt == 1) & ~w.pu[idx, c] & ~w.fade[idx, c]
            reward = np.where(ok, w.rewards[idx, u.row, c], 0.0)
            collided = clash if can_sense else (on & ~ok)
            if p.sense is not None:
                s = np.where(p.sense >= 0, p.sense, 0)
                busy = (p.sense >= 0) & (w.pu[idx, s] | (count[idx, s] > 0))
            else:
                busy = np.zeros(L, dtype=bool)
            outs.append((Outcomes(ok, reward, collided, busy), clash, on, c))
        m = L
        for u, p, o in zip(users, plans, outs):
            if p.reactive:
                m = min(m, u.policy.horizon(t, p, o[0]))
                if m == 0:
                    return 0
        # metrics over [t, t + m)
        seg = w.segments[:m]
        segs = np.unique(seg)
        oracle = np.empty(m)
        for s in segs:
            oracle[seg == s] = self._oracle(int(s))
        achieved = np.zeros(m)
        got = np.zeros(m)
        coll = np.zeros(m, dtype=np.int64)
        intf = np.zeros(m, dtype=np.int64)
        for u, p, (o, clash, on, c) in zip(users, plans, outs):
            clash_m = clash[:m]
            on_m = on[:m]
            c_m = c[:m]
            n_coll = int(np.count_nonzero(clash_m))
            if n_coll:
                coll += clash_m
                phase = u.policy.phase
                self.by_phase[phase] = self.by_phase.get(phase, 0) + n_coll
            if p.data:
                vals = np.stack([self.env.segment_values(int(s))[u.row] for s in segs]) if len(segs) > 1 else None
                if vals is None:
                    mu = self.env.segment_values(int(segs[0]))[u.row][c_m]
                else:
                    mu = vals[np.searchsorted(segs, seg), c_m]
                achieved += np.where(on_m & ~clash_m, mu, 0.0)
                got += o.reward[:m]
            intf += on_m & w.pu[idx[:m], c_m]
            if on_m.any():
                self.hist[u.uid] += np.bincount(c_m[on_m], minlength=self.K)
        inc = oracle - achieved
        lo = float(inc.min())
        if lo < self.min_inc:
            self.min_inc = lo
        self.negative += int(np.count_nonzero(inc < -_ZERO_TOL))
        inc = np.where(np.abs(inc) < _ZERO_TOL, 0.0, inc)
        pseudo = np.cumsum(np.concatenate(([self.pseudo], inc)))[1:]
        realized = np.cumsum(np.concatenate(([self.realized], oracle - got)))[1:]
        coll_cum = self.collisions + np.cumsum(coll)
        base = t + 1

        icum = self.interference + np.cumsum(intf)
        cum = {
            "pseudo_regret": lambda s: pseudo[s - base],
            "realized_regret": lambda s: realized[s - base],
            "collisions": lambda s: coll_cum[s - base],
            "pu_interference": lambda s: icum[s - base],
            "active_users": len(self.users),
        }
        self._record(t + m, cum)
        self.pseudo = float(pseudo[-1])
        self.realized = float(realized[-1])
        self.collisions = int(coll_cum[-1])
        self.interference = int(icum[-1])
        for u, p, (o, *_rest) in zip(users, plans, outs):
            u.policy.advance(t, p, o, m)
        return m

    # -- main loop -------------------------------------------------------------

    def run(self) -> ReplicationResult:
        cfg = self.cfg
        T = cfg.horizon
        for _ in range(cfg.num_users):
            self._add_user(0, late=False)
        self.rows = tuple(u.row for u in self.users.values())
        events = sorted(cfg.dynamics, key=lambda e: e.slot)
        ei = 0
        t = 0
        try:
            while t < T:
                if ei < len(events) and events[ei].slot <= t:
                    batch = []
                    while ei < len(events) and events[ei].slot <= t:
                        batch.append(events[ei])
                        ei += 1
                    self.apply_dynamics(t, batch)
                next_event = events[ei].slot if ei < len(events) else T
                limit = min(next_event, T) - t
                if self.fast and limit > 1 and self.skip_fast == 0:
                    m = self.try_window(t, limit)
                    if m > 0:
                        t += m
                        self.fast_fail = 0
                        self.window = min(_MAX_WINDOW, self.window * 2) if m >= self.window else max(_MIN_WINDOW, 2 * m)
                        continue
                    self.fast_fail = min(self.fast_fail + 1, 4)
                    self.skip_fast = (1 << self.fast_fail) - 1
                elif self.skip_fast:
                    self.skip_fast -= 1
                self.step(t)
                t += 1
        except (ContractViolation, ConfigurationError) as exc:
            raise ReplicationAborted(self.rep, t, str(exc)) from exc
        self._record(T, self._cum())
        return ReplicationResult(
            replication=self.rep,
            slots=self.points,
            series=self.series,
            collisions_by_phase=dict(sorted(self.by_phase.items())),
            min_increment=float(self.min_inc),
            negative_increments=self.negative,
            histogram={uid: h.tolist() for uid, h in self.hist.items()},
            events=self.events,
            contexts=self.contexts,
            seeds=self.seeds,
            trace=self.trace,
            observations=self.obs_log,
            policies={uid: u.policy for uid, u in self.users.items()} if self.keep else None,
        )


def _truncate(p: Plan, n: int) -> Plan:
    return Plan(p.tx[:n], None if p.sense is None else p.sense[:n], p.reactive, p.data)


def run_replication(
    cfg: ExperimentConfig, replication: int, trace: bool = False, fast: bool = True, keep_policies: bool = False
) -> ReplicationResult:
    """One replication. ``trace`` keeps every slot's ground truth and every
    user's observations; ``fast=False`` forces slot-by-slot processing;
    ``keep_policies`` returns the final policy instances of active users."""
    return _Replication(cfg, replication, trace, fast, keep_policies).run()


def _run_one(args):
    cfg, rep = args
    return run_replication(cfg, rep)


def aggregate(results: list) -> dict:
    """Mean, median and 5th/95th percentiles across replications, per metric."""
    out = {}
    for m in METRICS:
        stack = np.stack([r.series[m] for r in results])
        out[m] = {
            "mean": stack.mean(axis=0),
            "median": np.median(stack, axis=0),
            "p5": np.percentile(stack, 5, axis=0),
            "p95": np.percentile(stack, 95, axis=0),
        }
    return out


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        env = os.environ.get("MPMAB_THREADS")
        threads = int(env) if env else 1
    return max(1, int(threads))


def run_experiment(cfg: ExperimentConfig, threads: Optional[int] = None, replications=None) -> ExperimentResult:
    """All replications (or the given indices), aggregated in replication order."""
    reps = list(range(cfg.replications)) if replications is None else list(replications)
    threads = resolve_threads(threads)
    if threads > 1 and len(reps) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(reps))) as pool:
            results = list(pool.map(_run_one, [(cfg, r) for r in reps]))
    else:
        results = [run_replication(cfg, r) for r in reps]
    results.sort(key=lambda r: r.replication)
    return ExperimentResult(cfg, cfg.record_points(), results, aggregate(results))


def with_overrides(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return dataclasses.replace(cfg, **changes)
