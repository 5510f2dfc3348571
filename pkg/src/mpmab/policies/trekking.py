"""Trekking: climb the empirical channel ranking one vacant step at a time.

TSN (static networks) learns the ranking with random hopping followed by
sequential hopping, then repeatedly probes the channel one rank above its
own by sensing it for a probation window. A fully idle window means the
channel is vacant and the user moves up. After ``max_failures`` failed
probes in a row the user settles for good.

TDN (dynamic networks) never settles below the top rank: after the failure
budget it keeps a cheap periodic one-slot check of the better-ranked
channels in turn, so a departure higher up is noticed and filled. A user entering a running
network first senses every channel once, learns only the vacant ones and
joins at the best of them.
"""
from __future__ import annotations

import math

import numpy as np

from ..radio import idle, sense, transmit
from .base import ArmStats, Plan, Policy, constant_plan, first_true, hop_plan, seqhop_next
from .scf import hop_lengths

DEFAULT_PROBE_C = 10.0
DEFAULT_MAX_FAILURES = 6
DEFAULT_CHECK_PERIOD = 2000
DEFAULT_COLLISION_PATIENCE = 3


def probation_window(horizon: int, c: float) -> int:
    return max(1, math.ceil(c * math.log(max(horizon, 2))))


class TSN(Policy):
    name = "tsn"
    needs_sensing = True
    dynamic = False

    def setup(self):
        self.rh_len, self.sh_len = hop_lengths(self)
        w = self.param("probe_window")
        self.W = int(w) if w is not None else probation_window(self.ctx.horizon, float(self.param("probe_c", DEFAULT_PROBE_C)))
        self.max_failures = int(self.param("max_failures", DEFAULT_MAX_FAILURES))
        self.check_period = int(self.param("check_period", DEFAULT_CHECK_PERIOD))
        self.patience = int(self.param("collision_patience", DEFAULT_COLLISION_PATIENCE))
        self.sh_rounds = int(self.param("sh_rounds", 1000))
        self.stats = ArmStats(self.K)
        self.k = 0
        self.ranking: list[int] = []
        self.pos = None
        self.target = None
        self.cycle = 0
        self.fails = 0
        self.remaining = 0
        self.busy_seen = False
        self.hits = 0
        self.previous = None
        self.previous_pos = None
        self.moves = 0
        self.vacant: list[int] = []
        self.vidx = 0
        if self.dynamic and self.ctx.late_entry:
            self.channel = None
            self._start_sweep()
        else:
            self.channel = self.rng.randrange(self.K)
            self.phase = "rh"
            self.remaining = self.rh_len
            self._roll()

    # -- phase changes -------------------------------------------------

    def _roll(self):
        """Move through zero-length phases."""
        while self.remaining == 0:
            phase = self.phase
            if phase == "rh":
                self.phase = "sh"
                self.remaining = self.sh_len
            elif phase == "sh":
                self.ranking = self.stats.ranking()
                self.pos = self.ranking.index(self.channel)
                self._start_tx()
            elif phase == "tx":
                self.phase = "probe"
                self.remaining = self.W
                self.busy_seen = False
            elif phase == "check":
                self.phase = "check_sense"
                self.remaining = 1
            elif phase == "wait":
                self._start_sweep()
            elif phase == "sweep":
                self._finish_sweep()
            elif phase == "learn_vacant":
                self._finish_vacant()
            else:
                return

    def _start_tx(self):
        self.hits = 0
        self.target = self.pos - 1 if self.pos else None
        if self.pos == 0:
            self.phase = "fixed"
            self.remaining = -1
        elif self.fails >= self.max_failures:
            if self.dynamic:
                # Cycle the periodic check over every better-ranked channel.
                self.target = (self.pos - 1 - self.cycle % self.pos)
                self.cycle += 1
                lo = max(1, self.check_period // 2)
                self.phase = "check"
                self.remaining = self.rng.randint(lo, lo + self.check_period)
            else:
                self.phase = "fixed"
                self.remaining = -1
        else:
            self.phase = "tx"
            self.remaining = self.rng.randint(1, self.W << self.fails)

    def _probe_done(self, vacant: bool):
        if vacant:
            self.previous = self.channel
            self.previous_pos = self.pos
            self.pos = self.target
            self.cycle = 0
            self.channel = self.ranking[self.pos]
            self.phase = "arrive"
            self.remaining = 1
        else:
            self.fails += 1
            self._start_tx()

    def _start_sweep(self):
        self.phase = "sweep"
        self.remaining = self.K
        self.vacant = []

    def _finish_sweep(self):
        if not self.vacant:
            self.phase = "wait"
            self.remaining = self.check_period
            return
        self.vidx = self.rng.randrange(len(self.vacant))
        self.phase = "learn_vacant"
        self.remaining = self.sh_rounds * len(self.vacant)

    def _finish_vacant(self):
        means = self.stats.means()
        vac = sorted(self.vacant, key=lambda c: (-means[c], c))
        occupied = [c for c in range(self.K) if c not in self.vacant]
        self.ranking = occupied + vac
        self.previous = None
        self.channel = vac[0]
        self.pos = self.ranking.index(self.channel)
        self.phase = "arrive"
        self.remaining = 1

    @property
    def above(self) -> int:
        return self.ranking[self.target]

    # -- per-slot interface ---------------------------------------------

    def act(self, t):
        phase = self.phase
        if phase in ("probe", "check_sense"):
            return sense(self.above)
        if phase == "sweep":
            return sense(self.K - self.remaining)
        if phase == "wait":
            return idle()
        if phase == "learn_vacant":
            return transmit(self.vacant[self.vidx])
        return transmit(self.channel)

    def update(self, obs):
        phase = self.phase
        self.k += 1
        if phase in ("rh", "sh"):
            if obs.success:
                self.stats.add(self.channel, obs.reward)
            if obs.collided:
                self.channel = self.rng.randrange(self.K)
            elif phase == "sh":
                self.channel = seqhop_next(self.channel, self.K)
            self.remaining -= 1
        elif phase == "fixed":
            return
        elif phase in ("tx", "check"):
            if obs.collided:
                self.hits += 1
                if self.hits >= self.patience:
                    self._scatter()
                    return
            else:
                self.hits = 0
            self.remaining -= 1
        elif phase == "probe":
            self.remaining -= 1
            if obs.sensed_busy(self.above):
                self._probe_done(False)
                return
            if self.remaining == 0:
                self._probe_done(True)
                return
        elif phase == "check_sense":
            if obs.sensed_busy(self.above):
                self._start_tx()
            else:
                self.phase = "probe"
                self.remaining = self.W
            return
        elif phase == "arrive":
            if obs.collided and self.previous is not None:
                self.channel = self.previous
                self.pos = self.previous_pos
                self.fails += 1
            elif not obs.collided:
                self.fails = 0
                self.moves += 1
            self.previous = None
            self._start_tx()
            return
        elif phase == "sweep":
            c = self.K - self.remaining
            if not obs.sensed_busy(c):
                self.vacant.append(c)
            self.remaining -= 1
        elif phase == "wait":
            self.remaining -= 1
        elif phase == "learn_vacant":
            c = self.vacant[self.vidx]
            if obs.success:
                self.stats.add(c, obs.reward)
            if obs.collided:
                self.vidx = self.rng.randrange(len(self.vacant))
            else:
                self.vidx = (self.vidx + 1) % len(self.vacant)
            self.remaining -= 1
        self._roll()

    def _scatter(self):
        """Repeated collisions on an owned channel: re-draw a channel at random."""
        self.channel = self.rng.randrange(self.K)
        self.pos = self.ranking.index(self.channel)
        self.fails = 0
        self._start_tx()

    # -- bulk interface -------------------------------------------------

    def plan(self, t, max_len):
        phase = self.phase
        if phase == "fixed":
            return constant_plan(self.channel, max_len)
        n = min(max_len, self.remaining)
        if phase == "rh":
            return constant_plan(self.channel, n, reactive=True)
        if phase == "sh":
            return hop_plan(self.channel, self.K, n)
        if phase in ("tx", "check"):
            return constant_plan(self.channel, n, reactive=True)
        if phase == "probe":
            return Plan(np.full(n, -1, dtype=np.int64), np.full(n, self.above, dtype=np.int64), True)
        if phase == "sweep":
            start = self.K - self.remaining
            return Plan(np.full(n, -1, dtype=np.int64), np.arange(start, start + n, dtype=np.int64), True)
        if phase == "wait":
            return Plan(np.full(n, -1, dtype=np.int64))
        if phase == "learn_vacant":
            v = np.asarray(self.vacant, dtype=np.int64)
            return Plan(v[(self.vidx + np.arange(n)) % len(v)], None, True)
        return None

    def horizon(self, t, plan, out):
        phase = self.phase
        if phase in ("rh", "sh", "tx", "check", "learn_vacant"):
            return first_true(out.collided)
        if phase == "probe":
            return min(len(plan), first_true(out.busy) + 1)
        return len(plan)

    def advance(self, t, plan, out, m):
        phase = self.phase
        if phase == "fixed":
            return
        self.k += m
        self.remaining -= m
        if phase in ("rh", "sh", "learn_vacant"):
            self.stats.absorb(plan.tx[:m], out.success[:m], out.reward[:m])
            if phase == "sh":
                self.channel = (self.channel + m) % self.K
            elif phase == "learn_vacant":
                self.vidx = (self.vidx + m) % len(self.vacant)
        elif phase in ("tx", "check"):
            self.hits = 0
        elif phase == "probe":
            if out.busy[m - 1]:
                self._probe_done(False)
                return
            if self.remaining == 0:
                self._probe_done(True)
                return
        elif phase == "sweep":
            for i in range(m):
                if not out.busy[i]:
                    self.vacant.append(int(plan.sense[i]))
        self._roll()


class TDN(TSN):
    name = "tdn"
    dynamic = True
