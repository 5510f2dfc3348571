"""Shared machinery for decentralized per-user policies.

Every policy sees only its own observations, its private random stream and
the global slot index. Besides the per-slot ``act``/``update`` pair a policy
may expose a *plan*: the actions it will take over the next stretch of slots
(a fixed channel, a hopping cycle, a pre-drawn sequence). The runner uses
plans to process long uneventful stretches in bulk; a plan is only a
shortcut and must produce the same trajectory as stepping slot by slot.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from ..radio import Action, Observation, RadioCapability, idle, sense, transmit, TRANSMIT, SENSE


@dataclass
class PolicyContext:
    num_channels: int
    horizon: int
    radio: RadioCapability
    params: dict = field(default_factory=dict)
    num_users: Optional[int] = None  # only for algorithms that are told N
    start_slot: int = 0
    late_entry: bool = False
    user_index: int = 0


def ucb_index(mean: float, pulls: int, t: int) -> float:
    if pulls == 0:
        return math.inf
    return mean + math.sqrt(2.0 * math.log(t) / pulls)


class ArmStats:
    """Per-channel pull counts and reward sums from this user's own successes."""

    def __init__(self, k: int):
        self.counts = [0] * k
        self.sums = [0.0] * k

    def add(self, c: int, r: float):
        self.counts[c] += 1
        self.sums[c] += r

    def mean(self, c: int) -> float:
        n = self.counts[c]
        return self.sums[c] / n if n else 0.0

    def means(self) -> list[float]:
        return [s / n if n else 0.0 for s, n in zip(self.sums, self.counts)]

    def ucb(self, c: int, t: int) -> float:
        return ucb_index(self.mean(c), self.counts[c], t)

    def ranking(self) -> list[int]:
        """Channels by decreasing empirical mean, ties to the lower index."""
        m = self.means()
        return sorted(range(len(m)), key=lambda c: (-m[c], c))

    def absorb(self, channels: np.ndarray, success: np.ndarray, reward: np.ndarray):
        """Add a batch of samples in time order (same rounding as one-by-one adds)."""
        idx = channels[success]
        if idx.size == 0:
            return
        sums = np.array(self.sums)
        np.add.at(sums, idx, reward[success])
        self.sums = sums.tolist()
        cnt = np.bincount(idx, minlength=len(self.counts))
        self.counts = [a + int(b) for a, b in zip(self.counts, cnt)]


def seqhop_next(c: int, k: int) -> int:
    """Next channel of the sequential-hopping cycle."""
    return (c + 1) % k


@dataclass
class Plan:
    """Actions for the slots ``t .. t + len(tx) - 1``.

    ``tx[i]`` is the transmit channel or -1; ``sense[i]`` a sensed channel or
    -1. A reactive plan needs the outcomes and may be cut short by them.
    """

    tx: np.ndarray
    sense: Optional[np.ndarray] = None
    reactive: bool = False
    data: bool = True

    def __len__(self):
        return len(self.tx)

    def action(self, i: int) -> Action:
        c = int(self.tx[i])
        if c >= 0:
            return transmit(c, data=self.data)
        if self.sense is not None and self.sense[i] >= 0:
            return sense(int(self.sense[i]))
        return idle()


class Outcomes(NamedTuple):
    success: np.ndarray
    reward: np.ndarray
    collided: np.ndarray  # as this user's radio can tell
    busy: np.ndarray  # sensed busy on sense slots


def constant_plan(channel: int, length: int, reactive: bool = False, data: bool = True) -> Plan:
    return Plan(np.full(length, channel, dtype=np.int64), None, reactive, data)


def hop_plan(channel: int, k: int, length: int, reactive: bool = True) -> Plan:
    return Plan((channel + np.arange(length, dtype=np.int64)) % k, None, reactive)


def sense_plan(channel: int, length: int) -> Plan:
    return Plan(np.full(length, -1, dtype=np.int64), np.full(length, channel, dtype=np.int64), True)


def first_true(mask: np.ndarray) -> int:
    """Index of the first True entry, or ``len(mask)`` if there is none."""
    hit = np.flatnonzero(mask)
    return int(hit[0]) if hit.size else len(mask)


class Policy:
    """Base class: one instance per user, fed its own observations only."""

    name = "policy"
    needs_sensing = False

    def __init__(self, ctx: PolicyContext, seed):
        self.reset(ctx, seed)

    def reset(self, ctx: PolicyContext, seed):
        self.ctx = ctx
        self.rng = seed if isinstance(seed, random.Random) else random.Random(seed)
        self.K = ctx.num_channels
        self.start = ctx.start_slot
        self.phase = "init"
        self.setup()

    def setup(self):
        pass

    def param(self, key, default=None):
        v = self.ctx.params.get(key)
        return default if v is None else v

    def act(self, t: int) -> Action:
        raise NotImplementedError

    def update(self, obs: Observation):
        raise NotImplementedError

    def plan(self, t: int, max_len: int) -> Optional[Plan]:
        return None

    def horizon(self, t: int, plan: Plan, out: Outcomes) -> int:
        """How many leading plan slots can be committed given the outcomes."""
        return len(plan)

    def advance(self, t: int, plan: Plan, out: Optional[Outcomes], m: int):
        """Commit the first ``m`` slots of ``plan`` as if stepped one by one."""
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(phase={self.phase!r})"


def uniform_choice(rng: random.Random, seq):
    return seq[rng.randrange(len(seq))]


def is_tx(action: Action) -> bool:
    return action.kind == TRANSMIT


def is_sense(action: Action) -> bool:
    return action.kind == SENSE
