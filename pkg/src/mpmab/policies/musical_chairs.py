"""Musical Chairs: uniform exploration, collision-based population estimate, then fix."""
from __future__ import annotations

import math

import numpy as np

from ..env import ConfigurationError
from ..radio import transmit
from .base import ArmStats, Plan, Policy, constant_plan, uniform_choice

DEFAULT_LEARNING_LENGTH = 3000


def estimate_users(collision_rate: float, num_channels: int) -> int:
    """Invert the uniform-play collision probability ``1 - (1 - 1/K)^(N-1)``."""
    k = num_channels
    if k == 1:
        return 1
    if collision_rate >= 1.0:
        return k
    x = math.log(1.0 - collision_rate) / math.log(1.0 - 1.0 / k)
    return max(1, min(k, 1 + math.floor(x + 0.5)))


class MusicalChairs(Policy):
    """Learning phase of ``learning_length`` uniformly random slots, then
    uniform play over the empirical top-N-hat until the first collision-free
    slot, after which the channel is fixed for good."""

    name = "mc"

    def setup(self):
        self.t0 = int(self.param("learning_length", DEFAULT_LEARNING_LENGTH))
        if self.t0 < 1:
            raise ConfigurationError("learning_length must be >= 1")
        self.sequence = np.array([self.rng.randrange(self.K) for _ in range(self.t0)], dtype=np.int64)
        self._seq_list = self.sequence.tolist()
        self.k = 0
        self.collisions = 0
        self.stats = ArmStats(self.K)
        self.n_hat = None
        self.top = None
        self.arm = None
        self.phase = "learn"

    @property
    def fixed(self) -> bool:
        return self.phase == "fixed"

    def act(self, t):
        if self.phase == "learn":
            return transmit(self._seq_list[self.k])
        return transmit(self.arm)

    def update(self, obs):
        if self.phase == "learn":
            c = self._seq_list[self.k]
            if obs.success:
                self.stats.add(c, obs.reward)
            if obs.collided:
                self.collisions += 1
            self.k += 1
            if self.k == self.t0:
                self._finish_learning()
        elif self.phase == "chairs":
            if obs.collided:
                self.arm = uniform_choice(self.rng, self.top)
            else:
                self.phase = "fixed"

    def _finish_learning(self):
        self.n_hat = estimate_users(self.collisions / self.t0, self.K)
        self.top = self.stats.ranking()[: self.n_hat]
        self.arm = uniform_choice(self.rng, self.top)
        self.phase = "chairs"

    def plan(self, t, max_len):
        if self.phase == "learn":
            n = min(max_len, self.t0 - self.k)
            return Plan(self.sequence[self.k : self.k + n], None, True)
        if self.phase == "fixed":
            return constant_plan(self.arm, max_len)
        return None

    def advance(self, t, plan, out, m):
        if self.phase != "learn":
            return
        self.stats.absorb(plan.tx[:m], out.success[:m], out.reward[:m])
        self.collisions += int(np.count_nonzero(out.collided[:m]))
        self.k += m
        if self.k == self.t0:
            self._finish_learning()
