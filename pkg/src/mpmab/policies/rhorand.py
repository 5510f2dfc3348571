"""rhoRAND: rank-based UCB with a random rank redraw after each collision."""
from __future__ import annotations

from ..radio import transmit
from .base import ArmStats, Policy


class RhoRand(Policy):
    """Target the ``rank``-th best channel by UCB index; redraw the rank in
    ``0..N-1`` after every collision. Needs the number of users."""

    name = "rhorand"

    def setup(self):
        n = self.ctx.num_users or self.K
        self.n = max(1, min(n, self.K))
        self.rank = self.rng.randrange(self.n)
        self.stats = ArmStats(self.K)
        self.tau = 0
        self.channel = None
        self.phase = "ucb"

    def act(self, t):
        tt = self.tau + 1
        idx = [self.stats.ucb(c, tt) for c in range(self.K)]
        order = sorted(range(self.K), key=lambda c: (-idx[c], c))
        self.channel = order[self.rank]
        return transmit(self.channel)

    def update(self, obs):
        self.tau += 1
        if obs.success:
            self.stats.add(self.channel, obs.reward)
        if obs.collided:
            self.rank = self.rng.randrange(self.n)
