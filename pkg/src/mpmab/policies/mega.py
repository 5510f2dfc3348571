"""MEGA: epsilon-greedy learning with ALOHA-style persistence and back-off."""
from __future__ import annotations

from ..radio import idle, transmit
from .base import ArmStats, Policy, uniform_choice

DEFAULTS = {"c": 0.1, "d": 0.05, "p0": 0.6, "alpha": 0.5, "beta": 0.8}


class Mega(Policy):
    """Explore with probability ``min(1, cK^2/(d^2 tau))``, otherwise exploit the
    best empirical channel among those not backed off. After a collision the
    user persists with probability ``p`` (then ``p *= alpha``); otherwise it
    resets ``p`` and marks the channel unavailable for a uniform number of
    slots in ``[0, tau^beta]``. With every channel backed off the user stays
    idle. Each success pulls ``p`` towards 1, so an
    established user tends to win a contested channel."""

    name = "mega"

    def setup(self):
        self.c = float(self.param("c", DEFAULTS["c"]))
        self.d = float(self.param("d", DEFAULTS["d"]))
        self.p0 = float(self.param("p0", DEFAULTS["p0"]))
        self.alpha = float(self.param("alpha", DEFAULTS["alpha"]))
        self.beta = float(self.param("beta", DEFAULTS["beta"]))
        self.stats = ArmStats(self.K)
        self.tau = 0
        self.p = self.p0
        self.persist = False
        self.until = [0.0] * self.K
        self.arm = 0
        self.phase = "mega"

    def epsilon(self, tau: int) -> float:
        return min(1.0, self.c * self.K * self.K / (self.d * self.d * tau))

    def act(self, t):
        if not self.persist:
            avail = [c for c in range(self.K) if self.until[c] <= t]
            if not avail:
                self.arm = None
                return idle()
            if self.rng.random() < self.epsilon(self.tau + 1):
                self.arm = uniform_choice(self.rng, avail)
            else:
                m = self.stats.means()
                self.arm = min(avail, key=lambda c: (-m[c], c))
        return transmit(self.arm)

    def update(self, obs):
        self.tau += 1
        if self.arm is None:
            return
        if obs.success:
            self.stats.add(self.arm, obs.reward)
        if obs.collided:
            if self.rng.random() < self.p:
                self.persist = True
                self.p *= self.alpha
            else:
                self.persist = False
                self.p = self.p0
                self.until[self.arm] = obs.t + 1 + self.rng.uniform(0.0, self.tau**self.beta)
        else:
            self.persist = False
            if obs.success:
                self.p = self.alpha * self.p + (1.0 - self.alpha)
