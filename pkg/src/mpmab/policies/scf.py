"""SCF: random-hop orthogonalization, sequential-hop learning with one-hot
sensing to count users, then a rank-matched fixed channel."""
from __future__ import annotations

from ..env import ConfigurationError
from ..radio import sense, transmit
from .base import (
    ArmStats,
    Policy,
    constant_plan,
    first_true,
    hop_plan,
    seqhop_next,
    sense_plan,
    uniform_choice,
)

DEFAULT_SH_ROUNDS = 1000


def hop_lengths(policy: Policy) -> tuple[int, int]:
    """(random-hop length, sequential-hop length) from the parameter table."""
    k = policy.K
    rh = int(policy.param("rh_length", 2 * k * k))
    sh = policy.param("sh_length")
    sh = int(sh) if sh is not None else k * int(policy.param("sh_rounds", DEFAULT_SH_ROUNDS))
    if rh < 0:
        raise ConfigurationError("rh_length must be >= 0")
    return rh, sh


class SCF(Policy):
    """Phases, in local slots ``k`` since the user started:

    * ``rh``: stay on a channel, redraw uniformly after collisions.
    * ``sh``: hop ``c -> c+1`` every slot, sampling every channel evenly.
      The last K*K slots of this phase hold K sensing windows of K slots. A
      user with hop offset ``o = (c - k) mod K`` senses in window ``o``; every
      other hopping user crosses the sensed channel exactly once, so busy
      slots count the other users and reveal their offsets.
    * ``settle``: the user with the ``r``-th smallest offset takes the ``r``-th
      best channel of the empirical top-N-hat. A collision on arrival falls
      back to musical chairs over the top-N-hat.
    * ``fixed``: absorbing.
    """

    name = "scf"
    needs_sensing = True

    def setup(self):
        self.rh_len, self.sh_len = hop_lengths(self)
        if self.sh_len < self.K * self.K:
            raise ConfigurationError(f"sh_length must be at least K*K = {self.K * self.K}")
        self.ohs_start = self.rh_len + self.sh_len - self.K * self.K
        self.fix_start = self.rh_len + self.sh_len
        self.channel = self.rng.randrange(self.K)
        self.stats = ArmStats(self.K)
        self.k = 0
        self.offset = None
        self.window_start = None
        self.window_channel = None
        self.seen: set[int] = set()
        self.n_hat = None
        self.rank = None
        self.top = None
        self.phase = "rh"
        self._enter()

    def _enter(self):
        """Phase changes at local slot ``self.k``."""
        k = self.k
        if self.phase == "rh" and k >= self.rh_len:
            self.phase = "sh"
        if self.phase == "sh" and self.offset is None and k >= self.ohs_start:
            self.offset = (self.channel - k) % self.K
            self.window_start = self.ohs_start + self.offset * self.K
        if self.phase == "sh" and self.window_start is not None and k == self.window_start:
            self.phase = "ohs"
            self.window_channel = self.channel
        if self.phase == "ohs" and k == self.window_start + self.K:
            self.phase = "sh"
        if self.phase == "sh" and k >= self.fix_start:
            self._settle()

    def _settle(self):
        self.n_hat = len(self.seen) + 1
        self.rank = sum(1 for o in self.seen if o < self.offset)
        self.top = self.stats.ranking()[: self.n_hat]
        self.channel = self.top[min(self.rank, self.n_hat - 1)]
        self.phase = "settle"

    def act(self, t):
        if self.phase == "ohs":
            return sense(self.window_channel)
        return transmit(self.channel)

    def update(self, obs):
        phase = self.phase
        if phase == "ohs":
            if obs.sensed_busy(self.window_channel):
                self.seen.add((self.window_channel - self.k) % self.K)
        elif phase in ("rh", "sh"):
            if obs.success:
                self.stats.add(self.channel, obs.reward)
            if obs.collided:
                self.channel = self.rng.randrange(self.K)
            elif phase == "sh":
                self.channel = seqhop_next(self.channel, self.K)
        elif phase in ("settle", "chairs"):
            if obs.collided:
                self.channel = uniform_choice(self.rng, self.top)
                self.phase = "chairs"
            else:
                self.phase = "fixed"
        self.k += 1
        self._enter()

    def _boundary(self) -> int:
        k = self.k
        if self.phase == "rh":
            return self.rh_len
        if self.phase == "ohs":
            return self.window_start + self.K
        if self.window_start is not None and k < self.window_start:
            return self.window_start
        if self.offset is None:
            return self.ohs_start
        return self.fix_start

    def plan(self, t, max_len):
        phase = self.phase
        if phase == "fixed":
            return constant_plan(self.channel, max_len)
        if phase in ("settle", "chairs"):
            return None
        n = min(max_len, self._boundary() - self.k)
        if phase == "ohs":
            return sense_plan(self.window_channel, n)
        if phase == "rh":
            return constant_plan(self.channel, n, reactive=True)
        return hop_plan(self.channel, self.K, n)

    def horizon(self, t, plan, out):
        if self.phase in ("rh", "sh"):
            return first_true(out.collided)
        return len(plan)

    def advance(self, t, plan, out, m):
        phase = self.phase
        if phase == "fixed":
            return
        if phase == "ohs":
            for i in range(m):
                if out.busy[i]:
                    self.seen.add((self.window_channel - self.k - i) % self.K)
        else:
            self.stats.absorb(plan.tx[:m], out.success[:m], out.reward[:m])
            if phase == "sh":
                self.channel = (self.channel + m) % self.K
        self.k += m
        self._enter()
