"""Random hopping (orthogonalization) and sequential hopping."""
from __future__ import annotations

from ..radio import transmit
from .base import ArmStats, Policy, constant_plan, first_true, hop_plan, seqhop_next


class RandomHop(Policy):
    """Stay while collision-free, jump to a uniformly drawn channel after a collision.

    A user that has been collision-free for K consecutive slots counts as
    orthogonalized.
    """

    name = "random_hop"

    def setup(self):
        self.channel = self.rng.randrange(self.K)
        self.clean = 0
        self.orthogonal = False
        self.stats = ArmStats(self.K)
        self.phase = "rh"

    def act(self, t):
        return transmit(self.channel)

    def update(self, obs):
        if obs.success:
            self.stats.add(self.channel, obs.reward)
        self._step(obs.collided)

    def _step(self, collided):
        if collided:
            self.channel = self.rng.randrange(self.K)
            self.clean = 0
        else:
            self.clean += 1
            if self.clean >= self.K and not self.orthogonal:
                self.orthogonal = True
                self.phase = "orthogonal"

    def plan(self, t, max_len):
        return constant_plan(self.channel, max_len, reactive=True)

    def horizon(self, t, plan, out):
        return first_true(out.collided)

    def advance(self, t, plan, out, m):
        self.stats.absorb(plan.tx[:m], out.success[:m], out.reward[:m])
        self.clean += m
        if self.clean >= self.K and not self.orthogonal:
            self.orthogonal = True
            self.phase = "orthogonal"


def random_hop_step(policy: RandomHop, obs):
    """One random-hopping transition; returns the next action."""
    policy.update(obs)
    return policy.act(obs.t + 1)


class SeqHop(Policy):
    """Sequential hopping: move to the next channel every slot.

    Users on distinct channels stay on distinct channels forever. A collision
    (users that started on the same channel) re-draws the channel uniformly.
    Parameter ``initial``: ``random`` (default) or ``user_index`` to start
    pre-orthogonalized on channel ``user_index mod K``.
    """

    name = "sh"

    def setup(self):
        if self.param("initial", "random") == "user_index":
            self.channel = self.ctx.user_index % self.K
        else:
            self.channel = self.rng.randrange(self.K)
        self.stats = ArmStats(self.K)
        self.phase = "sh"

    def act(self, t):
        return transmit(self.channel)

    def update(self, obs):
        if obs.success:
            self.stats.add(self.channel, obs.reward)
        if obs.collided:
            self.channel = self.rng.randrange(self.K)
        else:
            self.channel = seqhop_next(self.channel, self.K)

    def plan(self, t, max_len):
        return hop_plan(self.channel, self.K, max_len)

    def horizon(self, t, plan, out):
        return first_true(out.collided)

    def advance(self, t, plan, out, m):
        self.stats.absorb(plan.tx[:m], out.success[:m], out.reward[:m])
        self.channel = (self.channel + m) % self.K
