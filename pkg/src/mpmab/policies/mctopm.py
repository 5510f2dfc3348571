"""MCTopM and its N-agnostic variant UMCTopM."""
from __future__ import annotations

import math

import numpy as np

from ..radio import transmit
from .base import ArmStats, Policy, constant_plan, first_true, uniform_choice


class MCTopM(Policy):
    """Musical chairs restricted to the UCB top-N set, with a lock.

    A user leaves its channel when the channel drops out of the estimated
    top-N set (regardless of the lock), or after a collision while unlocked.
    A collision-free slot on a top-N channel locks the user.
    """

    name = "mctopm"
    assume_all_channels = False

    def setup(self):
        if self.assume_all_channels:
            n = self.K
        else:
            n = self.ctx.num_users or self.K
        self.n = max(1, min(n, self.K))
        self.stats = ArmStats(self.K)
        self.tau = 0
        self.arm = self.rng.randrange(self.K)
        self.locked = False
        self.indices = [math.inf] * self.K
        self.phase = "mctopm"
        self._cache = None

    def _indices(self) -> list[float]:
        # Same arithmetic as ucb_index, inlined for speed.
        lg = 2.0 * math.log(self.tau)
        sqrt = math.sqrt
        return [s / n + sqrt(lg / n) if n else math.inf for s, n in zip(self.stats.sums, self.stats.counts)]

    def top_set(self, indices) -> list[int]:
        order = sorted(range(self.K), key=lambda c: (-indices[c], c))
        return order[: self.n]

    def act(self, t):
        return transmit(self.arm)

    def update(self, obs):
        self.tau += 1
        a = self.arm
        if obs.success:
            self.stats.add(a, obs.reward)
        prev = self.indices
        g = self._indices()
        self.indices = g
        best = self.top_set(g)
        collided = obs.collided
        if a not in best:
            if collided:
                pool = best
            else:
                pool = [m for m in best if prev[m] <= prev[a]] or best
            self.arm = uniform_choice(self.rng, pool)
            self.locked = False
        elif collided and not self.locked:
            self.arm = uniform_choice(self.rng, best)
        else:
            self.locked = True

    # Locked on a top-N arm: the channel is constant until it leaves the set.
    def plan(self, t, max_len):
        if not self.locked:
            return None
        return constant_plan(self.arm, max_len, reactive=True)

    def _trajectory(self, plan, out):
        if self._cache is not None and self._cache[0] is plan and self._cache[1] is out:
            return self._cache[2]
        a = self.arm
        L = len(plan)
        succ = out.success
        rew = np.where(succ, out.reward, 0.0)
        counts = self.stats.counts[a] + np.cumsum(succ)
        sums = np.cumsum(np.concatenate(([self.stats.sums[a]], rew)))[1:]
        tau = self.tau + 1 + np.arange(L)
        logt = np.log(tau.astype(float))
        with np.errstate(divide="ignore", invalid="ignore"):
            own = np.where(counts > 0, sums / counts + np.sqrt(2.0 * logt / counts), np.inf)
        if self.n >= self.K:
            leave = np.zeros(L, dtype=bool)
        else:
            above = np.zeros(L, dtype=np.int64)
            for c in range(self.K):
                if c == a:
                    continue
                s = self.stats.counts[c]
                if s == 0:
                    above += np.isfinite(own) | (c < a)
                    continue
                g = self.stats.sums[c] / s + np.sqrt(2.0 * logt / s)
                above += (g > own) if c > a else (g >= own)
            leave = above >= self.n
        res = (counts, sums, logt, leave)
        self._cache = (plan, out, res)
        return res

    def horizon(self, t, plan, out):
        return first_true(self._trajectory(plan, out)[3])

    def advance(self, t, plan, out, m):
        counts, sums, logt, _ = self._trajectory(plan, out)
        self._cache = None
        a = self.arm
        self.stats.counts[a] = int(counts[m - 1])
        self.stats.sums[a] = float(sums[m - 1])
        self.tau += m
        self.indices = self._indices()


class UMCTopM(MCTopM):
    """MCTopM without knowledge of N: the top set is every channel."""

    name = "umctopm"
    assume_all_channels = True
