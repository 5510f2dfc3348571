"""Adapting static algorithms to networks where users come and go."""
from __future__ import annotations

import dataclasses
import random

from ..env import ConfigurationError
from .base import Policy, PolicyContext

DEFAULT_EPOCH_LENGTH = 20000


def epoch_boundaries(first: int, horizon: int) -> list[int]:
    """Global restart slots ``0, E, 3E, 7E, ...`` (epoch lengths double) below ``horizon``."""
    if first < 1:
        raise ConfigurationError("epoch_length must be >= 1")
    out = [0]
    length = first
    while out[-1] + length < horizon:
        out.append(out[-1] + length)
        length *= 2
    return out


class EpochReset(Policy):
    """Run a fresh instance of ``base_cls`` in every epoch of a doubling
    schedule shared by all users (global slot clock). A user entering mid-epoch
    starts the base algorithm right away and restarts with everyone else at
    the next boundary."""

    def __init__(self, base_cls: type, name: str, ctx: PolicyContext, seed):
        self.base_cls = base_cls
        self.name = name
        self.needs_sensing = base_cls.needs_sensing
        super().__init__(ctx, seed)

    def setup(self):
        first = int(self.param("epoch_length", DEFAULT_EPOCH_LENGTH))
        self.boundaries = epoch_boundaries(first, max(self.ctx.horizon, 1))
        self.epoch = sum(1 for b in self.boundaries if b <= self.start) - 1
        self.epochs_started = 1
        self.base = self.base_cls(self.ctx, self.rng)

    @property
    def phase(self):
        return self.base.phase if hasattr(self, "base") else "init"

    @phase.setter
    def phase(self, value):
        pass

    @property
    def next_boundary(self) -> int:
        e = self.epoch + 1
        return self.boundaries[e] if e < len(self.boundaries) else 1 << 62

    def _sync(self, t: int):
        if t >= self.next_boundary:
            while t >= self.next_boundary:
                self.epoch += 1
            ctx = dataclasses.replace(self.ctx, start_slot=self.boundaries[self.epoch], late_entry=False)
            self.base.reset(ctx, self.rng)
            self.epochs_started += 1

    def act(self, t):
        self._sync(t)
        return self.base.act(t)

    def update(self, obs):
        self.base.update(obs)

    def plan(self, t, max_len):
        self._sync(t)
        return self.base.plan(t, min(max_len, self.next_boundary - t))

    def horizon(self, t, plan, out):
        return self.base.horizon(t, plan, out)

    def advance(self, t, plan, out, m):
        self.base.advance(t, plan, out, m)

    def __getattr__(self, item):
        # Expose the running base instance's state (stats, channel, ...).
        if item == "base":
            raise AttributeError(item)
        return getattr(self.base, item)


def dynamic_wrapper(base_cls: type, mode: str, name: str | None = None):
    """Factory ``(ctx, seed) -> Policy`` for a dynamic-network variant.

    ``epoch-reset`` restarts ``base_cls`` on the doubling schedule; ``trek``
    expects a trekking class that handles entry and departures itself.
    """
    if mode == "epoch-reset":
        label = name or f"d{base_cls.name}"

        def make(ctx, seed):
            return EpochReset(base_cls, label, ctx, seed)

        make.name = label
        make.needs_sensing = base_cls.needs_sensing
        return make
    if mode == "trek":
        if not getattr(base_cls, "dynamic", False):
            raise ConfigurationError(f"{base_cls.__name__} has no trek mode")
        return base_cls
    raise ConfigurationError(f"unknown dynamic mode {mode!r}")
