"""Slotted-time ground truth: PU occupancy, reward draws and collision resolution."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .allocation import matching_value, top_n
from .radio import IDLE, SENSE, SENSE_WIDEBAND, TRANSMIT, Action

BERNOULLI = "bernoulli"
UNIFORM = "uniform"
REWARD_LAWS = (BERNOULLI, UNIFORM)

CHUNK = 8192


class ConfigurationError(ValueError):
    """Invalid experiment or model configuration."""


@dataclass
class ChannelModel:
    """Channel statistics seen by the secondary users.

    ``mean_rates`` is indexed ``[row][channel]``; a single row means every user
    sees the same means (homogeneous network), otherwise user ``i`` uses row ``i``.
    """

    mean_rates: np.ndarray
    occupancy: np.ndarray
    change_points: list = field(default_factory=list)
    reward_law: str = BERNOULLI
    half_width: float = 0.1
    fade_probability: float = 0.0

    def __post_init__(self):
        self.mean_rates = np.atleast_2d(np.asarray(self.mean_rates, dtype=float))
        k = self.mean_rates.shape[1]
        if k < 1:
            raise ConfigurationError("need at least one channel")
        if self.occupancy is None:
            self.occupancy = np.zeros(k)
        self.occupancy = np.asarray(self.occupancy, dtype=float).reshape(-1)
        if self.occupancy.shape != (k,):
            raise ConfigurationError(f"occupancy needs {k} entries, got {self.occupancy.size}")
        cps = []
        last = 0
        for slot, means in self.change_points:
            means = np.atleast_2d(np.asarray(means, dtype=float))
            if int(slot) <= last:
                raise ConfigurationError("change points must be strictly increasing and after slot 0")
            if means.shape != self.mean_rates.shape:
                raise ConfigurationError(
                    f"change point at slot {slot} has shape {means.shape}, expected {self.mean_rates.shape}"
                )
            cps.append((int(slot), means))
            last = int(slot)
        self.change_points = cps
        for arr in [self.mean_rates, self.occupancy] + [m for _, m in cps]:
            if np.any(arr < 0) or np.any(arr > 1) or not np.all(np.isfinite(arr)):
                raise ConfigurationError("means and occupancy rates must lie in [0, 1]")
        if self.reward_law not in REWARD_LAWS:
            raise ConfigurationError(f"unknown reward law {self.reward_law!r}")
        if not 0 <= self.half_width <= 0.5:
            raise ConfigurationError("half_width must lie in [0, 0.5]")
        if not 0 <= self.fade_probability < 1:
            raise ConfigurationError("fade_probability must lie in [0, 1)")

    @property
    def num_channels(self) -> int:
        return self.mean_rates.shape[1]

    @property
    def rows(self) -> int:
        return self.mean_rates.shape[0]

    @property
    def homogeneous(self) -> bool:
        return self.rows == 1

    def segment(self, t: int) -> int:
        """Index of the mean matrix active at slot ``t`` (0 = initial)."""
        seg = 0
        for slot, _ in self.change_points:
            if t >= slot:
                seg += 1
            else:
                break
        return seg

    def means_at(self, t: int) -> np.ndarray:
        seg = self.segment(t)
        return self.mean_rates if seg == 0 else self.change_points[seg - 1][1]

    def expected_value(self, means: np.ndarray) -> np.ndarray:
        """Expected reward of a lone transmission attempt, per (row, channel)."""
        return means * (1.0 - self.occupancy) * (1.0 - self.fade_probability)

    def row_of(self, user: int) -> int:
        if self.homogeneous:
            return 0
        if user >= self.rows:
            raise ConfigurationError(f"user {user} has no row in the {self.rows}-row mean matrix")
        return user


def _rewards_from_uniforms(model: ChannelModel, means: np.ndarray, u: np.ndarray) -> np.ndarray:
    if model.reward_law == BERNOULLI:
        return (u < means).astype(float)
    # Width shrinks near the edges so the law keeps mean ``means``.
    w = np.minimum(model.half_width, np.minimum(means, 1.0 - means))
    return means - w + 2.0 * w * u


def draw_slot(model: ChannelModel, t: int, rng: np.random.Generator):
    """Draw one slot: PU occupancy per channel and the reward each channel would yield.

    Rewards are returned per mean-matrix row (a single row when homogeneous).
    """
    k = model.num_channels
    u = rng.random(k)
    occ = rng.random(k) < model.occupancy
    rewards = _rewards_from_uniforms(model, model.means_at(t), u[None, :])
    return occ, rewards


@dataclass
class SlotGroundTruth:
    slot: int
    pu_occupied: tuple
    reward_draws: list
    actions: dict
    collision_sets: frozenset
    pu_interference_events: int
    tx_count: list
    success: dict
    rewards: dict
    faded: tuple = ()

    def busy(self, c: int) -> bool:
        return bool(self.pu_occupied[c]) or self.tx_count[c] > 0


def resolve_slot(
    pu_occupied: Sequence[bool],
    reward_draws,
    actions: Mapping[int, Action],
    *,
    slot: int = 0,
    rows: Optional[Mapping[int, int]] = None,
    faded: Sequence[bool] = (),
) -> SlotGroundTruth:
    """Apply the collision model to one slot of per-user actions.

    A user earns the channel's draw only when it transmits alone on a channel
    free of primary users (and the transmission is not faded).
    """
    k = len(pu_occupied)
    if reward_draws and not hasattr(reward_draws[0], "__len__"):
        reward_draws = [reward_draws]
    tx_count = [0] * k
    for uid, a in actions.items():
        kind = a.kind
        if kind == TRANSMIT:
            c = a.channel
            if c is None or not 0 <= c < k:
                raise ConfigurationError(f"user {uid} transmits on invalid channel {c!r}")
            tx_count[c] += 1
        elif kind == SENSE:
            if a.channel is None or not 0 <= a.channel < k:
                raise ConfigurationError(f"user {uid} senses invalid channel {a.channel!r}")
        elif kind not in (IDLE, SENSE_WIDEBAND):
            raise ConfigurationError(f"user {uid} has unknown action kind {kind!r}")
    success = {}
    rewards = {}
    interference = 0
    for uid, a in actions.items():
        if a.kind != TRANSMIT:
            continue
        c = a.channel
        if pu_occupied[c]:
            interference += 1
        ok = tx_count[c] == 1 and not pu_occupied[c] and not (faded and faded[c])
        success[uid] = ok
        if ok:
            row = rows[uid] if rows is not None else 0
            rewards[uid] = float(reward_draws[row][c])
        else:
            rewards[uid] = 0.0
    collisions = frozenset(c for c in range(k) if tx_count[c] >= 2)
    return SlotGroundTruth(
        slot=slot,
        pu_occupied=tuple(bool(x) for x in pu_occupied),
        reward_draws=reward_draws,
        actions=dict(actions),
        collision_sets=collisions,
        pu_interference_events=interference,
        tx_count=tx_count,
        success=success,
        rewards=rewards,
        faded=tuple(faded),
    )


def oracle_slot_value(model: ChannelModel, n: int, t: int = 0, rows: Optional[Sequence[int]] = None) -> float:
    """Best achievable expected network reward at slot ``t`` with ``n`` active users."""
    if n <= 0:
        return 0.0
    ev = model.expected_value(model.means_at(t))
    if model.homogeneous:
        return top_n(list(ev[0]), n).value
    if rows is None:
        rows = range(n)
    return matching_value([ev[r] for r in rows])


@dataclass
class WindowArrays:
    """Ground-truth arrays for the slot range ``[start, start + length)``."""

    start: int
    pu: np.ndarray  # (L, K) bool
    fade: np.ndarray  # (L, K) bool
    rewards: np.ndarray  # (L, rows, K)
    segments: np.ndarray  # (L,) mean-matrix segment index


class Environment:
    """Counter-based ground truth for one replication.

    Slot ``t`` is a pure function of (seed, replication, t): draws come from
    fixed-size chunks with their own seed sequence, so the order in which
    slots are read never changes what they contain.
    """

    def __init__(self, model: ChannelModel, seed: int, replication: int):
        self.model = model
        self.seed = int(seed)
        self.replication = int(replication)
        self._chunk_id = -1
        self._chunk = None
        self._chunk_cache: dict = {}
        self._oracle_cache: dict = {}
        self._seg_means = [model.mean_rates] + [m for _, m in model.change_points]
        self._seg_values = [model.expected_value(m) for m in self._seg_means]
        self._cp_slots = np.array([s for s, _ in model.change_points], dtype=np.int64)

    def _load(self, j: int):
        if j == self._chunk_id:
            return self._chunk
        cached = self._chunk_cache.get(j)
        if cached is None:
            cached = self._make_chunk(j)
            if len(self._chunk_cache) >= 2:
                self._chunk_cache.pop(next(iter(self._chunk_cache)))
            self._chunk_cache[j] = cached
        self._chunk_id = j
        self._chunk = cached
        return cached

    def _make_chunk(self, j: int):
        m = self.model
        k = m.num_channels
        ss = np.random.SeedSequence([self.seed, self.replication, 0, j])
        rng = np.random.Generator(np.random.PCG64(ss))
        u = rng.random((CHUNK, k))
        pu = rng.random((CHUNK, k)) < m.occupancy if np.any(m.occupancy > 0) else np.zeros((CHUNK, k), bool)
        fade = (
            rng.random((CHUNK, k)) < m.fade_probability
            if m.fade_probability > 0
            else np.zeros((CHUNK, k), bool)
        )
        slots = np.arange(j * CHUNK, (j + 1) * CHUNK)
        segs = np.searchsorted(self._cp_slots, slots, side="right")
        if len(self._seg_means) == 1:
            rewards = _rewards_from_uniforms(m, m.mean_rates[None, :, :], u[:, None, :])
        else:
            means = np.stack(self._seg_means)[segs]
            rewards = _rewards_from_uniforms(m, means, u[:, None, :])
        return pu, fade, rewards, segs

    def draw_slot(self, t: int):
        """(pu_occupied, reward_draws per row, faded) for slot ``t`` as Python lists."""
        j, i = divmod(t, CHUNK)
        pu, fade, rewards, _ = self._load(j)
        return pu[i].tolist(), rewards[i].tolist(), fade[i].tolist()

    def window(self, start: int, length: int) -> WindowArrays:
        parts = []
        t = start
        end = start + length
        while t < end:
            j, i = divmod(t, CHUNK)
            pu, fade, rewards, segs = self._load(j)
            stop = min(CHUNK, i + end - t)
            parts.append((pu[i:stop], fade[i:stop], rewards[i:stop], segs[i:stop]))
            t += stop - i
        if len(parts) == 1:
            pu, fade, rewards, segs = parts[0]
        else:
            pu, fade, rewards, segs = (np.concatenate(x) for x in zip(*parts))
        return WindowArrays(start, pu, fade, rewards, segs)

    def segment_values(self, seg: int) -> np.ndarray:
        """Expected reward of a lone attempt per (row, channel) in a mean segment."""
        return self._seg_values[seg]

    def segment(self, t: int) -> int:
        return int(np.searchsorted(self._cp_slots, t, side="right"))

    def oracle(self, rows: tuple, seg: int) -> float:
        key = (rows, seg)
        val = self._oracle_cache.get(key)
        if val is None:
            ev = self._seg_values[seg]
            n = len(rows)
            if n == 0:
                val = 0.0
            elif self.model.homogeneous:
                val = top_n(list(ev[0]), n).value
            else:
                val = matching_value([ev[r] for r in rows])
            self._oracle_cache[key] = val
        return val
