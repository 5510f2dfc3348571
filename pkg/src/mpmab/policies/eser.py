"""ESER / mESER: epochs of explore, signal, match and exploit for
heterogeneous channel means.

Each epoch the users sequentially hop to refine their own row of the mean
matrix, broadcast the quantized row with on-off keyed frames on a home
channel while everyone else listens, solve the same maximum-weight
matching locally and exploit the assigned channel for twice as long as in
the previous epoch. The user count and the speaking order come from the
one-hot sensing windows of the first explore phase (see :mod:`.scf`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..allocation import hungarian
from ..env import ConfigurationError
from ..radio import ContractViolation, sense, transmit
from ..signaling import ParityError, decode_frame, dequantize, emit_bit, encode_frame, frame_length, home_channel, quantize
from .base import ArmStats, Policy, constant_plan, first_true, hop_plan, seqhop_next, sense_plan

DEFAULT_EXPLORE_A = 5.0
DEFAULT_BITS = 8
DEFAULT_RETRIES = 1


class SignalingError(ContractViolation):
    """A frame could not be decoded after every permitted retry."""


def explore_length(num_channels: int, horizon: int, a: float) -> int:
    """``ceil(K a ln T)`` rounded up to a whole number of hopping cycles (at least K*K)."""
    k = num_channels
    n = math.ceil(k * a * math.log(max(horizon, 2)))
    n = -(-n // k) * k
    return max(n, k * k)


def epoch_bits(epoch: int, max_bits: int, growing: bool) -> int:
    """Bits per estimate in ``epoch`` (1-based): fixed, or ``min(4 + e, max)``."""
    return min(4 + epoch, max_bits) if growing else max_bits


@dataclass(frozen=True)
class Epoch:
    index: int
    start: int
    explore_end: int
    signal_end: int
    end: int
    bits: int


def eser_schedule(
    num_channels: int,
    num_users: int,
    horizon: int,
    rh_length: int | None = None,
    explore_a: float = DEFAULT_EXPLORE_A,
    bits: int = DEFAULT_BITS,
    growing_bits: bool = False,
    exploit_length: int | None = None,
    start: int = 0,
) -> list[Epoch]:
    """Epoch boundaries (in global slots) when no frame needs a retry."""
    k = num_channels
    rh = 2 * k * k if rh_length is None else rh_length
    lx = explore_length(k, horizon, explore_a)
    x = lx if exploit_length is None else exploit_length
    out = []
    t = start + rh
    e = 1
    while t < start + horizon:
        b = epoch_bits(e, bits, growing_bits)
        ex = t + lx
        sig = ex + num_users * (frame_length(k, b) + 1)
        end = sig + x * 2 ** (e - 1)
        out.append(Epoch(e, t, ex, sig, end, b))
        t = end
        e += 1
    return out


class ESER(Policy):
    name = "eser"
    needs_sensing = True
    growing_bits = False

    def setup(self):
        k = self.K
        self.rh_len = int(self.param("rh_length", 2 * k * k))
        self.explore_len = explore_length(k, self.ctx.horizon, float(self.param("explore_a", DEFAULT_EXPLORE_A)))
        x = self.param("exploit_length")
        self.exploit_base = int(x) if x is not None else self.explore_len
        self.max_bits = int(self.param("bits", DEFAULT_BITS))
        self.retries = int(self.param("retries", DEFAULT_RETRIES))
        if self.exploit_base < 1:
            raise ConfigurationError("exploit_length must be >= 1")
        self.stats = ArmStats(k)
        self.channel = self.rng.randrange(k)
        self.epoch = 0
        self.k = 0
        self.remaining = self.rh_len
        self.phase = "rh"
        # one-hot sensing state (first epoch only)
        self.ohs_start = None
        self.offset = None
        self.window_start = None
        self.window_channel = None
        self.window_done = False
        self.explore_end = None
        self.seen: set[int] = set()
        self.n_hat = None
        self.rank = None
        # signaling state
        self.matrix = None
        self.speaker = 0
        self.slot_in_frame = 0
        self.attempt = 0
        self.frame_bits: list[int] = []
        self.heard: list[bool] = []
        self.nack = False
        self.assignment = None
        self.bits = None
        self._roll()

    # -- phase changes -------------------------------------------------

    def _roll(self):
        while self.remaining == 0:
            phase = self.phase
            if phase in ("rh", "exploit"):
                self._start_explore()
            elif phase == "ohs":
                self.window_done = True
                self.phase = "explore"
                self.remaining = self.explore_end - self.k
            elif phase == "explore":
                if self.epoch == 1 and self.offset is None:
                    self.offset = (self.channel - self.k) % self.K
                    self.window_start = self.ohs_start + self.offset * self.K
                    self.remaining = self.window_start - self.k
                    if self.remaining == 0:
                        self._enter_window()
                elif self.epoch == 1 and not self.window_done and self.k == self.window_start:
                    self._enter_window()
                else:
                    self._end_explore()
            else:
                return

    def _enter_window(self):
        self.phase = "ohs"
        self.window_channel = self.channel
        self.remaining = self.K

    def _start_explore(self):
        self.epoch += 1
        self.phase = "explore"
        self.explore_end = self.k + self.explore_len
        if self.epoch == 1:
            self.ohs_start = self.explore_end - self.K * self.K
            self.remaining = self.ohs_start - self.k
        else:
            self.remaining = self.explore_len

    def _end_explore(self):
        if self.n_hat is None:
            self.n_hat = len(self.seen) + 1
            self.rank = sum(1 for o in self.seen if o < self.offset)
        self.bits = epoch_bits(self.epoch, self.max_bits, self.growing_bits)
        own = quantize(self.stats.means(), self.bits)
        self.own_words = own
        self.matrix = [None] * self.n_hat
        self.matrix[self.rank] = dequantize(own, self.bits)
        self.phase = "signal"
        self.remaining = -1
        self._start_speaker(0)

    def _start_speaker(self, r: int):
        self.speaker = r
        self.slot_in_frame = 0
        self.attempt = 0
        self.heard = []
        self.nack = False
        if r == self.rank:
            self.frame_bits = encode_frame(self.own_words, self.bits)

    @property
    def frame_len(self) -> int:
        return frame_length(self.K, self.bits)

    def _frame_finished(self, retry: bool):
        if retry:
            if self.attempt >= self.retries:
                raise SignalingError(
                    f"frame of speaker {self.speaker} failed after {self.attempt + 1} attempts"
                )
            self.attempt += 1
            self.slot_in_frame = 0
            self.heard = []
            self.nack = False
            return
        if self.speaker + 1 < self.n_hat:
            self._start_speaker(self.speaker + 1)
        else:
            self._match()

    def _match(self):
        self.assignment = hungarian(self.matrix)
        self.channel = self.assignment.channels[self.rank]
        self.phase = "exploit"
        self.remaining = self.exploit_base * 2 ** (self.epoch - 1)

    # -- per-slot interface ---------------------------------------------

    def act(self, t):
        phase = self.phase
        if phase == "ohs":
            return sense(self.window_channel)
        if phase == "signal":
            home = home_channel(self.speaker, self.K)
            if self.slot_in_frame < self.frame_len:
                if self.speaker == self.rank:
                    return emit_bit(self.frame_bits[self.slot_in_frame], home)
                return sense(home)
            if self.speaker != self.rank and self.nack:
                return transmit(home, data=False)
            return sense(home)
        return transmit(self.channel)

    def update(self, obs):
        phase = self.phase
        self.k += 1
        if phase == "signal":
            self._signal_update(obs)
            return
        if phase in ("rh", "explore"):
            if obs.success:
                self.stats.add(self.channel, obs.reward)
            if obs.collided:
                self.channel = self.rng.randrange(self.K)
            elif phase == "explore":
                self.channel = seqhop_next(self.channel, self.K)
        elif phase == "ohs":
            if obs.sensed_busy(self.window_channel):
                self.seen.add((self.window_channel - self.k + 1) % self.K)
        self.remaining -= 1
        self._roll()

    def _signal_update(self, obs):
        home = home_channel(self.speaker, self.K)
        if self.slot_in_frame < self.frame_len:
            if self.speaker != self.rank:
                self.heard.append(bool(obs.sensed_busy(home)))
            self.slot_in_frame += 1
            if self.slot_in_frame == self.frame_len and self.speaker != self.rank:
                try:
                    words = decode_frame(self.heard, self.bits)
                    self.matrix[self.speaker] = dequantize(words, self.bits)
                except ParityError:
                    self.nack = True
            return
        if self.speaker == self.rank:
            retry = bool(obs.sensed_busy(home))
        else:
            retry = self.nack or bool(obs.sensed_busy(home))
        self._frame_finished(retry)

    # -- bulk interface -------------------------------------------------

    def plan(self, t, max_len):
        phase = self.phase
        if phase == "signal":
            return None
        n = min(max_len, self.remaining)
        if phase == "exploit":
            return constant_plan(self.channel, n)
        if phase == "ohs":
            return sense_plan(self.window_channel, n)
        if phase == "rh":
            return constant_plan(self.channel, n, reactive=True)
        return hop_plan(self.channel, self.K, n)

    def horizon(self, t, plan, out):
        if self.phase in ("rh", "explore"):
            return first_true(out.collided)
        return len(plan)

    def advance(self, t, plan, out, m):
        phase = self.phase
        if phase in ("rh", "explore"):
            self.stats.absorb(plan.tx[:m], out.success[:m], out.reward[:m])
            if phase == "explore":
                self.channel = (self.channel + m) % self.K
        elif phase == "ohs":
            for i in range(m):
                if out.busy[i]:
                    self.seen.add((self.window_channel - self.k - i) % self.K)
        self.k += m
        self.remaining -= m
        self._roll()


class MESER(ESER):
    """ESER with shorter frames early on: ``min(4 + e, B)`` bits in epoch ``e``."""

    name = "meser"
    growing_bits = True
