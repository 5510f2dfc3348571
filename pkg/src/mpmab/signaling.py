"""On-off keyed bit frames for exchanging quantized estimates without a control channel.

A speaker transmits on its home channel for a 1 bit and stays idle for a 0
bit; listeners parked on that channel read the busy/idle pattern back.
Each channel word is B value bits (most significant first) plus one even
parity bit.
"""
from __future__ import annotations

from typing import Iterable, Sequence

from .radio import Action, idle, transmit


class ParityError(ValueError):
    def __init__(self, failed_words):
        self.failed_words = list(failed_words)
        super().__init__(f"parity check failed for channel words {self.failed_words}")


def _check_bits(bits: int):
    if not 1 <= bits <= 16:
        raise ValueError(f"bits per estimate must be in [1, 16], got {bits}")


def quantize(means: Iterable[float], bits: int) -> list[int]:
    _check_bits(bits)
    top = (1 << bits) - 1
    out = []
    for x in means:
        x = min(1.0, max(0.0, float(x)))
        out.append(int(x * top + 0.5))
    return out


def dequantize(words: Iterable[int], bits: int) -> list[float]:
    _check_bits(bits)
    top = (1 << bits) - 1
    return [q / top for q in words]


def frame_length(num_channels: int, bits: int) -> int:
    return num_channels * (bits + 1)


def encode_frame(words: Sequence[int], bits: int) -> list[int]:
    _check_bits(bits)
    out = []
    for q in words:
        if not 0 <= q < (1 << bits):
            raise ValueError(f"word {q} does not fit in {bits} bits")
        word = [(q >> (bits - 1 - i)) & 1 for i in range(bits)]
        out.extend(word)
        out.append(sum(word) & 1)
    return out


def emit_bit(bit: int, home_channel: int) -> Action:
    return transmit(home_channel, data=False) if bit else idle()


def decode_frame(pattern: Sequence, bits: int) -> list[int]:
    """Inverse of :func:`encode_frame` on a sensed busy/idle sequence."""
    _check_bits(bits)
    step = bits + 1
    if len(pattern) % step:
        raise ValueError(f"pattern length {len(pattern)} is not a multiple of {step}")
    words = []
    failed = []
    for w in range(len(pattern) // step):
        chunk = [1 if b else 0 for b in pattern[w * step : (w + 1) * step]]
        q = 0
        for b in chunk[:bits]:
            q = (q << 1) | b
        if sum(chunk[:bits]) & 1 != chunk[bits]:
            failed.append(w)
        words.append(q)
    if failed:
        raise ParityError(failed)
    return words


def home_channel(rank: int, num_channels: int) -> int:
    return rank % num_channels
