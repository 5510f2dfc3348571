import random

import pytest
from hypothesis import given, strategies as st

from mpmab.radio import TRANSMIT
from mpmab.signaling import (
    ParityError,
    decode_frame,
    dequantize,
    emit_bit,
    encode_frame,
    frame_length,
    home_channel,
    quantize,
)


def test_all_single_words_roundtrip():
    for q in range(256):
        assert decode_frame(encode_frame([q], 8), 8) == [q]


def test_random_full_frames_roundtrip():
    rng = random.Random(0)
    for _ in range(1000):
        words = [rng.randrange(256) for _ in range(12)]
        frame = encode_frame(words, 8)
        assert len(frame) == frame_length(12, 8)
        assert decode_frame(frame, 8) == words


def test_single_bit_error_is_detected():
    frame = encode_frame([77, 3], 8)
    frame[10] ^= 1
    with pytest.raises(ParityError) as exc:
        decode_frame(frame, 8)
    assert exc.value.failed_words == [1]


def test_emit_bit_is_signaling_transmission():
    assert emit_bit(0, 3).kind == "idle"
    a = emit_bit(1, 3)
    assert a.kind == TRANSMIT and a.channel == 3 and not a.data


def test_quantize_clamps():
    assert quantize([-0.2, 1.4], 8) == [0, 255]
    with pytest.raises(ValueError):
        quantize([0.5], 0)


def test_home_channel_wraps():
    assert [home_channel(r, 4) for r in range(6)] == [0, 1, 2, 3, 0, 1]


@given(st.lists(st.floats(0, 1), min_size=1, max_size=12))
def test_decoded_mean_error_within_one_step(means):
    back = dequantize(decode_frame(encode_frame(quantize(means, 8), 8), 8), 8)
    for a, b in zip(means, back):
        assert abs(a - b) <= 1 / 255 + 1e-12


@given(st.integers(1, 16), st.data())
def test_roundtrip_any_width(bits, data):
    words = data.draw(st.lists(st.integers(0, (1 << bits) - 1), max_size=6))
    assert decode_frame(encode_frame(words, bits), bits) == words


def test_quantize_example_value():
    q = quantize([0.0, 1.0, 0.57], 8)
    assert q == [0, 255, 145]
    assert abs(dequantize([145], 8)[0] - 0.57) < 1 / 255


def test_frame_length_for_twelve_channels():
    assert frame_length(12, 8) == 108
