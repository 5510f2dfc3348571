"""Terminal capabilities and the observation each radio can legally make."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

TRANSMIT = "transmit"
SENSE = "sense"
SENSE_WIDEBAND = "sense_wideband"
IDLE = "idle"

NONE = "none"
NARROWBAND = "narrowband"
WIDEBAND = "wideband"

# Concurrent-sense marker for a Type I transmission that senses the whole band.
ALL_CHANNELS = -1


class ContractViolation(RuntimeError):
    """A policy emitted an action its radio cannot perform."""


@dataclass(frozen=True)
class RadioCapability:
    sensing: str
    duplex: str  # "I", "II" or "III"
    hybrid: bool = False

    def __post_init__(self):
        if self.sensing not in (NONE, NARROWBAND, WIDEBAND):
            raise ValueError(f"unknown sensing bandwidth {self.sensing!r}")
        if self.duplex not in ("I", "II", "III"):
            raise ValueError(f"unknown duplex type {self.duplex!r}")
        if (self.duplex == "III") != (self.sensing == NONE):
            raise ValueError("Type III radios, and only they, lack sensing")
        if self.hybrid and self.sensing != WIDEBAND:
            raise ValueError("hybrid radios sense wideband")

    @property
    def can_sense(self) -> bool:
        return self.sensing != NONE


RADIOS = {
    "type1_nb": RadioCapability(NARROWBAND, "I"),
    "type1_wb": RadioCapability(WIDEBAND, "I"),
    "type2_nb": RadioCapability(NARROWBAND, "II"),
    "type2_wb": RadioCapability(WIDEBAND, "II"),
    "type3": RadioCapability(NONE, "III"),
    "hybrid1": RadioCapability(WIDEBAND, "I", hybrid=True),
    "hybrid2": RadioCapability(WIDEBAND, "II", hybrid=True),
}


def radio_from_name(name: str) -> RadioCapability:
    try:
        return RADIOS[name]
    except KeyError:
        raise ValueError(f"unknown radio {name!r}; choose from {', '.join(RADIOS)}") from None


class Action(NamedTuple):
    """One user's decision for one slot.

    ``sense`` is only used by Type I radios: a second channel (or
    ``ALL_CHANNELS``) sensed while transmitting. ``data`` is False for
    signaling transmissions, which carry no payload.
    """

    kind: str
    channel: Optional[int] = None
    sense: Optional[int] = None
    data: bool = True


_IDLE = Action(IDLE)
_SENSE_WB = Action(SENSE_WIDEBAND)
_TX: dict = {}


def transmit(channel: int, sense: Optional[int] = None, data: bool = True) -> Action:
    if sense is None and data:
        a = _TX.get(channel)
        if a is None:
            a = _TX[channel] = Action(TRANSMIT, channel)
        return a
    return Action(TRANSMIT, channel, sense, data)


def sense(channel: int) -> Action:
    return Action(SENSE, channel)


def sense_wideband() -> Action:
    return _SENSE_WB


def idle() -> Action:
    return _IDLE


_EMPTY: dict = {}


class Observation(NamedTuple):
    t: int
    action: Action
    success: bool = False
    reward: Optional[float] = None
    collision_flag: Optional[bool] = None
    sensed: dict = _EMPTY  # channel -> busy; absent channels are unobserved

    @property
    def collided(self) -> bool:
        """Collision as far as this radio can tell; transmit-only radios see bare failures."""
        if self.action.kind != TRANSMIT:
            return False
        if self.collision_flag is None:
            return not self.success
        return self.collision_flag

    def sensed_busy(self, channel: int) -> Optional[bool]:
        return self.sensed.get(channel)


def validate_action(cap: RadioCapability, action: Action) -> Optional[str]:
    """Reason the action is illegal for ``cap``, or None when it is legal."""
    kind = action.kind
    if kind == IDLE:
        return None
    if kind == TRANSMIT:
        if action.sense is None:
            return None
        if cap.duplex != "I":
            return f"Type {cap.duplex} radio cannot sense while transmitting"
        if action.sense == ALL_CHANNELS:
            return None if cap.sensing == WIDEBAND else "concurrent wideband sensing needs a wideband radio"
        if action.sense == action.channel:
            return "concurrent sensing must use a second channel"
        return None
    if kind == SENSE:
        return None if cap.can_sense else "radio has no sensing front-end"
    if kind == SENSE_WIDEBAND:
        return None if cap.sensing == WIDEBAND else "wideband sensing needs a wideband radio"
    return f"unknown action kind {kind!r}"


def observe(cap: RadioCapability, ground, user: int) -> Observation:
    """Erase from the slot's ground truth whatever ``user``'s radio cannot see."""
    a = ground.actions[user]
    kind = a.kind
    if kind == TRANSMIT:
        ok = ground.success[user]
        flag = None
        if cap.can_sense:
            flag = ground.tx_count[a.channel] >= 2
        sensed = _EMPTY
        if a.sense is not None:
            if a.sense == ALL_CHANNELS:
                sensed = {c: ground.busy(c) for c in range(len(ground.tx_count))}
            else:
                sensed = {a.sense: ground.busy(a.sense)}
        return Observation(ground.slot, a, ok, ground.rewards[user] if ok else None, flag, sensed)
    if kind == SENSE:
        return Observation(ground.slot, a, sensed={a.channel: ground.busy(a.channel)})
    if kind == SENSE_WIDEBAND:
        return Observation(ground.slot, a, sensed={c: ground.busy(c) for c in range(len(ground.tx_count))})
    return Observation(ground.slot, a)
