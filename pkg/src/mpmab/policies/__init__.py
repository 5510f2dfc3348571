"""Decentralized channel-access policies and their registry."""
from __future__ import annotations

from ..env import ConfigurationError
from .base import ArmStats, Outcomes, Plan, Policy, PolicyContext, seqhop_next, ucb_index
from .dynamic import EpochReset, dynamic_wrapper, epoch_boundaries
from .eser import ESER, MESER, SignalingError, eser_schedule, explore_length
from .hopping import RandomHop, SeqHop, random_hop_step
from .mctopm import MCTopM, UMCTopM
from .mega import Mega
from .musical_chairs import MusicalChairs, estimate_users
from .rhorand import RhoRand
from .scf import SCF
from .trekking import TDN, TSN

# config name -> (factory, display label)
REGISTRY = {
    "random_hop": (RandomHop, "RandomHop"),
    "sh": (SeqHop, "SH"),
    "rhorand": (RhoRand, "rhoRAND"),
    "mctopm": (MCTopM, "MCTopM"),
    "umctopm": (UMCTopM, "UMCTopM"),
    "mc": (MusicalChairs, "MC"),
    "dmc": (dynamic_wrapper(MusicalChairs, "epoch-reset", "dmc"), "DMC"),
    "mega": (Mega, "MEGA"),
    "scf": (SCF, "SCF"),
    "dscf": (dynamic_wrapper(SCF, "epoch-reset", "dscf"), "DSCF"),
    "tsn": (TSN, "TSN"),
    "tdn": (dynamic_wrapper(TDN, "trek"), "TDN"),
    "eser": (ESER, "ESER"),
    "meser": (MESER, "mESER"),
}

_ALIASES = {label.lower(): key for key, (_, label) in REGISTRY.items()}


def algorithm_key(name: str) -> str:
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    if key not in REGISTRY:
        raise ConfigurationError(f"unknown algorithm {name!r}; choose from {', '.join(REGISTRY)}")
    return key


def algorithm_label(name: str) -> str:
    return REGISTRY[algorithm_key(name)][1]


def make_policy(name: str, ctx: PolicyContext, seed) -> Policy:
    return REGISTRY[algorithm_key(name)][0](ctx, seed)


def needs_sensing(name: str) -> bool:
    return bool(getattr(REGISTRY[algorithm_key(name)][0], "needs_sensing", False))


__all__ = [
    "ArmStats", "Outcomes", "Plan", "Policy", "PolicyContext", "seqhop_next", "ucb_index",
    "EpochReset", "dynamic_wrapper", "epoch_boundaries", "ESER", "MESER", "SignalingError",
    "eser_schedule", "explore_length", "RandomHop", "SeqHop", "random_hop_step", "MCTopM",
    "UMCTopM", "Mega", "MusicalChairs", "estimate_users", "RhoRand", "SCF", "TDN", "TSN",
    "REGISTRY", "algorithm_key", "algorithm_label", "make_policy", "needs_sensing",
]
