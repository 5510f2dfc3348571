"""Canned experiment setups for the static, dynamic and heterogeneous studies."""
from __future__ import annotations

from .config import build, resolve
from .policies import algorithm_label

STATIC_MEANS = (0.29, 0.36, 0.43, 0.50, 0.57, 0.64, 0.71, 0.78)
DEFAULT_SEED = 2021
STATIC_HORIZON = 100000
DYNAMIC_HORIZON = 500000
HETERO_HORIZON = 200000
REPLICATIONS = 50

# Musical chairs explores for about as many samples per channel (~1500) as
# the hopping-based learners collect during their sequential-hopping phase.
MC_LEARNING = 12000

STATIC_ALGORITHMS = ("mctopm", "umctopm", "sh", "mc", "scf", "tsn")
COLLISION_ALGORITHMS = STATIC_ALGORITHMS + ("mega",)
DYNAMIC_ALGORITHMS = ("dmc", "dscf", "tdn")
HETERO_ALGORITHMS = ("eser", "meser")
HETERO_USERS = (6, 10, 12)


def _means_text(means) -> str:
    return ", ".join(f"{m:g}" for m in means)


def static_sections(algorithm: str, users: int, horizon: int = STATIC_HORIZON, replications: int = REPLICATIONS, seed: int = DEFAULT_SEED) -> dict:
    sections = {
        "run": {"algorithm": algorithm, "users": users, "horizon": horizon, "replications": replications, "seed": seed},
        "channels": {"means": _means_text(STATIC_MEANS)},
    }
    if algorithm in ("mc", "dmc"):
        sections[algorithm] = {"learning_length": MC_LEARNING}
    return sections


def dynamic_events(horizon: int = DYNAMIC_HORIZON, period: int = 100000) -> str:
    """Alternate leave / enter every ``period`` slots, starting with a leave."""
    items = []
    for i, slot in enumerate(range(period, horizon, period)):
        items.append(f"{slot} {'leave' if i % 2 == 0 else 'enter'}")
    return ", ".join(items)


def dynamic_sections(algorithm: str, horizon: int = DYNAMIC_HORIZON, replications: int = REPLICATIONS, seed: int = DEFAULT_SEED) -> dict:
    sections = static_sections(algorithm, 4, horizon, replications, seed)
    sections["dynamics"] = {"events": dynamic_events(horizon)}
    return sections


def hetero_rh_length(users: int, channels: int) -> int:
    """Random-hop budget: a saturated network needs far longer to orthogonalize."""
    return 20000 if users >= channels else 2000


def hetero_sections(algorithm: str, users: int, horizon: int = HETERO_HORIZON, replications: int = REPLICATIONS, seed: int = DEFAULT_SEED, channels: int = 12) -> dict:
    return {
        "run": {"algorithm": algorithm, "users": users, "horizon": horizon, "replications": replications, "seed": seed},
        "channels": {
            "num_channels": channels,
            "random_means_seed": seed,
            "reward_law": "uniform",
            "half_width": 0.1,
        },
        algorithm: {"rh_length": hetero_rh_length(users, channels)},
    }


FIGURES = ("fig2a", "fig2b", "fig3", "fig4", "fig5")


def figure_runs(name: str, horizon=None, replications=None, seed=None) -> list[tuple[str, dict]]:
    """``(label, sections)`` for every curve of a figure."""
    kw = {}
    if replications is not None:
        kw["replications"] = replications
    if seed is not None:
        kw["seed"] = seed
    if horizon is not None:
        kw["horizon"] = horizon
    if name in ("fig2a", "fig2b"):
        n = 4 if name == "fig2a" else 8
        return [(algorithm_label(a), static_sections(a, n, **kw)) for a in STATIC_ALGORITHMS]
    if name == "fig3":
        return [
            (f"{algorithm_label(a)}@N={n}", static_sections(a, n, **kw))
            for n in (4, 8)
            for a in COLLISION_ALGORITHMS
        ]
    if name == "fig4":
        return [(algorithm_label(a), dynamic_sections(a, **kw)) for a in DYNAMIC_ALGORITHMS]
    if name == "fig5":
        return [
            (f"{algorithm_label(a)}@N={n}", hetero_sections(a, n, **kw))
            for n in HETERO_USERS
            for a in HETERO_ALGORITHMS
        ]
    raise KeyError(name)


PRESETS = {
    "static-n4": lambda: static_sections("scf", 4),
    "static-n8": lambda: static_sections("scf", 8),
    "dynamic": lambda: dynamic_sections("tdn"),
    "hetero-n6": lambda: hetero_sections("eser", 6),
    "hetero-n10": lambda: hetero_sections("eser", 10),
    "hetero-n12": lambda: hetero_sections("eser", 12),
}


def preset_config(name: str, overrides=None):
    resolved = resolve(PRESETS[name](), overrides)
    return build(resolved), resolved
