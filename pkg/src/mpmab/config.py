"""INI experiment configuration: parsing, validation and default resolution.

Layout::

    [run]          algorithm, users, horizon, replications, seed, radio,
                   downsample, max_users
    [channels]     means (rows separated by ';'), num_channels, occupancy,
                   reward_law, half_width, fade_probability, random_means_seed,
                   change_points ("slot: row; row | slot: ...")
    [dynamics]     events ("100000 leave, 200000 enter, 300000 leave 2")
    [<algorithm>]  parameters of that algorithm (see PARAMETERS)

Every value can be overridden from the command line; the fully resolved
configuration (all defaults filled in) is echoed in the run manifest and
can be fed back to reproduce a run.
"""
from __future__ import annotations

import configparser
import difflib
import json
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .env import BERNOULLI, REWARD_LAWS, ChannelModel, ConfigurationError
from .policies import REGISTRY, algorithm_key
from .radio import RADIOS
from .runner import ENTER, LEAVE, DynamicsEvent, ExperimentConfig

RUN_KEYS = {
    "algorithm": "sh",
    "users": 1,
    "horizon": 100000,
    "replications": 1,
    "seed": 0,
    "radio": "type2_nb",
    "downsample": 0,  # 0 = horizon / 1000
    "max_users": 0,  # 0 = no cap
}

CHANNEL_KEYS = {
    "means": "",
    "num_channels": 0,
    "occupancy": "",
    "reward_law": BERNOULLI,
    "half_width": 0.1,
    "fade_probability": 0.0,
    "random_means_seed": -1,  # >= 0: fresh U[0,1] means per replication
    "change_points": "",
}

DYNAMICS_KEYS = {"events": ""}

_HOP = {"rh_length": -1, "sh_rounds": 1000, "sh_length": -1}  # -1: derived from K
_TREK = {**_HOP, "probe_c": 10.0, "probe_window": -1, "max_failures": 6, "collision_patience": 3}
_ESER = {"rh_length": -1, "explore_a": 5.0, "bits": 8, "retries": 1, "exploit_length": -1}

# Per-algorithm parameter tables with their defaults.
PARAMETERS: dict[str, dict[str, Any]] = {
    "random_hop": {},
    "sh": {"initial": "random"},
    "rhorand": {},
    "mctopm": {},
    "umctopm": {},
    "mc": {"learning_length": 3000},
    "dmc": {"learning_length": 3000, "epoch_length": 20000},
    "mega": {"c": 0.1, "d": 0.05, "p0": 0.6, "alpha": 0.5, "beta": 0.8},
    "scf": dict(_HOP),
    "dscf": {**_HOP, "epoch_length": 20000},
    "tsn": dict(_TREK),
    "tdn": {**_TREK, "check_period": 2000},
    "eser": dict(_ESER),
    "meser": dict(_ESER),
}
assert set(PARAMETERS) == set(REGISTRY)

SECTIONS = {"run": RUN_KEYS, "channels": CHANNEL_KEYS, "dynamics": DYNAMICS_KEYS}


def _nearest(word: str, options) -> str:
    match = difflib.get_close_matches(word, list(options), n=1, cutoff=0.0)
    return match[0] if match else ""


def _unknown(kind: str, word: str, options) -> ConfigurationError:
    near = _nearest(word, options)
    hint = f"; did you mean {near!r}?" if near else ""
    return ConfigurationError(f"unknown {kind} {word!r}{hint}")


def _coerce(section: str, key: str, raw: Any, default: Any):
    if isinstance(raw, str):
        raw = raw.strip()
    try:
        if isinstance(default, bool):
            return raw if isinstance(raw, bool) else str(raw).lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            try:
                return int(raw)
            except ValueError:
                f = float(raw)  # allow 1e5
                if not f.is_integer():
                    raise
                return int(f)
        if isinstance(default, float):
            return float(raw)
    except (TypeError, ValueError):
        raise ConfigurationError(f"[{section}] {key} = {raw!r} is not a valid {type(default).__name__}") from None
    return str(raw)


def read_sections(path: str | Path) -> dict:
    """Raw ``{section: {key: value}}`` from an INI file or a run manifest (JSON)."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file {str(path)!r} not found")
    if path.suffix == ".json":
        data = json.loads(path.read_text())
        if "config" not in data:
            raise ConfigurationError(f"{path} is not a run manifest (no 'config' entry)")
        return {s: dict(v) for s, v in data["config"].items()}
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(path.read_text())
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from None
    return {s: dict(parser[s]) for s in parser.sections()}


def resolve(sections: dict, overrides: Optional[dict] = None) -> dict:
    """Validate keys and materialize every default. ``overrides`` maps
    ``"section.key"`` (or a bare ``[run]`` key) to a value."""
    raw = {s: dict(v) for s, v in sections.items()}
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        sec, _, k = key.rpartition(".")
        raw.setdefault(sec or "run", {})[k] = value
    run_raw = raw.get("run", {})
    alg = algorithm_key(str(run_raw.get("algorithm", RUN_KEYS["algorithm"])))
    known = dict(SECTIONS)
    known[alg] = PARAMETERS[alg]
    out = {}
    for sec, values in raw.items():
        if sec not in known:
            if sec in PARAMETERS:
                continue  # tables of other algorithms are allowed and ignored
            raise _unknown("section", sec, list(known) + list(PARAMETERS))
        table = known[sec]
        for k in values:
            if k not in table:
                raise _unknown(f"key in [{sec}]", k, table)
    for sec, table in known.items():
        values = raw.get(sec, {})
        out[sec] = {k: _coerce(sec, k, values.get(k, d), d) for k, d in table.items()}
    out["run"]["algorithm"] = alg
    channels = out["channels"]
    if not channels["means"] and channels["random_means_seed"] < 0:
        raise ConfigurationError("missing key 'means' in [channels] (or set random_means_seed)")
    k = _num_channels(channels)
    params = out[alg]
    # Materialize K-dependent defaults.
    if "rh_length" in params and params["rh_length"] < 0:
        params["rh_length"] = 2 * k * k
    if "sh_length" in params and params["sh_length"] < 0:
        params["sh_length"] = k * params["sh_rounds"]
    if "probe_window" in params and params["probe_window"] < 0:
        from .policies.trekking import probation_window

        params["probe_window"] = probation_window(out["run"]["horizon"], params["probe_c"])
    if "exploit_length" in params and params["exploit_length"] < 0:
        from .policies.eser import explore_length

        params["exploit_length"] = explore_length(k, out["run"]["horizon"], params["explore_a"])
    if out["run"]["downsample"] <= 0:
        out["run"]["downsample"] = max(1, out["run"]["horizon"] // 1000)
    if out["run"]["radio"] not in RADIOS:
        raise _unknown("radio", out["run"]["radio"], RADIOS)
    if channels["reward_law"] not in REWARD_LAWS:
        raise _unknown("reward_law", channels["reward_law"], REWARD_LAWS)
    return out


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigurationError(f"cannot parse {what}: {text!r}") from None


def _matrix(text: str, what: str) -> np.ndarray:
    rows = [_floats(r, what) for r in text.split(";") if r.strip()]
    if not rows:
        raise ConfigurationError(f"{what} is empty")
    if len({len(r) for r in rows}) != 1:
        raise ConfigurationError(f"every row of {what} needs the same number of channels")
    return np.array(rows)


def _num_channels(channels: dict) -> int:
    if channels["means"]:
        k = _matrix(channels["means"], "means").shape[1]
        if channels["num_channels"] and channels["num_channels"] != k:
            raise ConfigurationError(f"num_channels = {channels['num_channels']} but means have {k} columns")
        return k
    if channels["num_channels"] < 1:
        raise ConfigurationError("random_means_seed needs num_channels >= 1 in [channels]")
    return channels["num_channels"]


def parse_events(text: str) -> list[DynamicsEvent]:
    events = []
    for item in text.replace(";", ",").split(","):
        parts = item.split()
        if not parts:
            continue
        try:
            slot = int(float(parts[0]))
        except ValueError:
            raise ConfigurationError(f"bad dynamics event {item.strip()!r}") from None
        kind = parts[1].lower() if len(parts) > 1 else ""
        if kind not in (ENTER, LEAVE):
            raise ConfigurationError(f"dynamics event at slot {slot}: kind must be 'enter' or 'leave'")
        user = None
        if len(parts) > 2 and parts[2].lower() != "random":
            if kind == ENTER:
                raise ConfigurationError(f"dynamics event at slot {slot}: enter takes no user id")
            user = int(parts[2])
        events.append(DynamicsEvent(slot, kind, user))
    return events


def build(resolved: dict) -> ExperimentConfig:
    """ExperimentConfig from a resolved configuration."""
    run = resolved["run"]
    ch = resolved["channels"]
    k = _num_channels(ch)
    if ch["means"]:
        means = _matrix(ch["means"], "means")
    else:
        means = np.full((1, k), 0.5)
    occupancy = _floats(ch["occupancy"], "occupancy") if ch["occupancy"] else [0.0] * k
    cps = []
    for part in ch["change_points"].split("|"):
        if not part.strip():
            continue
        slot, _, rows = part.partition(":")
        try:
            cps.append((int(float(slot)), _matrix(rows, f"change point {slot.strip()}")))
        except ValueError:
            raise ConfigurationError(f"bad change point {part.strip()!r}") from None
    model = ChannelModel(
        means,
        np.array(occupancy),
        change_points=cps,
        reward_law=ch["reward_law"],
        half_width=ch["half_width"],
        fade_probability=ch["fade_probability"],
    )
    alg = run["algorithm"]
    params = dict(resolved.get(alg, {}))
    return ExperimentConfig(
        model=model,
        algorithm=alg,
        num_users=run["users"],
        horizon=run["horizon"],
        replications=run["replications"],
        seed=run["seed"],
        radio=run["radio"],
        params=params,
        dynamics=parse_events(resolved["dynamics"]["events"]),
        max_users=run["max_users"] or None,
        record_stride=run["downsample"],
        means_seed=ch["random_means_seed"] if ch["random_means_seed"] >= 0 else None,
    )


def load(path: str | Path, overrides: Optional[dict] = None) -> tuple[ExperimentConfig, dict]:
    resolved = resolve(read_sections(path), overrides)
    return build(resolved), resolved


def to_ini(resolved: dict) -> str:
    lines = []
    for sec, values in resolved.items():
        lines.append(f"[{sec}]")
        lines.extend(f"{k} = {v}" for k, v in values.items())
        lines.append("")
    return "\n".join(lines)
