"""Long-format CSV files and the run manifest."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .runner import METRICS, STATISTICS, ExperimentResult

COLUMNS = ("slot", "metric", "algorithm", "statistic", "value")
REGRET_METRICS = ("pseudo_regret", "realized_regret")
COLLISION_METRICS = ("collisions",)
EVENT_METRIC = "event"

ORACLE_NOTE = (
    "pseudo_regret charges each slot the best orthogonal allocation of the active users "
    "(means discounted by PU idle probability and fading) minus the discounted means of "
    "the collision-free data transmissions; realized_regret subtracts the sampled rewards instead"
)


def _fmt(v) -> str:
    return repr(float(v))


def series_rows(result: ExperimentResult, label: str, metrics) -> list[tuple]:
    rows = []
    slots = result.slots.tolist()
    for m in metrics:
        for stat in STATISTICS:
            values = result.aggregates[m][stat].tolist()
            rows.extend((s, m, label, stat, _fmt(v)) for s, v in zip(slots, values))
    return rows


def event_rows(result: ExperimentResult, label: str) -> list[tuple]:
    """Enter/leave markers; ``value`` is the number of replications with that event."""
    counts: dict = {}
    for rep in result.replications:
        for slot, kind, _uid in rep.events:
            if slot == 0:
                continue
            counts[(slot, kind)] = counts.get((slot, kind), 0) + 1
    return [(s, EVENT_METRIC, label, k, _fmt(n)) for (s, k), n in sorted(counts.items())]


def summary_rows(result: ExperimentResult, label: str) -> list[tuple]:
    horizon = int(result.slots[-1])
    rows = []
    for m in METRICS:
        finals = result.finals(m)
        values = {stat: result.aggregates[m][stat][-1] for stat in STATISTICS}
        values["min"] = finals.min()
        values["max"] = finals.max()
        rows.extend((horizon, m, label, stat, _fmt(v)) for stat, v in values.items())
    return rows


def csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    w.writerows(rows)
    return buf.getvalue()


def write_csv(path: Path, rows) -> str:
    """Write rows and return the file's sha256."""
    text = csv_text(rows)
    path.write_text(text)
    return hashlib.sha256(text.encode()).hexdigest()


def write_run(out: Path, result: ExperimentResult, label: str) -> dict:
    """regret.csv, collisions.csv and summary.csv for one experiment; returns digests."""
    out.mkdir(parents=True, exist_ok=True)
    events = event_rows(result, label)
    files = {
        "regret.csv": series_rows(result, label, REGRET_METRICS) + events,
        "collisions.csv": series_rows(result, label, COLLISION_METRICS) + events,
        "summary.csv": summary_rows(result, label),
    }
    return {name: write_csv(out / name, rows) for name, rows in files.items()}


def now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(out: Path, config: dict, started: str, digests: dict, stride, extra=None) -> Path:
    manifest = {
        "tool": "mpmab",
        "version": __version__,
        "config": config,
        "seed": config["run"]["seed"] if "run" in config else None,
        "started": started,
        "finished": now(),
        "downsample_stride": stride,
        "columns": list(COLUMNS),
        "oracle": ORACLE_NOTE,
        "digests": digests,
    }
    if extra:
        manifest.update(extra)
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
