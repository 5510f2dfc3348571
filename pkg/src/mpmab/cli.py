"""``mpmab`` command line: run, figures and check."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import output, presets
from .config import build, read_sections, resolve, to_ini
from .env import ConfigurationError
from .policies import algorithm_label
from .runner import ReplicationAborted, resolve_threads, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3


def _overrides(args) -> dict:
    return {
        "run.seed": getattr(args, "seed", None),
        "run.replications": getattr(args, "replications", None),
        "run.horizon": getattr(args, "horizon", None),
        "run.algorithm": getattr(args, "algorithm", None),
        "run.downsample": getattr(args, "downsample", None),
    }


def _sections(args) -> dict:
    if args.config and args.preset:
        raise ConfigurationError("give either --config or --preset, not both")
    if args.preset:
        return presets.PRESETS[args.preset]()
    if not args.config:
        raise ConfigurationError("no configuration: pass --config PATH or --preset NAME")
    return read_sections(args.config)


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_run(args) -> int:
    try:
        resolved = resolve(_sections(args), _overrides(args))
        cfg = build(resolved)
    except ConfigurationError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    out = Path(args.out)
    started = output.now()
    try:
        result = run_experiment(cfg, threads=args.threads)
    except ReplicationAborted as exc:
        return _fail(EXIT_ABORT, str(exc))
    label = algorithm_label(cfg.algorithm)
    digests = output.write_run(out, result, label)
    output.write_manifest(out, resolved, started, digests, cfg.stride)
    print(f"wrote {', '.join(sorted(digests))} and manifest.json to {out}")
    return EXIT_OK


def cmd_figures(args) -> int:
    out = Path(args.out) / args.name
    out.mkdir(parents=True, exist_ok=True)
    started = output.now()
    combined = []
    summary = []
    digests = {}
    configs = {}
    try:
        runs = [(label, resolve(sections)) for label, sections in presets.figure_runs(args.name, args.horizon, args.replications, args.seed)]
        built = [(label, resolved, build(resolved)) for label, resolved in runs]
    except ConfigurationError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    for label, resolved, cfg in built:
        print(f"{args.name}: {label} ({cfg.replications} replications x {cfg.horizon} slots)", flush=True)
        try:
            result = run_experiment(cfg, threads=args.threads)
        except ReplicationAborted as exc:
            return _fail(EXIT_ABORT, f"{label}: {exc}")
        rows = (
            output.series_rows(result, label, output.REGRET_METRICS + output.COLLISION_METRICS)
            + output.event_rows(result, label)
        )
        name = label.replace("@", "_").replace("=", "") + ".csv"
        digests[name] = output.write_csv(out / name, rows)
        combined.extend(rows)
        summary.extend(output.summary_rows(result, label))
        configs[label] = resolved
    digests["summary.csv"] = output.write_csv(out / "summary.csv", summary)
    digests[f"{args.name}.csv"] = output.write_csv(out / f"{args.name}.csv", combined)
    output.write_manifest(
        out,
        {"figure": args.name},
        started,
        digests,
        sorted({c["run"]["downsample"] for c in configs.values()}),
        extra={"runs": configs, "seed": next(iter(configs.values()))["run"]["seed"]},
    )
    print(f"wrote {len(digests)} CSV files and manifest.json to {out}")
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        resolved = resolve(_sections(args), _overrides(args))
        cfg = build(resolved)
    except ConfigurationError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    print("OK")
    print(to_ini(resolved).rstrip())
    users = cfg.total_users
    slots = cfg.horizon * cfg.replications
    print(f"\nworkload: {cfg.replications} replications x {cfg.horizon} slots = {slots} slots, up to {users} users")
    print(f"threads: {resolve_threads(getattr(args, 'threads', None))}")
    return EXIT_OK


def _config_args(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="INI config or a previous run's manifest.json")
    p.add_argument("--preset", choices=sorted(presets.PRESETS), help="use a built-in setup instead of --config")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--replications", type=int, metavar="N")
    p.add_argument("--horizon", type=int, metavar="N")
    p.add_argument("--algorithm", metavar="NAME")
    p.add_argument("--downsample", type=int, metavar="N", help="record every N slots (default horizon/1000)")
    p.add_argument("--threads", type=int, metavar="N", help="worker processes (default $MPMAB_THREADS or 1)")


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mpmab", description="Decentralized multi-player bandit simulator for cognitive radio")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and write CSVs plus a manifest")
    _config_args(run)
    run.add_argument("--out", metavar="DIR", default="results")
    run.set_defaults(func=cmd_run)

    fig = sub.add_parser("figures", help="reproduce the canned figure setups as CSV bundles")
    fig.add_argument("name", choices=presets.FIGURES)
    fig.add_argument("--out", metavar="DIR", default="figures")
    fig.add_argument("--seed", type=int, metavar="U64")
    fig.add_argument("--replications", type=int, metavar="N")
    fig.add_argument("--horizon", type=int, metavar="N")
    fig.add_argument("--threads", type=int, metavar="N")
    fig.set_defaults(func=cmd_figures)

    check = sub.add_parser("check", help="validate a config and print the resolved values")
    _config_args(check)
    check.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
