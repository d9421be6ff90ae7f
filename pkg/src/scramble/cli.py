"""Command-line entry point: ``scramble <subcommand> [flags]``.

Exit codes: 0 success, 1 validation error, 2 runtime failure. ``bound-check``
also exits 2 when any realization has a bound residual below -1e-9.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Sequence

from .config import ConfigError, config_from_mapping, config_to_mapping, parse_toml
from .ensemble import ExperimentConfig, resolve_threads, run_ensemble
from .io import RunManifest, emit_csv
from .selftest import run_selftest

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2
BOUND_TOL = -1e-9
DEFAULT_LEVELS = [0.0, 0.05, 1.0]

# Per-command defaults, in the flat config vocabulary.
COMMANDS: dict[str, dict] = {
    "syk-otoc": dict(model="syk", n_majorana=12, diagnostics=["otoc_avg"], gamma=DEFAULT_LEVELS),
    "syk-mi": dict(model="syk", n_majorana=12, diagnostics=["mutual_info"], gamma=DEFAULT_LEVELS),
    "lmg-mi": dict(model="lmg", n_spins=6, initial_state="neel", diagnostics=["mutual_info"], gamma=DEFAULT_LEVELS),
    "bound-check": dict(model="syk", n_majorana=8, diagnostics=["bound"]),
    "tmi": dict(model="syk", n_majorana=12, diagnostics=["tmi"], partition=[[0], [1], [2, 3]], gamma=DEFAULT_LEVELS),
    "open-otoc": dict(model="syk", n_majorana=12, diagnostics=["open_otoc"], gamma=DEFAULT_LEVELS),
    "decomposition": dict(model="syk", n_majorana=6, diagnostics=["decomposition"], gamma=[0.1, 0.5, 1.0]),
}
LINDBLAD_COMMANDS = {"syk-otoc", "syk-mi", "lmg-mi", "tmi", "open-otoc"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scramble", description="Information-scrambling experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(COMMANDS) + ["selftest"]:
        p = sub.add_parser(name)
        if name == "selftest":
            continue
        p.add_argument("--config", help="TOML config; keys override the command defaults")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=_u64, help="master seed")
        p.add_argument("--realizations", type=int)
        p.add_argument("--gamma", type=float, help="single coupling level gamma/J")
        p.add_argument("--basis", choices=["computational", "energy"])
        p.add_argument("--threads", type=int, help="worker processes (fallback: SCRAMBLE_THREADS)")
        p.add_argument("--n", type=int, help="Majorana count (SYK) or spin count (LMG)")
        p.add_argument("--state", choices=["all_up", "neel"])
        p.add_argument("--dry-run", action="store_true")
    return parser


def resolve(command: str, args) -> ExperimentConfig:
    doc = {"schema_version": 1, **COMMANDS[command]}
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        file_doc = parse_toml(text)
        if "model" in file_doc and file_doc["model"] != doc["model"]:
            for k in ("n_majorana", "n_spins", "q", "initial_state"):
                doc.pop(k, None)
        doc.update(file_doc)
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.realizations is not None:
        doc["realizations"] = args.realizations
    if args.n is not None:
        doc["n_majorana" if doc["model"] == "syk" else "n_spins"] = args.n
    if args.state is not None:
        doc["initial_state"] = args.state
    if args.gamma is not None:
        doc["gamma"] = args.gamma
    if args.basis is not None:
        doc["decoherence"] = args.basis
    if command in LINDBLAD_COMMANDS and doc.get("decoherence", "none") == "none":
        gammas = doc.get("gamma", 0.0)
        if any(g > 0 for g in (gammas if isinstance(gammas, list) else [gammas])):
            doc["decoherence"] = "computational"
    return config_from_mapping(doc)


def output_path(command: str, config: ExperimentConfig, out: str) -> Path:
    stem = command if config.decoherence == "none" else f"{command}-{config.decoherence}"
    return Path(out) / f"{stem}.csv"


def _bound_report(series, echo) -> bool:
    worst_ok = True
    for name, tr in series.traces.items():
        if not name.startswith("bound_residual"):
            continue
        lowest = float(tr.minimum.min())
        ok = lowest >= BOUND_TOL
        worst_ok &= ok
        echo(f"{name}: minimum residual over realizations and times {lowest:.3e} ({'ok' if ok else 'VIOLATED'})")
    return worst_ok


def command_suite(argv: Sequence[str] | None = None, echo=print) -> int:
    """Run one CLI invocation and return its exit status."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        echo(f"error: {exc}")
        return EXIT_VALIDATION
    if args.command == "selftest":
        return EXIT_OK if run_selftest(echo) else EXIT_RUNTIME
    try:
        config = resolve(args.command, args)
        threads = resolve_threads(args.threads)
    except (ConfigError, ValueError) as exc:
        echo(f"validation error: {exc}")
        return EXIT_VALIDATION
    path = output_path(args.command, config, args.out)
    if args.dry_run:
        plan = {
            "command": args.command,
            "config": config_to_mapping(config),
            "output": str(path),
            "threads": threads,
        }
        echo(json.dumps(plan, indent=2, sort_keys=True))
        return EXIT_OK
    start = time.perf_counter()
    try:
        series = run_ensemble(config, threads)
    except Exception as exc:
        echo(f"runtime failure: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    elapsed = time.perf_counter() - start
    manifest = RunManifest.create(config, elapsed, args.command, series.failures)
    try:
        emit_csv(series, manifest, path)
    except OSError as exc:
        echo(f"runtime failure: cannot write {path}: {exc}")
        return EXIT_RUNTIME
    echo(f"wrote {path} ({elapsed:.1f} s)")
    status = EXIT_OK
    if series.failures:
        echo(f"{len(series.failures)} realization(s) failed: {sorted(series.failures)}")
        status = EXIT_RUNTIME
    if args.command == "bound-check":
        convention = "identity included" if config.include_identity else "identity excluded"
        echo(f"Pauli average convention: {convention}")
        if not _bound_report(series, echo):
            status = EXIT_RUNTIME
    return status


def main() -> None:
    sys.exit(command_suite(sys.argv[1:]))


if __name__ == "__main__":
    main()
