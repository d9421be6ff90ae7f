"""TOML experiment configuration.

Documents are flat key/value tables, for example::

    schema_version = 1
    model = "syk"
    n_majorana = 12
    seed = 7
    decoherence = "computational"
    gamma = [0.0, 0.05, 1.0]

Unknown keys are rejected by name; every validation error names its field.
"""
from __future__ import annotations

import sys
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .ensemble import ExperimentConfig, TimeGrid
from .models import LmgSpec, SykSpec

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


# key -> (accepted python types, default); None default means required/derived
FIELDS: dict[str, tuple[tuple[type, ...], Any]] = {
    "schema_version": ((int,), SCHEMA_VERSION),
    "model": ((str,), None),
    "n_majorana": ((int,), None),
    "n_spins": ((int,), None),
    "q": ((int,), 4),
    "j_scale": ((int, float), 1.0),
    "seed": ((int,), 0),
    "initial_state": ((str,), "all_up"),
    "decoherence": ((str,), "none"),
    "gamma": ((int, float, list), 0.0),
    "t_max": ((int, float), 10.0),
    "n_points": ((int,), 101),
    "realizations": ((int,), 100),
    "diagnostics": ((list,), ["otoc_avg"]),
    "partition": ((list,), [[0]]),
    "include_identity": ((bool,), True),
    "computational_jumps": ((str,), "local_z"),
}


def _check_type(key: str, value: Any) -> None:
    types = FIELDS[key][0]
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(f"field {key!r}: expected {'/'.join(t.__name__ for t in types)}, got boolean")
    if not isinstance(value, types):
        raise ConfigError(f"field {key!r}: expected {'/'.join(t.__name__ for t in types)}, got {type(value).__name__}")


def config_from_mapping(doc: Mapping[str, Any]) -> ExperimentConfig:
    """Validate a flat mapping and apply defaults."""
    unknown = [k for k in doc if k not in FIELDS]
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(repr(k) for k in unknown)}")
    for k, v in doc.items():
        _check_type(k, v)
    get = lambda k: doc.get(k, FIELDS[k][1])  # noqa: E731
    if get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"field 'schema_version': unsupported version {get('schema_version')}")
    kind = doc.get("model")
    if kind is None:
        raise ConfigError("field 'model': required (syk or lmg)")
    try:
        if kind == "syk":
            if "n_majorana" not in doc:
                raise ConfigError("field 'n_majorana': required for model 'syk'")
            if "n_spins" in doc:
                raise ConfigError("field 'n_spins': not valid for model 'syk'")
            model = SykSpec(doc["n_majorana"], q=get("q"), j_scale=float(get("j_scale")), seed=get("seed"))
        elif kind == "lmg":
            if "n_spins" not in doc:
                raise ConfigError("field 'n_spins': required for model 'lmg'")
            for k in ("n_majorana", "q"):
                if k in doc:
                    raise ConfigError(f"field {k!r}: not valid for model 'lmg'")
            model = LmgSpec(doc["n_spins"], j_scale=float(get("j_scale")))
        else:
            raise ConfigError(f"field 'model': expected 'syk' or 'lmg', got {kind!r}")
    except ConfigError:
        raise
    except ValueError as exc:
        field = "n_majorana" if kind == "syk" else "n_spins"
        raise ConfigError(f"field {field!r}: {exc}") from None
    gamma = get("gamma")
    if isinstance(gamma, list):
        if not gamma or not all(isinstance(g, (int, float)) and not isinstance(g, bool) for g in gamma):
            raise ConfigError("field 'gamma': expected a number or a non-empty list of numbers")
        levels, g0 = tuple(float(g) for g in gamma), float(gamma[0])
    else:
        levels, g0 = (), float(gamma)
    partition = get("partition")
    if not all(isinstance(p, list) and all(isinstance(i, int) for i in p) for p in partition):
        raise ConfigError("field 'partition': expected a list of integer lists")
    diagnostics = get("diagnostics")
    if not all(isinstance(d, str) for d in diagnostics):
        raise ConfigError("field 'diagnostics': expected a list of names")
    seed = get("seed")
    if not 0 <= seed < 2**64:
        raise ConfigError("field 'seed': must be an unsigned 64-bit integer")
    checks = [
        ("t_max", get("t_max") > 0, "must be positive"),
        ("n_points", get("n_points") >= 2, "must be at least 2"),
        ("realizations", get("realizations") >= 1, "must be at least 1"),
        ("gamma", all(g >= 0 for g in levels or (g0,)), "must be non-negative"),
    ]
    for key, ok, msg in checks:
        if not ok:
            raise ConfigError(f"field {key!r}: {msg}")
    grid = TimeGrid(float(get("t_max")), get("n_points"))
    try:
        return ExperimentConfig(
            model=model,
            initial_state=get("initial_state"),
            decoherence=get("decoherence"),
            gamma_over_j=g0,
            gamma_levels=levels,
            time_grid=grid,
            n_realizations=get("realizations"),
            master_seed=seed,
            diagnostics=tuple(diagnostics),
            partition=tuple(tuple(p) for p in partition),
            include_identity=get("include_identity"),
            computational_jumps=get("computational_jumps"),
        )
    except (ValueError, IndexError) as exc:
        raise ConfigError(_name_field(str(exc))) from None


def _name_field(message: str) -> str:
    for key in ("initial_state", "decoherence", "computational_jumps", "diagnostics", "partition", "gamma"):
        if key in message:
            return f"field {key!r}: {message}"
    if "master_seed" in message:
        return f"field 'seed': {message}"
    if "subsystem mask" in message or "overlap" in message:
        return f"field 'partition': {message}"
    if "bound" in message:
        return f"field 'diagnostics': {message}"
    return message


def parse_toml(text: str) -> dict[str, Any]:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from None


def parse_config(text: str) -> ExperimentConfig:
    """Parse a TOML document into a validated ``ExperimentConfig``."""
    return config_from_mapping(parse_toml(text))


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_to_mapping(config: ExperimentConfig) -> dict[str, Any]:
    """Inverse of ``config_from_mapping`` (flat TOML keys)."""
    out: dict[str, Any] = {"schema_version": SCHEMA_VERSION}
    m = config.model
    if isinstance(m, SykSpec):
        out.update(model="syk", n_majorana=m.n_majorana, q=m.q)
    else:
        out.update(model="lmg", n_spins=m.n_spins)
    out.update(
        j_scale=m.j_scale,
        seed=int(config.master_seed),
        initial_state=config.initial_state,
        decoherence=config.decoherence,
        gamma=list(config.gamma_levels) if config.gamma_levels else config.gamma_over_j,
        t_max=config.time_grid.t_max,
        n_points=config.time_grid.n_points,
        realizations=config.n_realizations,
        diagnostics=list(config.diagnostics),
        partition=[list(p) for p in config.partition],
        include_identity=config.include_identity,
        computational_jumps=config.computational_jumps,
    )
    return out
