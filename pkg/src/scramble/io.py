"""CSV and manifest emission.

CSV layout: ``time,<trace>_mean,<trace>_stderr,...`` with every value printed
to 12 significant digits. Each CSV gets a sibling ``<stem>.manifest.json``.
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .ensemble import ExperimentConfig, TimeSeries, Trace

DIGITS = 12


def _fmt(x: float) -> str:
    x = float(x)
    if x == 0:
        x = 0.0  # drop the sign of negative zero
    return f"{x:.{DIGITS}g}"


@dataclass(frozen=True)
class RunManifest:
    config: dict
    artifact_version: str
    timestamp: str
    elapsed_seconds: float
    command: str = ""
    failures: dict = field(default_factory=dict)

    @classmethod
    def create(cls, config: ExperimentConfig | dict, elapsed: float, command: str = "", failures=None) -> "RunManifest":
        from . import __version__

        cfg = config.to_dict() if isinstance(config, ExperimentConfig) else dict(config)
        stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        fails = {str(k): v for k, v in (failures or {}).items()}
        return cls(cfg, __version__, stamp, float(elapsed), command, fails)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig.from_dict(self.config)


def manifest_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".manifest.json")


def csv_text(series: TimeSeries) -> str:
    names = list(series.traces)
    lines = [",".join(["time"] + [f"{n}_{s}" for n in names for s in ("mean", "stderr")])]
    for i, t in enumerate(series.times):
        row = [_fmt(t)]
        for n in names:
            tr = series.traces[n]
            row += [_fmt(tr.mean[i]), _fmt(tr.stderr[i])]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def emit_csv(series: TimeSeries, manifest: RunManifest, path: str | Path) -> Path:
    """Write the CSV and its manifest; returns the CSV path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(series))
    with open(manifest_path(path), "w", encoding="utf-8", newline="") as fh:
        fh.write(manifest.to_json())
    return path


def read_csv(path: str | Path) -> TimeSeries:
    """Parse a CSV written by ``emit_csv`` back into a ``TimeSeries``."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array([[float(x) for x in r] for r in rows[1:]])
    if header[0] != "time" or len(header) % 2 != 1:
        raise ValueError(f"{path}: not a scramble time-series CSV")
    traces = {}
    for k in range(1, len(header), 2):
        name = header[k][: -len("_mean")]
        traces[name] = Trace(body[:, k], body[:, k + 1], 0)
    return TimeSeries(body[:, 0], traces)
