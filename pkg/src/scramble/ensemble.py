"""Disorder-ensemble orchestration.

Each realization draws its SYK couplings from a child seed derived from the
master seed, evolves the chosen dynamics and evaluates the requested
diagnostics on a shared time grid. Realizations are reduced with a fixed
pairwise tree, so the ensemble result does not depend on worker count.
"""
from __future__ import annotations

import dataclasses
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .core import as_mask, complement
from .diagnostics import (
    AveragedOtoc,
    OpenBipartiteOtoc,
    decomposition_from_state,
    mutual_information,
    tripartite_mutual_information,
)
from .dynamics import (
    LindbladSpec,
    Propagator,
    build_joint_dephasing_model,
    dephasing_jumps,
)
from .models import LmgSpec, SykSpec, all_up_state, build_lmg, build_syk, neel_state

DIAGNOSTICS = ("otoc_avg", "mutual_info", "tmi", "open_otoc", "bound", "decomposition")
INITIAL_STATES = ("all_up", "neel")
DECOHERENCE = ("none", "computational", "energy")
COMPUTATIONAL_JUMPS = ("local_z", "basis_projectors")

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def realization_seed(master_seed: int, index: int) -> int:
    """Child seed for realization ``index``.

    SplitMix64: the counter ``master + golden * (index + 1)`` (mod 2**64) is
    passed through the SplitMix64 finalizer. Both steps are bijections on 64-bit
    integers, so seeds are distinct across indices for a fixed master and
    across masters for a fixed index.
    """
    if index < 0:
        raise ValueError("realization index must be non-negative")
    z = (int(master_seed) + _GOLDEN * (index + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class TimeGrid:
    t_max: float = 10.0
    n_points: int = 101

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("time_grid.t_max must be positive")
        if self.n_points < 2:
            raise ValueError("time_grid.n_points must be at least 2")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_points)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one ensemble run.

    ``partition`` lists subsystem masks: the first is A, an optional second
    is B (default: the complement of A), an optional third is C for TMI
    (default: every remaining qubit). Without B, TMI takes B as the first
    qubit outside A.
    """

    model: SykSpec | LmgSpec
    initial_state: str = "all_up"
    decoherence: str = "none"
    gamma_over_j: float = 0.0
    time_grid: TimeGrid = field(default_factory=TimeGrid)
    n_realizations: int = 100
    master_seed: int = 0
    diagnostics: tuple[str, ...] = ("otoc_avg",)
    partition: tuple[tuple[int, ...], ...] = ((0,),)
    include_identity: bool = True
    computational_jumps: str = "local_z"
    gamma_levels: tuple[float, ...] = ()

    def __post_init__(self):
        n = self.model.n_qubits
        if self.initial_state not in INITIAL_STATES:
            raise ValueError(f"initial_state must be one of {INITIAL_STATES}, got {self.initial_state!r}")
        if self.decoherence not in DECOHERENCE:
            raise ValueError(f"decoherence must be one of {DECOHERENCE}, got {self.decoherence!r}")
        if self.computational_jumps not in COMPUTATIONAL_JUMPS:
            raise ValueError(f"computational_jumps must be one of {COMPUTATIONAL_JUMPS}")
        for g in (self.gamma_over_j,) + tuple(self.gamma_levels):
            if not g >= 0:
                raise ValueError(f"gamma_over_j must be non-negative, got {g}")
        lindblad_diags = set(self.diagnostics) - {"decomposition"}
        positive = any(g > 0 for g in (self.gamma_over_j,) + tuple(self.gamma_levels))
        if self.decoherence == "none" and positive and lindblad_diags:
            raise ValueError("gamma_over_j > 0 needs decoherence 'computational' or 'energy'")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be at least 1")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        unknown = set(self.diagnostics) - set(DIAGNOSTICS)
        if unknown or not self.diagnostics:
            raise ValueError(f"diagnostics must be a non-empty subset of {DIAGNOSTICS}, got {sorted(unknown)}")
        if not self.partition:
            raise ValueError("partition needs at least subsystem A")
        masks = [as_mask(m, n) for m in self.partition]
        object.__setattr__(self, "partition", tuple(masks))
        object.__setattr__(self, "diagnostics", tuple(d for d in DIAGNOSTICS if d in self.diagnostics))
        object.__setattr__(self, "gamma_levels", tuple(float(g) for g in self.gamma_levels))
        used = [q for m in masks for q in m]
        if len(used) != len(set(used)):
            raise ValueError("partition masks overlap")
        if len(complement(masks[0], n)) == 0:
            raise ValueError("partition A cannot cover every qubit")
        if "tmi" in self.diagnostics and len(self._tmi_masks()[2]) == 0:
            raise ValueError("tmi needs a non-empty remainder C outside A and B")
        if "bound" in self.diagnostics:
            if self.decoherence != "none":
                raise ValueError("the bound diagnostic is defined for closed dynamics only")
            if len(self.part_b) + len(self.part_a) != n:
                raise ValueError("the bound diagnostic requires B to be the complement of A")
        if "decomposition" in self.diagnostics and 2 * n > 12:
            raise ValueError("decomposition doubles the register; at most 6 system qubits")

    @property
    def n_qubits(self) -> int:
        return self.model.n_qubits

    @property
    def part_a(self) -> tuple[int, ...]:
        return self.partition[0]

    @property
    def part_b(self) -> tuple[int, ...]:
        if len(self.partition) > 1:
            return self.partition[1]
        return complement(self.part_a, self.n_qubits)

    def _tmi_masks(self):
        a = self.part_a
        rest = complement(a, self.n_qubits)
        b = self.partition[1] if len(self.partition) > 1 else rest[:1]
        if len(self.partition) > 2:
            return a, b, self.partition[2]
        c = tuple(q for q in rest if q not in b)
        return a, b, c

    def at_gamma(self, gamma: float) -> "ExperimentConfig":
        return dataclasses.replace(self, gamma_over_j=float(gamma), gamma_levels=())

    def levels(self) -> tuple[float, ...]:
        return self.gamma_levels or (self.gamma_over_j,)

    def to_dict(self) -> dict:
        """Canonical, JSON-ready form (used in manifests)."""
        if isinstance(self.model, SykSpec):
            model = {"kind": "syk", "n_majorana": self.model.n_majorana, "q": self.model.q, "j_scale": self.model.j_scale}
        else:
            model = {"kind": "lmg", "n_spins": self.model.n_spins, "j_scale": self.model.j_scale}
        return {
            "model": model,
            "initial_state": self.initial_state,
            "decoherence": self.decoherence,
            "gamma_over_j": self.gamma_over_j,
            "gamma_levels": list(self.gamma_levels),
            "time_grid": {"t_max": self.time_grid.t_max, "n_points": self.time_grid.n_points},
            "n_realizations": self.n_realizations,
            "master_seed": int(self.master_seed),
            "diagnostics": list(self.diagnostics),
            "partition": [list(m) for m in self.partition],
            "include_identity": self.include_identity,
            "computational_jumps": self.computational_jumps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        m = dict(d["model"])
        kind = m.pop("kind")
        model = SykSpec(**m, seed=int(d["master_seed"])) if kind == "syk" else LmgSpec(**m)
        return cls(
            model=model,
            initial_state=d["initial_state"],
            decoherence=d["decoherence"],
            gamma_over_j=float(d["gamma_over_j"]),
            gamma_levels=tuple(d.get("gamma_levels", ())),
            time_grid=TimeGrid(**d["time_grid"]),
            n_realizations=int(d["n_realizations"]),
            master_seed=int(d["master_seed"]),
            diagnostics=tuple(d["diagnostics"]),
            partition=tuple(tuple(p) for p in d["partition"]),
            include_identity=bool(d["include_identity"]),
            computational_jumps=d["computational_jumps"],
        )


class Trace(NamedTuple):
    mean: np.ndarray
    stderr: np.ndarray
    n: int
    minimum: np.ndarray | None = None


@dataclass
class TimeSeries:
    times: np.ndarray
    traces: dict[str, Trace]
    failures: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        for name, tr in self.traces.items():
            if len(tr.mean) != len(self.times) or len(tr.stderr) != len(self.times):
                raise ValueError(f"trace {name!r} does not match the time grid")

    def merged(self, other: "TimeSeries", suffix: str = "") -> "TimeSeries":
        if not np.array_equal(self.times, other.times):
            raise ValueError("cannot merge series on different grids")
        traces = dict(self.traces)
        traces.update({name + suffix: tr for name, tr in other.traces.items()})
        failures = dict(self.failures)
        failures.update(other.failures)
        return TimeSeries(self.times, traces, failures)


class RealizationError(RuntimeError):
    def __init__(self, index: int, message: str):
        super().__init__(f"realization {index}: {message}")
        self.index = index


def realization_hamiltonian(config: ExperimentConfig, index: int) -> np.ndarray:
    if isinstance(config.model, SykSpec):
        spec = dataclasses.replace(config.model, seed=realization_seed(config.master_seed, index))
        return build_syk(spec)
    return build_lmg(config.model)


def initial_state(config: ExperimentConfig) -> np.ndarray:
    n = config.n_qubits
    return all_up_state(n) if config.initial_state == "all_up" else neel_state(n)


def lindblad_spec(config: ExperimentConfig, h: np.ndarray) -> LindbladSpec:
    g = config.gamma_over_j * config.model.j_scale
    if config.decoherence == "none" or g == 0:
        return LindbladSpec(h)
    jumps = dephasing_jumps(config.decoherence, h, config.n_qubits, config.computational_jumps)
    return LindbladSpec(h, jumps, g)


def _evaluate(config: ExperimentConfig, index: int) -> dict[str, np.ndarray]:
    times = config.time_grid.times
    h = realization_hamiltonian(config, index)
    rho0 = initial_state(config)
    diags = set(config.diagnostics)
    prop = Propagator(lindblad_spec(config, h)) if diags - {"decomposition"} else None
    a, b = config.part_a, config.part_b
    out: dict[str, np.ndarray] = {}
    if diags & {"otoc_avg", "bound"}:
        o = AveragedOtoc(rho0, a, b, config.include_identity).series(prop, times)
        if "otoc_avg" in diags:
            out["otoc_avg"] = o
            out["otoc_growth"] = 1.0 - o
    if diags & {"mutual_info", "tmi", "bound"}:
        states = [s for _, s in prop.evolve(rho0, times)]
        mi = np.array([mutual_information(s, a, b) for s in states])
        if "mutual_info" in diags:
            out["mutual_info"] = mi
        if "bound" in diags:
            out["bound_residual"] = mi - (o[0] - o)
        if "tmi" in diags:
            ta, tb, tc = config._tmi_masks()
            out["tmi"] = np.array([tripartite_mutual_information(s, ta, tb, tc) for s in states])
    if "open_otoc" in diags:
        out["open_otoc"] = OpenBipartiteOtoc(config.n_qubits, a, b, config.include_identity).series(prop, times)
    if "decomposition" in diags:
        model = build_joint_dephasing_model(config.n_qubits, h, config.gamma_over_j * config.model.j_scale)
        rho = np.kron(rho0, model.env_equilibrium)
        jprop = Propagator(LindbladSpec(model.joint_hamiltonian))
        recs = [decomposition_from_state(model, (s + s.conj().T) / 2, 0.0, t) for t, s in jprop.evolve(rho, times)]
        out["mutual_info_SE"] = np.array([r.mutual_info_SE for r in recs])
        out["delta_s_exchange"] = np.array([r.delta_s_exchange for r in recs])
        out["rel_entropy_env"] = np.array([r.rel_entropy_env for r in recs])
        out["delta_s_system"] = np.array([r.delta_s_system for r in recs])
        out["decomposition_residual"] = np.array([r.residual for r in recs])
    return out


def run_realization(config: ExperimentConfig, index: int) -> TimeSeries:
    """Single-realization traces (stderr 0, n 1)."""
    try:
        values = _evaluate(config, index)
    except Exception as exc:  # tagged and re-raised for the caller
        raise RealizationError(index, f"{type(exc).__name__}: {exc}") from exc
    zeros = np.zeros(config.time_grid.n_points)
    return TimeSeries(config.time_grid.times, {k: Trace(v, zeros.copy(), 1, v) for k, v in values.items()})


def _safe_realization(args):
    config, index = args
    try:
        return index, _evaluate(config, index), None
    except Exception as exc:
        return index, None, f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"


def tree_sum(arrays: Sequence[np.ndarray]) -> np.ndarray:
    """Pairwise sum in a fixed order: results depend only on the input order."""
    if not arrays:
        raise ValueError("nothing to sum")
    level = list(arrays)
    while len(level) > 1:
        nxt = [level[i] + level[i + 1] for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def aggregate(samples: Sequence[np.ndarray]) -> Trace:
    """Mean, standard error and pointwise minimum over realizations.

    Deviations are taken from the first sample before summing, so identical
    samples give their exact value and an exactly zero standard error.
    """
    m = len(samples)
    ref = samples[0]
    shift = [s - ref for s in samples]
    mean_shift = tree_sum(shift) / m
    mean = ref + mean_shift
    lowest = np.minimum.reduce(samples)
    if m == 1:
        return Trace(mean, np.zeros_like(mean), 1, lowest)
    var = tree_sum([(d - mean_shift) ** 2 for d in shift]) / (m - 1)
    return Trace(mean, np.sqrt(var / m), m, lowest)


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, else SCRAMBLE_THREADS, else 1."""
    if threads is None:
        env = os.environ.get("SCRAMBLE_THREADS")
        if env is None or env == "":
            return 1
        try:
            threads = int(env)
        except ValueError:
            raise ValueError(f"SCRAMBLE_THREADS must be an integer, got {env!r}") from None
    if threads < 1:
        raise ValueError("thread count must be at least 1")
    return threads


def run_ensemble(config: ExperimentConfig, threads: int | None = None) -> TimeSeries:
    """Mean and standard error over ``config.n_realizations`` realizations.

    Failed realizations are excluded and listed in ``failures``. When
    ``config.gamma_levels`` is set, one ensemble is run per level and the
    traces are suffixed with ``@gamma=<value>``.
    """
    if config.gamma_levels:
        out = None
        for g in config.gamma_levels:
            part = run_ensemble(config.at_gamma(g), threads)
            part = TimeSeries(part.times, {f"{k}@gamma={g:g}": v for k, v in part.traces.items()}, part.failures)
            out = part if out is None else out.merged(part)
        return out
    threads = resolve_threads(threads)
    jobs = [(config, i) for i in range(config.n_realizations)]
    if threads == 1 or len(jobs) == 1:
        results = [_safe_realization(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_safe_realization, jobs, chunksize=1))
    results.sort(key=lambda r: r[0])
    failures = {i: err for i, _, err in results if err is not None}
    good = [vals for _, vals, err in results if err is None]
    if not good:
        raise RealizationError(min(failures), "every realization failed:\n" + next(iter(failures.values())))
    names = list(good[0])
    traces = {k: aggregate([g[k] for g in good]) for k in names}
    return TimeSeries(config.time_grid.times, traces, failures)
