"""SYK and LMG Hamiltonians, Jordan-Wigner Majoranas and initial states."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

from .core import I2, X, Y, Z, basis_state, embed, tensor_product

Couplings = dict[tuple[int, ...], float]


@dataclass(frozen=True)
class SykSpec:
    n_majorana: int
    q: int = 4
    j_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_majorana < 4 or self.n_majorana % 2:
            raise ValueError(f"n_majorana must be even and >= 4, got {self.n_majorana}")
        if self.q < 2 or self.q % 2 or self.q > self.n_majorana:
            raise ValueError(f"q must be even with 2 <= q <= N, got {self.q}")
        if not self.j_scale > 0:
            raise ValueError("j_scale must be positive")

    @property
    def n_qubits(self) -> int:
        return self.n_majorana // 2

    @property
    def coupling_variance(self) -> float:
        return self.j_scale**2 * math.factorial(self.q - 1) / self.n_majorana ** (self.q - 1)


@dataclass(frozen=True)
class LmgSpec:
    n_spins: int
    j_scale: float = 1.0

    def __post_init__(self):
        if self.n_spins < 2:
            raise ValueError(f"n_spins must be >= 2, got {self.n_spins}")
        if not self.j_scale > 0:
            raise ValueError("j_scale must be positive")

    @property
    def n_qubits(self) -> int:
        return self.n_spins


def majorana(i: int, n_majorana: int) -> np.ndarray:
    """Jordan-Wigner Majorana operator psi_i (1-based) with {psi_i, psi_j} = delta_ij."""
    if n_majorana < 2 or n_majorana % 2:
        raise ValueError(f"number of Majoranas must be even, got {n_majorana}")
    if not 1 <= i <= n_majorana:
        raise IndexError(f"Majorana index {i} outside 1..{n_majorana}")
    n = n_majorana // 2
    k = (i + 1) // 2
    site = X if i % 2 else Y
    factors = [Z] * (k - 1) + [site] + [I2] * (n - k)
    return tensor_product(*factors) / np.sqrt(2)


def coupling_rng(seed: int) -> np.random.Generator:
    """Philox4x64 counter-based generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=int(seed) % 2**64))


def sample_syk_couplings(spec: SykSpec) -> Couplings:
    """Draw J_{i1..iq} ~ N(0, J^2 (q-1)! / N^(q-1)) for every i1 < ... < iq (lexicographic order)."""
    idx = list(itertools.combinations(range(1, spec.n_majorana + 1), spec.q))
    values = coupling_rng(spec.seed).standard_normal(len(idx)) * math.sqrt(spec.coupling_variance)
    return {k: float(v) for k, v in zip(idx, values)}


@lru_cache(maxsize=8)
def _syk_monomials(n_majorana: int, q: int) -> tuple[tuple[tuple[int, ...], ...], np.ndarray]:
    """All i^{q/2} psi_{i1}...psi_{iq} products, stacked in lexicographic index order."""
    psi = [majorana(i, n_majorana) for i in range(1, n_majorana + 1)]
    idx = tuple(itertools.combinations(range(1, n_majorana + 1), q))
    phase = 1j ** (q // 2)
    stack = np.empty((len(idx),) + psi[0].shape, dtype=complex)
    for k, combo in enumerate(idx):
        m = psi[combo[0] - 1]
        for j in combo[1:]:
            m = m @ psi[j - 1]
        stack[k] = phase * m
    stack.setflags(write=False)
    return idx, stack


def build_syk(spec: SykSpec, couplings: Mapping[tuple[int, ...], float] | None = None) -> np.ndarray:
    if couplings is None:
        couplings = sample_syk_couplings(spec)
    idx, stack = _syk_monomials(spec.n_majorana, spec.q)
    if len(couplings) != len(idx) or any(k not in couplings for k in idx):
        raise ValueError(
            f"coupling set does not match N={spec.n_majorana}, q={spec.q} "
            f"({len(couplings)} entries, expected {len(idx)})"
        )
    values = np.array([couplings[k] for k in idx])
    h = np.tensordot(values, stack, axes=1)
    return (h + h.conj().T) / 2


def couplings_to_json(couplings: Mapping[tuple[int, ...], float]) -> str:
    rows = [{"indices": list(k), "value": float(v)} for k, v in couplings.items()]
    return json.dumps(rows)


def couplings_from_json(text: str) -> Couplings:
    return {tuple(int(i) for i in row["indices"]): float(row["value"]) for row in json.loads(text)}


def build_lmg(spec: LmgSpec) -> np.ndarray:
    """H = -(J/N) sum_{i<j} (X_i X_j + Y_i Y_j) - sum_i Z_i."""
    n = spec.n_spins
    dim = 2**n
    h = np.zeros((dim, dim), dtype=complex)
    xx_yy = np.kron(X, X) + np.kron(Y, Y)
    for i, j in itertools.combinations(range(n), 2):
        h -= spec.j_scale / n * embed(xx_yy, (i, j), n)
    for i in range(n):
        h -= embed(Z, (i,), n)
    return h


def all_up_state(n_qubits: int) -> np.ndarray:
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    return basis_state([0] * n_qubits)


def neel_state(n_qubits: int) -> np.ndarray:
    """|0101...> with qubit 0 in |0>."""
    if n_qubits < 2:
        raise ValueError("Neel state needs at least two qubits")
    return basis_state([k % 2 for k in range(n_qubits)])
