"""Closed and Lindblad dynamics, Heisenberg-picture adjoints, and a joint
system+environment dephasing model.

Vectorisation is row-major (numpy C order): vec(A X B) = (A kron B^T) vec(X).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg

from .core import (
    Spectrum,
    Z,
    eig_hermitian,
    embed,
    hermiticity_residual,
    num_qubits,
    tensor_product,
    unitary_exp,
)

SUPEROP_MAX_DIM = 32
TAYLOR_THETA = 10.0
TAYLOR_MAX_OUTPUTS = 32
DEGENERACY_TOL = 1e-9


class DecoherenceBasis(str, enum.Enum):
    COMPUTATIONAL = "computational"
    ENERGY = "energy"


@dataclass(frozen=True, eq=False)
class LindbladSpec:
    hamiltonian: np.ndarray
    jump_ops: Sequence[np.ndarray] = ()
    gamma: float = 0.0

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jump_ops", tuple(np.asarray(L, dtype=complex) for L in self.jump_ops))
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        for L in self.jump_ops:
            if L.shape != h.shape:
                raise ValueError(f"jump operator shape {L.shape} does not match Hamiltonian {h.shape}")

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


def evolve_unitary(rho: np.ndarray, h: np.ndarray, t: float) -> np.ndarray:
    if rho.shape != h.shape:
        raise ValueError(f"dimension mismatch: state {rho.shape}, Hamiltonian {h.shape}")
    u = unitary_exp(h, t)
    return u @ rho @ u.conj().T


def energy_projectors(h: np.ndarray, tol: float = DEGENERACY_TOL, spectrum: Spectrum | None = None) -> list[np.ndarray]:
    """Projectors onto the distinct eigenvalues of h (eigenvalues closer than tol are grouped)."""
    spec = spectrum if spectrum is not None else eig_hermitian(h)
    w, v = spec
    groups = np.concatenate([[0], np.cumsum(np.diff(w) > tol)])
    out = []
    for g in range(groups[-1] + 1):
        cols = v[:, groups == g]
        out.append(cols @ cols.conj().T)
    return out


def dephasing_jumps(
    basis: DecoherenceBasis | str,
    h: np.ndarray,
    n_qubits: int,
    computational: str = "local_z",
) -> list[np.ndarray]:
    """Jump operators for dephasing in the computational or energy basis.

    ``computational="local_z"`` gives one sigma_z per qubit;
    ``"basis_projectors"`` gives the 2**n projectors |z><z| instead.
    """
    basis = DecoherenceBasis(basis)
    if basis is DecoherenceBasis.ENERGY:
        return energy_projectors(h)
    if computational == "local_z":
        return [embed(Z, (k,), n_qubits) for k in range(n_qubits)]
    if computational == "basis_projectors":
        dim = 2**n_qubits
        out = []
        for k in range(dim):
            p = np.zeros((dim, dim), dtype=complex)
            p[k, k] = 1
            out.append(p)
        return out
    raise ValueError(f"unknown computational jump model {computational!r}")


def liouvillian(spec: LindbladSpec) -> np.ndarray:
    """Superoperator with vec(d rho/dt) = L vec(rho) for row-major vec."""
    h = spec.hamiltonian
    d = spec.dim
    eye = np.eye(d, dtype=complex)
    out = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for L in spec.jump_ops:
        k = L.conj().T @ L
        out += spec.gamma * (np.kron(L, L.conj()) - 0.5 * (np.kron(k, eye) + np.kron(eye, k.T)))
    return out


def _offdiag_norm(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - np.diag(np.diag(m)))))


def _diag_rates(diags: Sequence[np.ndarray], gamma: float, d: int) -> np.ndarray:
    """Elementwise dissipator rates for jump operators diagonal in a common basis."""
    rates = np.zeros((d, d), dtype=complex)
    for l in diags:
        mod = np.abs(l) ** 2
        rates += np.outer(l, l.conj()) - 0.5 * (mod[:, None] + mod[None, :])
    return gamma * rates


class Propagator:
    """Evolves batches of operators under a Lindblad generator.

    ``method`` is one of ``"auto"``, ``"eigen"`` (all jumps diagonal in the
    Hamiltonian eigenbasis; exact elementwise exponentials), ``"superop"``
    (dense exponential of the Liouvillian) or ``"taylor"`` (norm-controlled
    Taylor expansion of the generator in matrix form).
    """

    def __init__(self, spec: LindbladSpec, method: str = "auto"):
        self.spec = spec
        self.spectrum = eig_hermitian(spec.hamiltonian)
        jumps = spec.jump_ops if spec.gamma > 0 else ()
        d = spec.dim
        v = self.spectrum.eigenvectors
        energy_diag = None
        if all(_offdiag_norm(v.conj().T @ L @ v) < 1e-9 * max(1.0, np.max(np.abs(L))) for L in jumps):
            energy_diag = [np.diag(v.conj().T @ L @ v) for L in jumps]
        if method == "auto":
            if energy_diag is not None:
                method = "eigen"
            elif d <= SUPEROP_MAX_DIM:
                method = "superop"
            else:
                method = "taylor"
        if method == "eigen" and energy_diag is None:
            raise ValueError("eigen method requires jump operators diagonal in the energy eigenbasis")
        if method not in ("eigen", "superop", "taylor"):
            raise ValueError(f"unknown propagation method {method!r}")
        self.method = method
        self._jumps = jumps
        if method == "eigen":
            e = self.spectrum.eigenvalues
            self._rates = -1j * (e[:, None] - e[None, :]) + _diag_rates(energy_diag, spec.gamma, d)
        elif method == "taylor":
            self._setup_taylor()

    @cached_property
    def liouvillian(self) -> np.ndarray:
        return liouvillian(self.spec)

    def _setup_taylor(self):
        spec = self.spec
        d = spec.dim
        e = self.spectrum.eigenvalues
        spread = e[-1] - e[0]
        self._comp_rates = None
        if all(_offdiag_norm(L) == 0 for L in self._jumps):
            rates = _diag_rates([np.diag(L) for L in self._jumps], spec.gamma, d)
            self._shift = -0.5 * float(np.min(rates.real)) if self._jumps else 0.0
            self._comp_rates = rates
            self._norm = spread + float(np.max(np.abs(rates + self._shift)))
        else:
            self._shift = 0.0
            self._k = sum((L.conj().T @ L for L in self._jumps), np.zeros((d, d), dtype=complex))
            self._norm = spread + 2 * spec.gamma * sum(np.linalg.norm(L, 2) ** 2 for L in self._jumps)
        self._norm = max(self._norm, 1e-12)

    def _generator(self, m: np.ndarray, adjoint: bool) -> np.ndarray:
        h = self.spec.hamiltonian
        sign = 1j if adjoint else -1j
        out = sign * (h @ m - m @ h)
        if self._comp_rates is not None:
            if self._jumps:
                rates = self._comp_rates.conj() if adjoint else self._comp_rates
                out += (rates + self._shift) * m
            return out
        g = self.spec.gamma
        for L in self._jumps:
            out += g * (L.conj().T @ m @ L if adjoint else L @ m @ L.conj().T)
        if self._jumps:
            out -= 0.5 * g * (self._k @ m + m @ self._k)
        return out

    def evolve(self, ops: np.ndarray, times: Sequence[float], adjoint: bool = False) -> Iterator[tuple[float, np.ndarray]]:
        """Yield ``(t, E_t(ops))`` (or the adjoint map) for each non-decreasing time."""
        ops = np.asarray(ops, dtype=complex)
        d = self.spec.dim
        if ops.shape[-2:] != (d, d):
            raise ValueError(f"operator shape {ops.shape} does not match dimension {d}")
        times = [float(t) for t in times]
        if any(t < 0 for t in times):
            raise ValueError("evolution times must be non-negative")
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("evolution times must be non-decreasing")
        if self.method == "eigen":
            yield from self._evolve_eigen(ops, times, adjoint)
        elif self.method == "superop":
            yield from self._evolve_superop(ops, times, adjoint)
        else:
            yield from self._evolve_taylor(ops, times, adjoint)

    def _evolve_eigen(self, ops, times, adjoint):
        v = self.spectrum.eigenvectors
        vh = v.conj().T
        tilde = vh @ ops @ v
        rates = self._rates.conj() if adjoint else self._rates
        for t in times:
            yield t, v @ (np.exp(rates * t) * tilde) @ vh

    def _evolve_superop(self, ops, times, adjoint):
        d = self.spec.dim
        lv = self.liouvillian.conj().T if adjoint else self.liouvillian
        batch = ops.shape[:-2]
        vecs = ops.reshape(-1, d * d).T
        t_cur = 0.0
        cache: dict[float, np.ndarray] = {}
        for t in times:
            dt = t - t_cur
            if dt > 0:
                key = round(dt, 12)
                if key not in cache:
                    cache[key] = scipy.linalg.expm(lv * dt)
                vecs = cache[key] @ vecs
                t_cur = t
            yield t, vecs.T.reshape(batch + (d, d))

    def _evolve_taylor(self, ops, times, adjoint):
        m = ops.copy()
        t_cur = 0.0
        pending = list(times)
        max_step = TAYLOR_THETA / self._norm
        while pending:
            if pending[0] <= t_cur:
                yield pending.pop(0), m
                continue
            chunk = []
            for t in pending:
                if t - t_cur <= max_step and len(chunk) < TAYLOR_MAX_OUTPUTS:
                    chunk.append(t)
                else:
                    break
            end = chunk[-1] if chunk else t_cur + max_step
            outs = self._taylor_chunk(m, t_cur, [t - t_cur for t in chunk] or [end - t_cur], end - t_cur, adjoint)
            m = outs[-1]
            t_cur = end
            for t, out in zip(chunk, outs):
                pending.pop(0)
                yield t, out

    def _taylor_chunk(self, m, t0, offsets, span, adjoint):
        # Terms T_k = (span L)^k m / k! are kept, then every output
        # sum_k sigma^k T_k is formed in one matrix product.
        sig = np.array([s / span for s in offsets])
        terms = [m]
        scale = max(float(np.max(np.abs(m))), 1e-300)
        small = 0
        for k in range(1, 400):
            terms.append(self._generator(terms[-1], adjoint) * (span / k))
            if np.max(np.abs(terms[-1])) < 1e-16 * scale:
                small += 1
                if small == 2:
                    break
            else:
                small = 0
        else:
            raise RuntimeError("Taylor propagation did not converge")
        weights = sig[:, None] ** np.arange(len(terms))[None, :]
        if self._shift:
            weights = weights * np.exp(-self._shift * np.asarray(offsets))[:, None]
        stacked = np.stack(terms).reshape(len(terms), -1)
        outs = (weights.astype(complex) @ stacked).reshape((len(sig),) + m.shape)
        return list(outs)

    def apply(self, op: np.ndarray, t: float, adjoint: bool = False) -> np.ndarray:
        for _, out in self.evolve(op, [t], adjoint=adjoint):
            return out
        raise AssertionError("unreachable")


def _symmetrize(rho: np.ndarray) -> np.ndarray:
    return (rho + rho.conj().T) / 2


def evolve_lindblad(rho: np.ndarray, spec: LindbladSpec, t: float, method: str = "auto") -> np.ndarray:
    if t < 0:
        raise ValueError("t must be non-negative")
    if rho.shape != spec.hamiltonian.shape:
        raise ValueError(f"dimension mismatch: state {rho.shape}, Hamiltonian {spec.hamiltonian.shape}")
    return _symmetrize(Propagator(spec, method).apply(rho, t))


def heisenberg_adjoint(w: np.ndarray, spec: LindbladSpec, t: float, method: str = "auto") -> np.ndarray:
    """Adjoint channel E_t^dagger(W), so that tr[W E_t(rho)] = tr[E_t^dagger(W) rho]."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return Propagator(spec, method).apply(w, t, adjoint=True)


@dataclass(eq=False)
class JointModel:
    n_sys: int
    n_env: int
    joint_hamiltonian: np.ndarray
    env_equilibrium: np.ndarray
    gamma: float = 0.0
    hamiltonian_sys: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        dim = 2 ** (self.n_sys + self.n_env)
        if self.joint_hamiltonian.shape != (dim, dim):
            raise ValueError("joint Hamiltonian does not match n_sys + n_env qubits")
        if self.env_equilibrium.shape != (2**self.n_env,) * 2:
            raise ValueError("environment equilibrium state has the wrong dimension")
        if hermiticity_residual(self.joint_hamiltonian) > 1e-10:
            raise ValueError("joint Hamiltonian must be Hermitian")

    @property
    def sys_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n_sys))

    @property
    def env_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n_sys, self.n_sys + self.n_env))

    @cached_property
    def spectrum(self) -> Spectrum:
        return eig_hermitian(self.joint_hamiltonian)


def build_joint_dephasing_model(n_sys: int, h_sys: np.ndarray, gamma: float) -> JointModel:
    """System qubits 0..n-1 each ZZ-coupled to a mirror environment qubit n+k.

    The environment starts in the infinite-temperature state (I/2)^n.
    """
    if n_sys < 2:
        raise ValueError("n_sys must be >= 2")
    if num_qubits(h_sys) != n_sys:
        raise ValueError("system Hamiltonian does not act on n_sys qubits")
    n = 2 * n_sys
    d_env = 2**n_sys
    h = np.kron(h_sys, np.eye(d_env, dtype=complex))
    for k in range(n_sys):
        h = h + gamma * embed(tensor_product(Z, Z), (k, n_sys + k), n)
    env_eq = np.eye(d_env, dtype=complex) / d_env
    return JointModel(n_sys, n_sys, h, env_eq, gamma, h_sys)


def evolve_joint(model: JointModel, rho_sys: np.ndarray, t: float) -> np.ndarray:
    """Evolve rho_sys (x) env_equilibrium unitarily under the joint Hamiltonian."""
    if rho_sys.shape != (2**model.n_sys,) * 2:
        raise ValueError("system state does not match n_sys")
    rho = np.kron(rho_sys, model.env_equilibrium)
    u = unitary_exp(model.joint_hamiltonian, t, model.spectrum)
    return _symmetrize(u @ rho @ u.conj().T)
