"""Scrambling diagnostics built on top of the core and dynamics modules.

Pauli-group averages are computed exactly without looping over the groups:
the sum over the Pauli group on a support S of P X P equals
d_S * (I_S (x) tr_S X), and the sum over P of tr[P Y] tr[P Z] equals
d_S * tr[Y Z]. Both collapse a 4**|S| loop into partial traces.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    as_mask,
    complement,
    eig_hermitian,
    hermiticity_residual,
    num_qubits,
    partial_trace,
    pauli_matrix,
    pauli_strings,
    relative_entropy,
    unitary_exp,
    von_neumann_entropy,
)
from .dynamics import JointModel, LindbladSpec, Propagator, evolve_joint

EXACT_PAULI_LIMIT = 4096
OPEN_OTOC_EXACT_QUBITS = 3


class ContractViolation(RuntimeError):
    """A numerical contract (unitality, bound, identity) does not hold."""


def _check_disjoint(*masks: Sequence[int]) -> None:
    seen: set[int] = set()
    for m in masks:
        if seen & set(m):
            raise ValueError(f"subsystem masks overlap: {masks}")
        seen |= set(m)


def heisenberg_operator(w: np.ndarray, h: np.ndarray, t: float) -> np.ndarray:
    """W(t) = exp(iHt) W exp(-iHt)."""
    u = unitary_exp(h, t)
    return u.conj().T @ w @ u


def otoc(rho: np.ndarray, w: np.ndarray, v: np.ndarray, h: np.ndarray, t: float) -> complex:
    """F(t) = tr[rho W(t)^dag V^dag W(t) V]."""
    if not (rho.shape == w.shape == v.shape == h.shape):
        raise ValueError("otoc operands must share one dimension")
    wt = heisenberg_operator(w, h, t)
    return complex(np.trace(rho @ wt.conj().T @ v.conj().T @ wt @ v))


def squared_commutator(rho: np.ndarray, w: np.ndarray, v: np.ndarray, h: np.ndarray, t: float) -> float:
    """C(t) = <[W(t)^dag, V]^dag [W(t)^dag, V]>, evaluated directly."""
    if not (rho.shape == w.shape == v.shape == h.shape):
        raise ValueError("squared_commutator operands must share one dimension")
    wd = heisenberg_operator(w, h, t).conj().T
    c = wd @ v - v @ wd
    return float(np.real(np.trace(rho @ c.conj().T @ c)))


def _identity_on(ops: np.ndarray, support: Sequence[int], n: int) -> np.ndarray:
    """Inverse of tracing out ``support``: I_support (x) ops, qubits restored to their order."""
    rest = complement(support, n)
    batch = ops.shape[:-2]
    nb = len(batch)
    full = np.kron(np.eye(2 ** len(support)), ops.reshape((-1,) + ops.shape[-2:]))
    order = list(support) + list(rest)
    inv = list(np.argsort(order))
    t = full.reshape((-1,) + (2,) * (2 * n))
    t = t.transpose([0] + [1 + i for i in inv] + [1 + n + i for i in inv])
    return t.reshape(batch + (2**n, 2**n))


def _state_components(rho: np.ndarray, tol: float = 1e-14):
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    keep = w > tol
    return w[keep], v[:, keep].T


class AveragedOtoc:
    """Exact Pauli-group average of Re<O_A O_B(t) O_A O_B(t)> under a channel.

    O_B(t) is the Heisenberg-evolved operator (adjoint channel). Internally the
    2**n matrix units |i><psi| and I_A (x) tr_A|i><psi| are propagated forward
    for every eigenvector psi of rho; the Pauli sums collapse to traces.
    """

    def __init__(self, rho, support_a, support_b, include_identity: bool = True):
        rho = np.asarray(rho, dtype=complex)
        self.n = n = num_qubits(rho)
        self.a = as_mask(support_a, n)
        self.b = as_mask(support_b, n)
        _check_disjoint(self.a, self.b)
        self.include_identity = include_identity
        self.weights, self.vectors = _state_components(np.asarray(rho, dtype=complex))
        dim = 2**n
        eye = np.eye(dim, dtype=complex)
        stacks = []
        for psi in self.vectors:
            z0 = psi[None, :, None] * eye[:, None, :]  # |psi><i|
            y0 = _identity_on(partial_trace(np.conj(np.transpose(z0, (0, 2, 1))), complement(self.a, n), n), self.a, n)
            live = np.max(np.abs(y0), axis=(1, 2)) > 0
            stacks.append((y0[live], z0, np.flatnonzero(live)))
        self._blocks = stacks
        self.ops = np.concatenate([np.concatenate([y, z]) for y, z, _ in stacks])

    def value_from_evolved(self, evolved: np.ndarray) -> float:
        na, nb = 4 ** len(self.a), 4 ** len(self.b)
        da, db = 2 ** len(self.a), 2 ** len(self.b)
        reduced = partial_trace(evolved, self.b, self.n)
        s_full = 0.0 + 0.0j
        s_a_identity = 0.0
        start = 0
        for lam, (y0, z0, live) in zip(self.weights, self._blocks):
            y = reduced[start : start + len(y0)]
            z = reduced[start + len(y0) : start + len(y0) + len(z0)]
            start += len(y0) + len(z0)
            s_full += lam * da * db * np.einsum("iab,iba->", y, z[live])
            s_a_identity += lam * db * float(np.sum(np.abs(z) ** 2))
        if self.include_identity:
            return float(s_full.real) / (na * nb)
        return float(s_full.real - s_a_identity - na + 1) / ((na - 1) * (nb - 1))

    def series(self, propagator: Propagator, times: Sequence[float]) -> np.ndarray:
        return np.array([self.value_from_evolved(ev) for _, ev in propagator.evolve(self.ops, times)])


def _sampled_otoc(rho, a, b, propagator, t, include_identity, n_samples, seed):
    n = num_qubits(rho)
    labels_a = pauli_strings(a, n, include_identity)
    labels_b = pauli_strings(b, n, include_identity)
    rng = np.random.default_rng(seed)
    ia = rng.integers(len(labels_a), size=n_samples)
    ib = rng.integers(len(labels_b), size=n_samples)
    cache: dict[int, np.ndarray] = {}
    vals = np.empty(n_samples)
    for k, (i, j) in enumerate(zip(ia, ib)):
        if j not in cache:
            cache[j] = propagator.apply(pauli_matrix(labels_b[j]), t, adjoint=True)
        x = cache[j]
        p = pauli_matrix(labels_a[i])
        vals[k] = np.real(np.trace(rho @ p @ x @ p @ x))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))


def pauli_averaged_otoc(
    rho: np.ndarray,
    support_a: Sequence[int],
    support_b: Sequence[int],
    h: np.ndarray,
    t: float,
    include_identity: bool = True,
    method: str = "auto",
    n_samples: int = 1000,
    seed: int = 0,
    return_stderr: bool = False,
):
    """Average of Re<O_A O_B(t) O_A O_B(t)> over the Pauli groups on A and B.

    ``method="auto"`` enumerates exactly when 4**(|A|+|B|) <= 4096 and samples
    uniformly otherwise. With ``return_stderr`` a ``(value, stderr)`` pair is
    returned; the exact route reports stderr 0.
    """
    n = num_qubits(rho)
    a, b = as_mask(support_a, n), as_mask(support_b, n)
    _check_disjoint(a, b)
    if method == "auto":
        method = "exact" if 4 ** (len(a) + len(b)) <= EXACT_PAULI_LIMIT else "sample"
    prop = Propagator(LindbladSpec(h))
    if method == "exact":
        value, err = AveragedOtoc(rho, a, b, include_identity).series(prop, [t])[0], 0.0
    elif method == "sample":
        value, err = _sampled_otoc(rho, a, b, prop, t, include_identity, n_samples, seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    return (value, err) if return_stderr else value


def mutual_information(rho: np.ndarray, part_a: Sequence[int], part_b: Sequence[int]) -> float:
    """I(A:B) = S_A + S_B - S_AB in nats."""
    n = num_qubits(rho)
    a, b = as_mask(part_a, n), as_mask(part_b, n)
    _check_disjoint(a, b)
    s_a = von_neumann_entropy(partial_trace(rho, a, n))
    s_b = von_neumann_entropy(partial_trace(rho, b, n))
    s_ab = von_neumann_entropy(partial_trace(rho, sorted(a + b), n))
    mi = s_a + s_b - s_ab
    # round-off below zero is clipped; anything larger is left visible
    return max(mi, 0.0) if mi > -1e-12 else mi


def tripartite_mutual_information(rho, a, b, c) -> float:
    """I(A:B) + I(A:C) - I(A:BC)."""
    n = num_qubits(rho)
    a, b, c = as_mask(a, n), as_mask(b, n), as_mask(c, n)
    _check_disjoint(a, b, c)
    return (
        mutual_information(rho, a, b)
        + mutual_information(rho, a, c)
        - mutual_information(rho, a, sorted(b + c))
    )


def choi_state(u: np.ndarray) -> np.ndarray:
    """|U> = (I (x) U) sum_i |i>|i> / sqrt(d): input copy on qubits 0..n-1, output on n..2n-1."""
    d = u.shape[0]
    num_qubits(u)
    ket = np.kron(np.eye(d), u) @ np.eye(d).reshape(-1) / math.sqrt(d)
    return np.outer(ket, ket.conj())


def unitary_tmi(u: np.ndarray, a_in: Sequence[int], b_out: Sequence[int], c_out: Sequence[int]) -> float:
    """Operator TMI of a unitary: TMI of its Choi state with A on the input
    register and B, C on the output register (indices local to each register).

    For a pure state TMI vanishes whenever A, B, C cover every qubit, so the
    scrambling of a unitary is read off its Choi state instead.
    """
    n = num_qubits(u)
    a = as_mask(a_in, n)
    b, c = as_mask(b_out, n), as_mask(c_out, n)
    _check_disjoint(b, c)
    return tripartite_mutual_information(choi_state(u), a, [n + q for q in b], [n + q for q in c])


def bound_residual_series(rho0, part_a, part_b, h, times, include_identity: bool = True) -> np.ndarray:
    """I(t) - [O(0) - O(t)] for closed dynamics on a grid of times."""
    n = num_qubits(rho0)
    a, b = as_mask(part_a, n), as_mask(part_b, n)
    _check_disjoint(a, b)
    if sorted(a + b) != list(range(n)):
        raise ValueError("bound_residual requires A to be the complement of B")
    prop = Propagator(LindbladSpec(h))
    avg = AveragedOtoc(rho0, a, b, include_identity)
    times = list(times)
    o0 = avg.series(prop, [0.0])[0]
    o = avg.series(prop, times)
    mi = np.array([mutual_information(s, a, b) for _, s in prop.evolve(rho0, times)])
    return mi - (o0 - o)


def bound_residual(rho0, part_a, part_b, h, t: float, include_identity: bool = True) -> float:
    return float(bound_residual_series(rho0, part_a, part_b, h, [t], include_identity)[0])


def _commutator_norm_sum(x: np.ndarray, b: Sequence[int], n: int) -> np.ndarray:
    """Sum over the full Pauli group W on b of ||[X, W]||_2^2, for a stack of X."""
    nb, db = 4 ** len(b), 2 ** len(b)
    keep = complement(b, n)
    norm_x = np.sum(np.abs(x) ** 2, axis=(-2, -1))
    if keep:
        red = partial_trace(x, keep, n)
        norm_red = np.sum(np.abs(red) ** 2, axis=(-2, -1))
    else:
        norm_red = np.abs(np.trace(x, axis1=-2, axis2=-1)) ** 2
    return 2 * nb * norm_x - 2 * db * norm_red


class OpenBipartiteOtoc:
    """(1/2d) * average over Pauli V_A, W_B of ||[E^dag(V_A), W_B]||_2^2."""

    def __init__(self, n: int, support_a, support_b, include_identity: bool = True):
        self.n = n
        self.a = as_mask(support_a, n)
        self.b = as_mask(support_b, n)
        _check_disjoint(self.a, self.b)
        self.include_identity = include_identity
        labels = pauli_strings(self.a, n, include_identity=False)
        self.ops = np.array([pauli_matrix(s) for s in labels])

    def series(self, propagator: Propagator, times: Sequence[float]) -> np.ndarray:
        check_unital(propagator)
        na, nb = 4 ** len(self.a), 4 ** len(self.b)
        pairs = na * nb if self.include_identity else (na - 1) * (nb - 1)
        d = 2**self.n
        out = []
        for _, xs in propagator.evolve(self.ops, times, adjoint=True):
            out.append(float(np.sum(_commutator_norm_sum(xs, self.b, self.n))) / pairs / (2 * d))
        return np.array(out)


def check_unital(propagator: Propagator, t: float = 1.0, tol: float = 1e-8) -> float:
    d = propagator.spec.dim
    eye = np.eye(d, dtype=complex)
    resid = float(np.max(np.abs(propagator.apply(eye, t, adjoint=True) - eye)))
    if resid > tol:
        raise ContractViolation(f"adjoint channel is not unital (residual {resid:.2e})")
    return resid


def open_bipartite_otoc(
    spec: LindbladSpec,
    support_a: Sequence[int],
    support_b: Sequence[int],
    t: float,
    include_identity: bool = True,
    method: str = "auto",
    n_samples: int = 1000,
    seed: int = 0,
) -> float:
    n = num_qubits(spec.hamiltonian)
    a, b = as_mask(support_a, n), as_mask(support_b, n)
    _check_disjoint(a, b)
    prop = Propagator(spec)
    if method == "auto":
        method = "exact" if max(len(a), len(b)) <= OPEN_OTOC_EXACT_QUBITS else "sample"
    if method == "exact":
        return float(OpenBipartiteOtoc(n, a, b, include_identity).series(prop, [t])[0])
    if method != "sample":
        raise ValueError(f"unknown method {method!r}")
    check_unital(prop)
    labels_a = pauli_strings(a, n, include_identity)
    labels_b = pauli_strings(b, n, include_identity)
    rng = np.random.default_rng(seed)
    d = 2**n
    vals = []
    for i, j in zip(rng.integers(len(labels_a), size=n_samples), rng.integers(len(labels_b), size=n_samples)):
        x = prop.apply(pauli_matrix(labels_a[i]), t, adjoint=True)
        w = pauli_matrix(labels_b[j])
        c = x @ w - w @ x
        vals.append(np.sum(np.abs(c) ** 2) / (2 * d))
    return float(np.mean(vals))


def _eigen_groups(o: np.ndarray, tol: float = 1e-9):
    w, v = eig_hermitian(o)
    groups = np.concatenate([[0], np.cumsum(np.diff(w) > tol)])
    values, projectors = [], []
    for g in range(groups[-1] + 1):
        sel = groups == g
        values.append(float(np.mean(w[sel])))
        projectors.append(v[:, sel] @ v[:, sel].conj().T)
    return values, projectors


def wingflap_joint(rho, o, w, h, tau):
    """Joint outcome probabilities p[n, m] and the eigenvalues of O.

    Protocol: measure O, evolve under H for tau, apply W, evolve under -H for
    tau, measure O again.
    """
    if hermiticity_residual(o) > 1e-10:
        raise ValueError("measured observable must be Hermitian")
    if np.max(np.abs(w.conj().T @ w - np.eye(w.shape[0]))) > 1e-10:
        warnings.warn("wing-flap perturbation is not unitary", stacklevel=2)
    values, proj = _eigen_groups(o)
    wt = heisenberg_operator(w, h, tau)
    k = len(values)
    p = np.empty((k, k))
    for i, pn in enumerate(proj):
        post = wt @ pn @ rho @ pn @ wt.conj().T
        for j, pm in enumerate(proj):
            p[i, j] = np.real(np.trace(pm @ post))
    return np.array(values), p


def wingflap_distribution(rho, o, w, h, tau, tol: float = 1e-9, min_prob: float = 1e-14) -> list[tuple[float, float]]:
    """Distribution of dO = O_m - O_n as sorted ``(delta, probability)`` pairs.

    Differences within ``tol`` are merged; outcomes with probability at most
    ``min_prob`` are dropped.
    """
    values, p = wingflap_joint(rho, o, w, h, tau)
    deltas = values[None, :] - values[:, None]
    flat_d, flat_p = deltas.ravel(), p.ravel()
    order = np.argsort(flat_d, kind="stable")
    out: list[list[float]] = []
    for dlt, prob in zip(flat_d[order], flat_p[order]):
        if out and abs(dlt - out[-1][0]) <= tol:
            out[-1][1] += prob
        else:
            out.append([float(dlt), float(prob)])
    return [(d, p) for d, p in out if p > min_prob]


def characteristic_function(distribution, u: float) -> complex:
    """G(u) = sum_k p_k exp(-i u dO_k).

    With this sign G(u) equals the OTOC tr[rho W(tau)^dag V^dag W(tau) V] for
    V = exp(iuO) whenever rho commutes with O.
    """
    return complex(sum(p * np.exp(-1j * u * d) for d, p in distribution))


@dataclass(frozen=True)
class DecompositionRecord:
    time: float
    mutual_info_SE: float
    delta_s_exchange: float
    rel_entropy_env: float
    delta_s_system: float

    @property
    def residual(self) -> float:
        return self.mutual_info_SE + self.delta_s_exchange + self.rel_entropy_env - self.delta_s_system


def _log_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    if w[0] <= 1e-12:
        raise ValueError("equilibrium state must be full rank")
    return (v * np.log(w)) @ v.conj().T


def decomposition_from_state(model: JointModel, rho_joint: np.ndarray, s_sys0: float, t: float) -> DecompositionRecord:
    n = model.n_sys + model.n_env
    rho_s = partial_trace(rho_joint, model.sys_qubits, n)
    rho_e = partial_trace(rho_joint, model.env_qubits, n)
    eq = model.env_equilibrium
    s_s, s_e = von_neumann_entropy(rho_s), von_neumann_entropy(rho_e)
    mi = s_s + s_e - von_neumann_entropy(rho_joint)
    rel = relative_entropy(rho_e, eq)
    exch = float(np.real(np.trace((rho_e - eq) @ _log_psd(eq))))
    return DecompositionRecord(float(t), mi, exch, rel, s_s - s_sys0)


def entropy_decomposition(model: JointModel, rho_sys0: np.ndarray, t: float, rho_env0: np.ndarray | None = None) -> DecompositionRecord:
    """Terms of I(S:E) + dS_ex + D(rho_E || rho_E^eq) = dS_S at time t.

    dS_ex is tr[(rho_E(t) - rho_E^eq) ln rho_E^eq].
    """
    if rho_env0 is not None and np.max(np.abs(rho_env0 - model.env_equilibrium)) > 1e-12:
        raise ValueError("initial environment state must equal the equilibrium state")
    rho = evolve_joint(model, rho_sys0, t)
    return decomposition_from_state(model, rho, von_neumann_entropy(rho_sys0), t)
