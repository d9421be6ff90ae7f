"""Slow, transparent reference implementations used only by the tests.

Nothing here calls the package's own partial trace, Pauli averages or
propagators; each oracle is written from its textbook definition.
"""
import itertools

import numpy as np
import scipy.linalg

P1 = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(letters):
    out = np.array([[1.0 + 0j]])
    for c in letters:
        out = np.kron(out, P1[c])
    return out


def paulis_on(support, n):
    """Every Pauli string acting on `support`, identity elsewhere."""
    out = []
    for combo in itertools.product("IXYZ", repeat=len(support)):
        letters = ["I"] * n
        for q, c in zip(support, combo):
            letters[q] = c
        out.append(pauli(letters))
    return out


def partial_trace_loop(rho, keep, n):
    """Explicit index sum over the traced qubits."""
    keep = list(keep)
    traced = [q for q in range(n) if q not in keep]
    dk = 2 ** len(keep)
    out = np.zeros((dk, dk), dtype=complex)
    for i in range(2**n):
        for j in range(2**n):
            bi = [(i >> (n - 1 - q)) & 1 for q in range(n)]
            bj = [(j >> (n - 1 - q)) & 1 for q in range(n)]
            if any(bi[q] != bj[q] for q in traced):
                continue
            ki = int("".join(str(bi[q]) for q in keep), 2)
            kj = int("".join(str(bj[q]) for q in keep), 2)
            out[ki, kj] += rho[i, j]
    return out


def heisenberg(w, h, t):
    u = scipy.linalg.expm(-1j * h * t)
    return u.conj().T @ w @ u


def entropy(rho):
    p = np.linalg.eigvalsh(rho)
    p = p[p > 1e-12]
    return float(-np.sum(p * np.log(p)))


def mutual_info(rho, a, b, n):
    ab = sorted(list(a) + list(b))
    return (
        entropy(partial_trace_loop(rho, a, n))
        + entropy(partial_trace_loop(rho, b, n))
        - entropy(partial_trace_loop(rho, ab, n))
    )


def pauli_average_otoc(rho, a, b, h, t, n, include_identity=True):
    """Double loop over materialised Pauli groups with expm-based evolution."""
    ops_a = paulis_on(a, n)
    ops_b = paulis_on(b, n)
    if not include_identity:
        ops_a, ops_b = ops_a[1:], ops_b[1:]
    vals = []
    for q in ops_b:
        qt = heisenberg(q, h, t)
        for p in ops_a:
            vals.append(np.real(np.trace(rho @ p @ qt @ p @ qt)))
    return float(np.mean(vals))


def lindblad_rhs(rho, h, jumps, gamma):
    out = -1j * (h @ rho - rho @ h)
    for L in jumps:
        k = L.conj().T @ L
        out += gamma * (L @ rho @ L.conj().T - 0.5 * (k @ rho + rho @ k))
    return out


def lindblad_expm(rho, h, jumps, gamma, t):
    """Column-stacking superoperator exponential, built independently."""
    d = h.shape[0]
    eye = np.eye(d)
    # column stacking: vec(A X B) = (B^T kron A) vec(X)
    sup = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for L in jumps:
        k = L.conj().T @ L
        sup += gamma * (np.kron(L.conj(), L) - 0.5 * (np.kron(eye, k) + np.kron(k.T, eye)))
    vec = rho.reshape(-1, order="F")
    return (scipy.linalg.expm(sup * t) @ vec).reshape(d, d, order="F")
