"""Dense Hilbert-space primitives on n-qubit registers.

Operators are plain complex numpy arrays. Qubit 0 is the leftmost tensor
factor, so ``tensor_product(a, b)`` places ``a`` on qubit 0. Entropies use
the natural logarithm.
"""
from __future__ import annotations

import itertools
import math
from functools import reduce
from typing import Iterable, NamedTuple, Sequence

import numpy as np

MAX_QUBITS = 12
EIG_CLIP = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_LETTERS = "IXYZ"
_SINGLE = {"I": I2, "X": X, "Y": Y, "Z": Z}


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def num_qubits(op: np.ndarray) -> int:
    """Number of qubits for a square operator (or state vector) of dimension 2**n."""
    dim = op.shape[-1]
    n = dim.bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    if n > MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds the supported maximum of {MAX_QUBITS}")
    return n


def hermiticity_residual(op: np.ndarray) -> float:
    return float(np.max(np.abs(op - op.conj().T))) if op.size else 0.0


def is_hermitian(op: np.ndarray, tol: float = 1e-12) -> bool:
    return hermiticity_residual(op) < tol


def check_density_matrix(rho: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Validate a density matrix and return it as a complex array.

    Raises ``ValueError`` when the trace, Hermiticity or positivity contract
    is broken.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    num_qubits(rho)
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"density matrix trace {np.trace(rho).real:.3e} != 1")
    if hermiticity_residual(rho) > 1e-12:
        raise ValueError("density matrix is not Hermitian")
    if np.linalg.eigvalsh(rho)[0] < -tol:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def pure_state(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex).ravel()
    ket = ket / np.linalg.norm(ket)
    return np.outer(ket, ket.conj())


def basis_state(bits: Sequence[int] | str) -> np.ndarray:
    """Projector onto the computational basis state ``|b0 b1 ...>``."""
    bits = [int(b) for b in bits]
    idx = int("".join(map(str, bits)), 2)
    rho = np.zeros((2 ** len(bits),) * 2, dtype=complex)
    rho[idx, idx] = 1.0
    return rho


def as_mask(indices: Iterable[int], n: int) -> tuple[int, ...]:
    """Normalise a subsystem mask to a sorted tuple of distinct qubit indices."""
    mask = tuple(sorted(int(i) for i in indices))
    if not mask:
        raise ValueError("subsystem mask must be non-empty")
    if len(set(mask)) != len(mask):
        raise ValueError(f"subsystem mask {mask} has repeated indices")
    if mask[0] < 0 or mask[-1] >= n:
        raise IndexError(f"subsystem mask {mask} out of range for {n} qubits")
    return mask


def complement(mask: Sequence[int], n: int) -> tuple[int, ...]:
    return tuple(i for i in range(n) if i not in set(mask))


def tensor_product(*ops: np.ndarray) -> np.ndarray:
    return reduce(np.kron, ops)


def partial_trace(rho: np.ndarray, keep: Sequence[int], n: int | None = None) -> np.ndarray:
    """Trace out every qubit not in ``keep``.

    Works for any operator (not only states) and for stacks of operators with
    leading batch axes. Kept qubits stay in ascending order.
    """
    rho = np.asarray(rho)
    if n is None:
        n = num_qubits(rho)
    keep = as_mask(keep, n)
    if len(keep) == n:
        return rho
    traced = complement(keep, n)
    batch = rho.shape[:-2]
    nb = len(batch)
    t = rho.reshape(batch + (2,) * (2 * n))
    row = [nb + q for q in keep] + [nb + q for q in traced]
    col = [nb + n + q for q in keep] + [nb + n + q for q in traced]
    t = t.transpose(list(range(nb)) + row + col)
    dk, dt = 2 ** len(keep), 2 ** len(traced)
    t = t.reshape(batch + (dk, dt, dk, dt))
    return np.trace(t, axis1=-3, axis2=-1)


def embed(op: np.ndarray, support: Sequence[int], n: int) -> np.ndarray:
    """Place ``op`` (acting on the qubits of ``support`` in order) into n qubits."""
    support = as_mask(support, n)
    k = len(support)
    if op.shape != (2**k, 2**k):
        raise ValueError(f"operator of shape {op.shape} does not fit support {support}")
    rest = complement(support, n)
    full = np.kron(op, np.eye(2 ** len(rest), dtype=complex))
    order = list(support) + list(rest)
    inv = np.argsort(order)
    t = full.reshape((2,) * (2 * n))
    t = t.transpose(list(inv) + [n + i for i in inv])
    return t.reshape(2**n, 2**n)


def eig_hermitian(h: np.ndarray, tol: float = 1e-10) -> Spectrum:
    h = np.asarray(h, dtype=complex)
    if hermiticity_residual(h) > tol:
        raise ValueError("eig_hermitian requires a Hermitian operator")
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    return Spectrum(w, v)


def unitary_exp(h: np.ndarray, t: float, spectrum: Spectrum | None = None) -> np.ndarray:
    """Return exp(-i h t)."""
    spec = spectrum if spectrum is not None else eig_hermitian(h)
    v = spec.eigenvectors
    return (v * np.exp(-1j * spec.eigenvalues * t)) @ v.conj().T


def _entropy_from_eigs(p: np.ndarray) -> float:
    p = p[p > EIG_CLIP]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy in nats."""
    rho = np.asarray(rho)
    return _entropy_from_eigs(np.linalg.eigvalsh((rho + rho.conj().T) / 2))


def relative_entropy(rho: np.ndarray, sigma: np.ndarray, tol: float = 1e-10) -> float:
    """Quantum relative entropy D(rho || sigma) in nats.

    Returns ``math.inf`` when rho has weight outside the support of sigma.
    """
    rho = (rho + rho.conj().T) / 2
    sigma = (sigma + sigma.conj().T) / 2
    s, v = np.linalg.eigh(sigma)
    pops = np.real(np.einsum("ki,kl,li->i", v.conj(), rho, v))
    kernel = s <= EIG_CLIP
    if np.any(pops[kernel] > tol):
        return math.inf
    cross = float(np.sum(pops[~kernel] * np.log(s[~kernel])))
    return max(-von_neumann_entropy(rho) - cross, 0.0)


def pauli_matrix(letters: str) -> np.ndarray:
    letters = letters.upper()
    if not letters or any(c not in PAULI_LETTERS for c in letters):
        raise ValueError(f"invalid Pauli string {letters!r}")
    return tensor_product(*(_SINGLE[c] for c in letters))


def pauli_strings(support: Sequence[int], n: int, include_identity: bool = True) -> list[str]:
    """Labels of the Pauli group on ``support``, as full n-letter strings."""
    support = as_mask(support, n)
    out = []
    for combo in itertools.product(PAULI_LETTERS, repeat=len(support)):
        if not include_identity and set(combo) == {"I"}:
            continue
        letters = ["I"] * n
        for q, c in zip(support, combo):
            letters[q] = c
        out.append("".join(letters))
    return out


def enumerate_pauli_group(support: Sequence[int], n: int) -> list[np.ndarray]:
    """All 4**|support| Pauli strings on ``support`` materialised on n qubits."""
    return [pauli_matrix(s) for s in pauli_strings(support, n)]
