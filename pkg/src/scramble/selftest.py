"""Fast oracle checks behind ``scramble selftest``.

Each check compares a library routine against a closed-form or independently
computed value. The full pytest suite is more thorough; this one runs in a few
seconds on an installed package with no test dependencies.
"""
from __future__ import annotations

import itertools
import math
from typing import Callable

import numpy as np

from . import core, diagnostics, dynamics, ensemble, models
from .core import I2, X, Y, Z

Check = Callable[[], float]


def _bell_reduction() -> float:
    bell = core.pure_state(np.array([1, 0, 0, 1]) / math.sqrt(2))
    return np.max(np.abs(core.partial_trace(bell, [0]) - I2 / 2))


def _ghz_reduction() -> float:
    ghz = core.pure_state(np.eye(8)[0] + np.eye(8)[7])
    expect = np.zeros((4, 4))
    expect[0, 0] = expect[3, 3] = 0.5
    return np.max(np.abs(core.partial_trace(ghz, [0, 1]) - expect))


def _exp_x() -> float:
    t = 0.7
    return np.max(np.abs(core.unitary_exp(X, t) - (math.cos(t) * I2 - 1j * math.sin(t) * X)))


def _entropy_diag() -> float:
    expect = -0.75 * math.log(0.75) - 0.25 * math.log(0.25)
    return abs(core.von_neumann_entropy(np.diag([0.75, 0.25])) - expect)


def _relative_entropy_pure() -> float:
    return abs(core.relative_entropy(np.diag([1.0, 0.0]), I2 / 2) - math.log(2))


def _pauli_squares() -> float:
    return max(
        np.max(np.abs(core.pauli_matrix("".join(p)) @ core.pauli_matrix("".join(p)) - np.eye(4)))
        for p in itertools.product("IXYZ", repeat=2)
    )


def _majorana_algebra() -> float:
    psi = [models.majorana(i, 6) for i in range(1, 7)]
    return max(
        np.max(np.abs(psi[i] @ psi[j] + psi[j] @ psi[i] - (i == j) * np.eye(8)))
        for i in range(6)
        for j in range(6)
    )


def _syk_n4() -> float:
    spec = models.SykSpec(4, seed=3)
    c = models.sample_syk_couplings(spec)
    j = c[(1, 2, 3, 4)]
    w = np.linalg.eigvalsh(models.build_syk(spec, c))
    return np.max(np.abs(np.sort(w) - np.sort([-abs(j) / 4] * 2 + [abs(j) / 4] * 2)))


def _lmg_n2() -> float:
    w = np.linalg.eigvalsh(models.build_lmg(models.LmgSpec(2)))
    return np.max(np.abs(w - [-2, -1, 1, 2]))


def _otoc_single_qubit() -> float:
    t = 0.37
    return abs(diagnostics.otoc(np.diag([1.0, 0.0]), X, X, Z, t) - np.exp(4j * t))


def _commutator_identity() -> float:
    rng = np.random.default_rng(11)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = (a + a.conj().T) / 2
    w, v = core.pauli_matrix("XIZ"), core.pauli_matrix("IYY")
    rho = core.basis_state("010")
    f = diagnostics.otoc(rho, w, v, h, 0.9)
    return abs(diagnostics.squared_commutator(rho, w, v, h, 0.9) - 2 * (1 - f.real))


def _ghz_mutual_info() -> float:
    ghz = core.pure_state(np.eye(8)[0] + np.eye(8)[7])
    return abs(diagnostics.mutual_information(ghz, [0], [1, 2]) - 2 * math.log(2))


def _dephasing_decay() -> float:
    g, t = 0.3, 1.7
    spec = dynamics.LindbladSpec(np.zeros((2, 2)), [Z], g)
    rho = dynamics.evolve_lindblad(np.full((2, 2), 0.5, dtype=complex), spec, t)
    return abs(rho[0, 1] - 0.5 * math.exp(-2 * g * t))


def _adjoint_duality() -> float:
    rng = np.random.default_rng(5)
    h = models.build_lmg(models.LmgSpec(3))
    spec = dynamics.LindbladSpec(h, dynamics.dephasing_jumps("computational", h, 3), 0.4)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    w = core.pauli_matrix("XYZ")
    lhs = np.trace(w @ dynamics.evolve_lindblad(rho, spec, 1.3))
    rhs = np.trace(dynamics.heisenberg_adjoint(w, spec, 1.3) @ rho)
    return abs(lhs - rhs)


def _pauli_average_brute_force() -> float:
    rng = np.random.default_rng(2)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = (a + a.conj().T) / 2
    rho = core.basis_state("001")
    t = 0.8
    fast = diagnostics.pauli_averaged_otoc(rho, [0], [1, 2], h, t)
    ops_a = core.enumerate_pauli_group([0], 3)
    ops_b = [diagnostics.heisenberg_operator(p, h, t) for p in core.enumerate_pauli_group([1, 2], 3)]
    slow = np.mean([np.real(np.trace(rho @ p @ q @ p @ q)) for p in ops_a for q in ops_b])
    return abs(fast - slow)


def _decomposition() -> float:
    h = models.build_lmg(models.LmgSpec(2))
    model = dynamics.build_joint_dephasing_model(2, h, 0.5)
    rho = core.pure_state(np.array([1, 1, 0, 1j]) / math.sqrt(3))
    return max(abs(diagnostics.entropy_decomposition(model, rho, t).residual) for t in (1.0, 5.0, 10.0))


def _wingflap() -> float:
    rho = np.diag([0.3, 0.7]).astype(complex)
    dist = dict(diagnostics.wingflap_distribution(rho, Z, X, np.zeros((2, 2)), 1.0))
    return abs(dist[-2.0] - 0.3) + abs(dist[2.0] - 0.7)


def _seed_determinism() -> float:
    s = [ensemble.realization_seed(42, i) for i in range(1000)]
    same = s == [ensemble.realization_seed(42, i) for i in range(1000)]
    return 0.0 if same and len(set(s)) == len(s) else 1.0


CHECKS: dict[str, tuple[Check, float]] = {
    "partial trace of a Bell pair": (_bell_reduction, 1e-12),
    "partial trace of GHZ": (_ghz_reduction, 1e-12),
    "exp(-iXt) closed form": (_exp_x, 1e-12),
    "entropy of diag(0.75, 0.25)": (_entropy_diag, 1e-12),
    "D(|0><0| || I/2) = ln 2": (_relative_entropy_pure, 1e-12),
    "Pauli strings square to identity": (_pauli_squares, 1e-12),
    "Majorana anticommutators (N=6)": (_majorana_algebra, 1e-12),
    "SYK N=4 spectrum": (_syk_n4, 1e-10),
    "LMG N=2 spectrum": (_lmg_n2, 1e-10),
    "single-qubit OTOC": (_otoc_single_qubit, 1e-12),
    "C(t) = 2(1 - Re F)": (_commutator_identity, 1e-10),
    "GHZ mutual information": (_ghz_mutual_info, 1e-10),
    "Z dephasing coherence decay": (_dephasing_decay, 1e-10),
    "adjoint channel duality": (_adjoint_duality, 1e-9),
    "Pauli average vs brute force": (_pauli_average_brute_force, 1e-10),
    "entropy decomposition residual": (_decomposition, 1e-8),
    "wing-flap single qubit": (_wingflap, 1e-12),
    "realization seeds": (_seed_determinism, 0.5),
}


def run_selftest(echo: Callable[[str], None] = print) -> bool:
    ok = True
    for name, (fn, tol) in CHECKS.items():
        try:
            err = float(fn())
            passed = err <= tol
            detail = f"error {err:.2e} (tol {tol:.0e})"
        except Exception as exc:  # report and keep going
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        ok &= passed
        echo(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return ok
