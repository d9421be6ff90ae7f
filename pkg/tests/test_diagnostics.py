import math
import warnings

import numpy as np
import pytest
import scipy.linalg
from scipy.stats import unitary_group

from scramble import diagnostics as dg
from scramble.core import X, Y, Z, basis_state, embed, pauli_matrix, pure_state
from scramble.dynamics import JointModel, LindbladSpec, Propagator, build_joint_dephasing_model, dephasing_jumps
from scramble.models import LmgSpec, SykSpec, all_up_state, build_lmg, build_syk, neel_state

from conftest import random_density, random_hermitian, random_ket
from oracles import heisenberg, mutual_info, pauli_average_otoc, paulis_on

LN2 = math.log(2)


# --- OTOC and squared commutator ---------------------------------------------

def test_otoc_disjoint_paulis_at_zero(rng):
    h = random_hermitian(rng, 8)
    rho = random_density(rng, 8)
    assert abs(dg.otoc(rho, pauli_matrix("XII"), pauli_matrix("IZY"), h, 0.0) - 1) < 1e-12


@pytest.mark.parametrize("t", [0.0, 0.2, 1.1, 3.7])
def test_otoc_single_qubit_closed_form(t):
    # W(t) = cos(2t) X - sin(2t) Y, so F(t) = exp(4it)
    rho = np.diag([1.0, 0.0]).astype(complex)
    assert abs(dg.otoc(rho, X, X, Z, t) - np.exp(4j * t)) < 1e-12
    assert np.allclose(dg.heisenberg_operator(X, Z, t), math.cos(2 * t) * X - math.sin(2 * t) * Y)
    assert abs(dg.squared_commutator(rho, X, X, Z, t) - 2 * (1 - math.cos(4 * t))) < 1e-12


def test_squared_commutator_zero_for_disjoint(rng):
    h = random_hermitian(rng, 4)
    rho = random_density(rng, 4)
    assert abs(dg.squared_commutator(rho, pauli_matrix("XI"), pauli_matrix("IY"), h, 0.0)) < 1e-12


@pytest.mark.parametrize("seed", range(4))
def test_commutator_relation_on_syk(seed):
    h = build_syk(SykSpec(8, seed=seed))
    rho = all_up_state(4)
    w, v = pauli_matrix("ZIIX"), pauli_matrix("IYII")
    for t in (0.5, 2.0, 8.0):
        f = dg.otoc(rho, w, v, h, t)
        assert abs(f) <= 1 + 1e-8
        assert abs(dg.squared_commutator(rho, w, v, h, t) - 2 * (1 - f.real)) < 1e-10


def test_otoc_dimension_mismatch():
    with pytest.raises(ValueError):
        dg.otoc(np.eye(2) / 2, X, np.eye(4), Z, 1.0)
    with pytest.raises(ValueError):
        dg.squared_commutator(np.eye(2) / 2, X, np.eye(4), Z, 1.0)


# --- Pauli-averaged OTOC ----------------------------------------------------

@pytest.mark.parametrize("include_identity", [True, False])
def test_pauli_average_unity_at_zero(rng, include_identity):
    h = random_hermitian(rng, 16)
    rho = random_density(rng, 16)
    assert abs(dg.pauli_averaged_otoc(rho, [0, 2], [1], h, 0.0, include_identity) - 1) < 1e-12


@pytest.mark.parametrize("a,b", [([0], [1, 2]), ([1], [0]), ([2], [0, 1]), ([0, 2], [1])])
@pytest.mark.parametrize("include_identity", [True, False])
def test_pauli_average_matches_double_loop(rng, a, b, include_identity):
    h = random_hermitian(rng, 8)
    rho = random_density(rng, 8, rank=2)
    for t in (0.4, 2.5):
        fast = dg.pauli_averaged_otoc(rho, a, b, h, t, include_identity)
        slow = pauli_average_otoc(rho, a, b, h, t, 3, include_identity)
        assert abs(fast - slow) < 1e-10


def test_pauli_average_open_dynamics_matches_adjoint_loop(rng):
    h = random_hermitian(rng, 8)
    jumps = dephasing_jumps("computational", h, 3)
    spec = LindbladSpec(h, jumps, 0.3)
    rho = random_density(rng, 8)
    t = 1.4
    # adjoint Liouvillian in row-major vec, built by hand
    d = 8
    eye = np.eye(d)
    lv_adj = 1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for L in jumps:
        k = L.conj().T @ L
        lv_adj += 0.3 * (np.kron(L.conj().T, L.T) - 0.5 * (np.kron(k, eye) + np.kron(eye, k.T)))
    prop_adj = scipy.linalg.expm(lv_adj * t)
    vals = []
    for q in paulis_on([1, 2], 3):
        qt = (prop_adj @ q.reshape(-1)).reshape(d, d)
        for p in paulis_on([0], 3):
            vals.append(np.real(np.trace(rho @ p @ qt @ p @ qt)))
    avg = dg.AveragedOtoc(rho, [0], [1, 2])
    assert abs(avg.series(Propagator(spec), [t])[0] - np.mean(vals)) < 1e-10


def test_pauli_average_sampling_agrees_with_exact(rng):
    h = random_hermitian(rng, 8)
    rho = basis_state("011")
    exact = dg.pauli_averaged_otoc(rho, [0], [1, 2], h, 1.3)
    est, err = dg.pauli_averaged_otoc(rho, [0], [1, 2], h, 1.3, method="sample", n_samples=10_000, seed=4, return_stderr=True)
    assert err > 0
    assert abs(est - exact) < 3 * err


def test_pauli_average_overlap_rejected(rng):
    with pytest.raises(ValueError):
        dg.pauli_averaged_otoc(np.eye(4) / 4, [0, 1], [1], np.eye(4), 1.0)


def test_pauli_average_syk12_decays_and_plateaus():
    h = build_syk(SykSpec(12, seed=5))
    times = np.linspace(0, 10, 21)
    o = dg.AveragedOtoc(all_up_state(6), [0], range(1, 6)).series(Propagator(LindbladSpec(h)), times)
    assert abs(o[0] - 1) < 1e-12
    assert o[-1] < 0.9
    late = o[times > 5]
    assert np.ptp(late) < 0.1


# --- mutual information and TMI --------------------------------------------

def test_mutual_information_examples(rng):
    a, b = random_density(rng, 2), random_density(rng, 4)
    assert abs(dg.mutual_information(np.kron(a, b), [0], [1, 2])) < 1e-12
    bell = pure_state(np.array([1, 0, 0, 1]))
    assert abs(dg.mutual_information(bell, [0], [1]) - 2 * LN2) < 1e-12
    ghz = pure_state(np.eye(8)[0] + np.eye(8)[7])
    assert abs(dg.mutual_information(ghz, [0], [1, 2]) - 2 * LN2) < 1e-12


def test_mutual_information_matches_oracle(rng):
    rho = random_density(rng, 16, rank=3)
    assert abs(dg.mutual_information(rho, [1], [0, 3]) - mutual_info(rho, [1], [0, 3], 4)) < 1e-10


def test_mutual_information_overlap_rejected():
    with pytest.raises(ValueError):
        dg.mutual_information(np.eye(4) / 4, [0], [0, 1])


def test_tmi_examples(rng):
    prod = np.kron(np.kron(random_density(rng, 2), random_density(rng, 2)), random_density(rng, 4))
    assert abs(dg.tripartite_mutual_information(prod, [0], [1], [2, 3])) < 1e-10
    ghz = pure_state(np.eye(8)[0] + np.eye(8)[7])
    assert abs(dg.tripartite_mutual_information(ghz, [0], [1], [2])) < 1e-12
    with pytest.raises(ValueError):
        dg.tripartite_mutual_information(prod, [0], [0], [1])


def test_tmi_of_pure_state_on_full_register_vanishes(rng):
    # I(A:B) + I(A:C) = 2 S_A = I(A:BC) whenever ABC is pure
    psi = pure_state(random_ket(rng, 16))
    assert abs(dg.tripartite_mutual_information(psi, [0], [1], [2, 3])) < 1e-10


def test_unitary_tmi_negative_for_haar():
    vals = [dg.unitary_tmi(unitary_group.rvs(16, random_state=s), [0], [1], [2, 3]) for s in range(10)]
    assert all(v < -0.1 for v in vals)


def test_unitary_tmi_zero_for_product_unitary():
    us = [unitary_group.rvs(2, random_state=s) for s in range(4)]
    u = np.kron(np.kron(us[0], us[1]), np.kron(us[2], us[3]))
    assert abs(dg.unitary_tmi(u, [0], [1], [2, 3])) < 1e-10


def test_choi_state_is_maximally_entangled():
    u = unitary_group.rvs(4, random_state=1)
    c = dg.choi_state(u)
    assert abs(np.trace(c) - 1) < 1e-12
    assert abs(dg.mutual_information(c, [0, 1], [2, 3]) - 4 * LN2) < 1e-10


# --- bound residual ----------------------------------------------------------

def test_bound_residual_at_zero_is_initial_mi(rng):
    h = random_hermitian(rng, 8)
    rho = random_density(rng, 8)
    assert abs(dg.bound_residual(rho, [0], [1, 2], h, 0.0) - dg.mutual_information(rho, [0], [1, 2])) < 1e-12


def test_bound_residual_matches_oracles(rng):
    h = random_hermitian(rng, 8)
    rho = pure_state(np.kron(np.kron(random_ket(rng, 2), random_ket(rng, 2)), random_ket(rng, 2)))
    t = 1.9
    u = scipy.linalg.expm(-1j * h * t)
    expect = mutual_info(u @ rho @ u.conj().T, [0], [1, 2], 3) - (
        pauli_average_otoc(rho, [0], [1, 2], h, 0.0, 3) - pauli_average_otoc(rho, [0], [1, 2], h, t, 3)
    )
    assert abs(dg.bound_residual(rho, [0], [1, 2], h, t) - expect) < 1e-10


def test_bound_requires_complement():
    with pytest.raises(ValueError):
        dg.bound_residual(np.eye(8) / 8, [0], [1], np.eye(8), 1.0)


@pytest.mark.parametrize("n", [4, 6])
def test_bound_holds_for_lmg_neel(n):
    h = build_lmg(LmgSpec(n))
    res = dg.bound_residual_series(neel_state(n), [0], range(1, n), h, np.linspace(0, 10, 51))
    assert res.min() >= -1e-9


@pytest.mark.xfail(strict=True, reason="the all-up state is an LMG eigenstate: I(t) stays 0 while the average OTOC decays")
def test_bound_for_lmg_all_up():
    h = build_lmg(LmgSpec(4))
    res = dg.bound_residual_series(all_up_state(4), [0], [1, 2, 3], h, np.linspace(0, 10, 51))
    assert res.min() >= -1e-9


# --- open bipartite OTOC ------------------------------------------------------

def _commutator_average(h, a, b, t, n, include_identity=True):
    ops_a, ops_b = paulis_on(a, n), paulis_on(b, n)
    if not include_identity:
        ops_a, ops_b = ops_a[1:], ops_b[1:]
    d = 2**n
    vals, otocs = [], []
    for p in ops_a:
        pt = heisenberg(p, h, t)
        for q in ops_b:
            c = pt @ q - q @ pt
            vals.append(np.sum(np.abs(c) ** 2) / (2 * d))
            otocs.append(1 - np.real(np.trace(pt @ q @ pt @ q)) / d)
    return float(np.mean(vals)), float(np.mean(otocs))


@pytest.mark.parametrize("include_identity", [True, False])
def test_open_otoc_closed_limit(rng, include_identity):
    h = random_hermitian(rng, 8)
    spec = LindbladSpec(h)
    for t in (0.0, 0.7, 3.0):
        val = dg.open_bipartite_otoc(spec, [0], [1, 2], t, include_identity)
        comm, otoc = _commutator_average(h, [0], [1, 2], t, 3, include_identity)
        assert abs(val - comm) < 1e-10
        # ||[P, Q]||^2 / 2d = 1 - Re tr[P Q P Q] / d for Pauli P, Q
        assert abs(val - otoc) < 1e-10


def test_open_otoc_zero_at_start_and_nonnegative(rng):
    h = random_hermitian(rng, 16)
    spec = LindbladSpec(h, dephasing_jumps("computational", h, 4), 0.4)
    values = dg.OpenBipartiteOtoc(4, [0], [2, 3]).series(Propagator(spec), np.linspace(0, 5, 11))
    assert abs(values[0]) < 1e-12
    assert np.all(values >= -1e-12)


def test_open_otoc_sampled_close_to_exact(rng):
    h = random_hermitian(rng, 8)
    spec = LindbladSpec(h, dephasing_jumps("computational", h, 3), 0.2)
    exact = dg.open_bipartite_otoc(spec, [0], [1, 2], 1.5)
    sampled = dg.open_bipartite_otoc(spec, [0], [1, 2], 1.5, method="sample", n_samples=4000, seed=2)
    assert abs(sampled - exact) < 0.05


def test_non_unital_adjoint_is_reported():
    class Leaky:
        spec = LindbladSpec(np.zeros((2, 2)))

        def apply(self, op, t, adjoint=False):
            return 0.5 * op

    with pytest.raises(dg.ContractViolation):
        dg.check_unital(Leaky())


# --- wing-flap ------------------------------------------------------------------

def test_wingflap_point_mass_when_everything_commutes(rng):
    o = np.diag([1.0, 2.0, 2.0, 3.0]).astype(complex)
    h = np.diag(rng.normal(size=4)).astype(complex)
    w = np.diag(np.exp(1j * rng.normal(size=4)))
    rho = random_density(rng, 4)
    assert dg.wingflap_distribution(rho, o, w, h, 1.3) == [(0.0, pytest.approx(1.0, abs=1e-12))]


def test_wingflap_single_qubit():
    rho = np.diag([0.25, 0.75]).astype(complex)
    dist = dg.wingflap_distribution(rho, Z, X, np.zeros((2, 2)), 0.8)
    assert [d for d, _ in dist] == [-2.0, 2.0]
    assert [p for _, p in dist] == pytest.approx([0.25, 0.75], abs=1e-14)


def _commuting_instance(rng, dim=8):
    o = random_hermitian(rng, dim)
    v = np.linalg.eigh(o)[1]
    rho = v @ np.diag(rng.dirichlet(np.ones(dim))) @ v.conj().T
    w = unitary_group.rvs(dim, random_state=int(rng.integers(1 << 31)))
    return rho, o, w, random_hermitian(rng, dim)


@pytest.mark.parametrize("u", [0.1, 0.5, 1.0])
def test_characteristic_function_is_otoc(rng, u):
    rho, o, w, h = _commuting_instance(rng)
    dist = dg.wingflap_distribution(rho, o, w, h, 0.9)
    assert sum(p for _, p in dist) == pytest.approx(1.0, abs=1e-10)
    v = scipy.linalg.expm(1j * u * o)
    assert abs(dg.characteristic_function(dist, u) - dg.otoc(rho, w, v, h, 0.9)) < 1e-10


def test_wingflap_errors_and_warnings(rng):
    with pytest.raises(ValueError):
        dg.wingflap_distribution(np.eye(2) / 2, np.array([[0, 1], [0, 0]]), X, Z, 1.0)
    with pytest.warns(UserWarning):
        dg.wingflap_distribution(np.eye(2) / 2, Z, 2 * X, Z, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        dg.wingflap_distribution(np.eye(2) / 2, Z, X, Z, 1.0)


# --- entropy decomposition --------------------------------------------------------

def test_decomposition_trivial_cases(rng):
    h = random_hermitian(rng, 4)
    rho = pure_state(random_ket(rng, 4))
    rec = dg.entropy_decomposition(build_joint_dephasing_model(2, h, 0.5), rho, 0.0)
    for v in (rec.mutual_info_SE, rec.delta_s_exchange, rec.rel_entropy_env, rec.delta_s_system):
        assert abs(v) < 1e-12
    model0 = build_joint_dephasing_model(2, h, 0.0)
    for t in (1.0, 4.0):
        rec = dg.entropy_decomposition(model0, rho, t)
        for v in (rec.mutual_info_SE, rec.delta_s_exchange, rec.rel_entropy_env, rec.delta_s_system):
            assert abs(v) < 1e-10


@pytest.mark.parametrize("t", [1.0, 5.0, 10.0])
def test_decomposition_identity_dephasing_model(rng, t):
    h = random_hermitian(rng, 4)
    rho = pure_state(random_ket(rng, 4))
    rec = dg.entropy_decomposition(build_joint_dephasing_model(2, h, 0.5), rho, t)
    assert abs(rec.residual) < 1e-8
    assert rec.mutual_info_SE > 1e-3
    assert rec.delta_s_system > 1e-3


def test_decomposition_identity_generic_environment(rng):
    # thermal environment and a generic coupling make every term non-zero
    h_env = random_hermitian(rng, 4)
    w, v = np.linalg.eigh(h_env)
    env_eq = (v * np.exp(-w) / np.exp(-w).sum()) @ v.conj().T
    model = JointModel(2, 2, random_hermitian(rng, 16), env_eq)
    rho = pure_state(random_ket(rng, 4))
    for t in (0.3, 1.0, 5.0):
        rec = dg.entropy_decomposition(model, rho, t, rho_env0=env_eq)
        assert abs(rec.residual) < 1e-8
        assert abs(rec.delta_s_exchange) > 1e-4 and rec.rel_entropy_env > 1e-4


def test_decomposition_rejects_wrong_environment(rng):
    model = build_joint_dephasing_model(2, random_hermitian(rng, 4), 0.5)
    with pytest.raises(ValueError):
        dg.entropy_decomposition(model, np.eye(4) / 4, 1.0, rho_env0=np.diag([1.0, 0, 0, 0]))
