import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hamtrace.core import (BoundaryData, ConfigError, builtin_path, constant_path,
                           function_path, standard_J, zero_path)
from hamtrace.oracle import (characteristic, eigenvalues_adaptive, reciprocal_power_sum)
from hamtrace.sturm import (KreinData, SturmLiouvilleProblem, free_mode_sum,
                            free_resolvent_trace, free_resolvent_trace2, hamiltonian_data,
                            krein_problem, krein_sums, lagrangian_trace, normalized_problem,
                            parse_sl_config, sl_eigenvalues, sl_operator_trace, to_hamiltonian)
from hamtrace.threebody import B_matrix, K_matrix

from problems import positive_path, random_sl, rsym, trig_path

TRANSFORM_TOL = 1e-9
SPECTRUM_TOL = 1e-6
FREE_TOL = 1e-8

seeds = st.integers(0, 2 ** 32 - 1)


def _free_problem(r, nu, T=1.0, Sbar=1.0):
    P = constant_path([[1.0]], T)
    Z = zero_path(1, T)
    return SturmLiouvilleProblem(P, Z, Z, constant_path([[-r]], T), [[Sbar]], nu, T)


def test_free_particle_hamiltonian():
    n, T = 2, 1.0
    slp = SturmLiouvilleProblem(constant_path(np.eye(n), T), zero_path(n, T), zero_path(n, T),
                                zero_path(n, T), np.eye(n))
    B0, bd = to_hamiltonian(slp)
    expect = np.zeros((4, 4))
    expect[:2, :2] = np.eye(2)
    np.testing.assert_array_equal(B0(0.4), expect)
    np.testing.assert_array_equal(bd.S, np.eye(4))


def test_three_body_identification():
    beta, e, T = 4.0, 0.3, 2 * np.pi
    K2 = K_matrix(beta)[2:, 2:]
    R = function_path(lambda t: (1 / (1 + e * np.cos(t)))[:, None, None] * K2, 2, T, True)
    slp = SturmLiouvilleProblem(constant_path(np.eye(2), T), constant_path(standard_J(1), T), R,
                                zero_path(2, T), np.eye(2), 0.0, T)
    B0, _ = to_hamiltonian(slp)
    t = np.linspace(0, T, 17)
    np.testing.assert_allclose(B0(t), B_matrix(beta, e, t), atol=1e-15)


def test_validation():
    P = constant_path([[1.0]], 1.0)
    with pytest.raises(ConfigError, match="orthogonal"):
        SturmLiouvilleProblem(P, P, P, P, [[2.0]])
    with pytest.raises(ConfigError, match="dimension"):
        SturmLiouvilleProblem(P, P, P, constant_path(np.eye(2), 1.0), [[1.0]])


def test_free_traces_against_mode_sums():
    for r, u, T in [(1.7, 0.4, 1.0), (0.5, 2.2, 2.0)]:
        w = np.exp(1j * u * T)
        np.testing.assert_allclose(free_resolvent_trace([[r]], [[1.0]], w, T),
                                   free_mode_sum(r, T, 1j * u, 1), rtol=FREE_TOL)
        np.testing.assert_allclose(free_resolvent_trace2([[r]], [[1.0]], w, T),
                                   free_mode_sum(r, T, 1j * u, 2), rtol=FREE_TOL)
        np.testing.assert_allclose(free_resolvent_trace([[r]], [[-1.0]], w, T),
                                   free_mode_sum(r, T, 1j * u, 1, antiperiodic=True), rtol=FREE_TOL)


def test_free_traces_through_hamiltonian_form():
    r, u = 1.7, 0.4
    tr = lagrangian_trace(_free_problem(r, 0.4j), 2)
    w = np.exp(0.4j)
    np.testing.assert_allclose(tr.values[1], free_resolvent_trace([[r]], [[1.0]], w, 1.0),
                               rtol=FREE_TOL)
    # Tr[(R A^-1)^2] = r Tr(R A^-2) for constant R
    np.testing.assert_allclose(tr.values[2], r * free_resolvent_trace2([[r]], [[1.0]], w, 1.0),
                               rtol=FREE_TOL)


def test_krein_constant():
    for r in (0.5, 2.0):
        s1, s2 = krein_sums(KreinData(constant_path([[r]], 1.0), 1.0))
        np.testing.assert_allclose([s1, s2], [r / 4, r ** 2 / 48], rtol=1e-13)


def test_krein_zero_average():
    R = builtin_path("trig", {"const": [[0.0]], "cos": [[[1.0]]], "sin": [[[0.5]]]}, 1.0)
    s1, _ = krein_sums(KreinData(R, 1.0))
    assert abs(s1) < 1e-14


def test_krein_matches_trace_and_oracle():
    rng = np.random.default_rng(9)
    R = positive_path(rng, 2, floor=0.5)
    s1, s2 = krein_sums(KreinData(R, 1.0))
    tr = lagrangian_trace(krein_problem(R), 2)
    np.testing.assert_allclose([tr.values[1].real, tr.values[2].real], [s1, s2], rtol=1e-9)
    sl = sl_eigenvalues(krein_problem(R), 150)
    value, bound = reciprocal_power_sum(sl, 2)
    assert abs(value - s2) <= bound


def test_truncation_monotone():
    rng = np.random.default_rng(14)
    slp = random_sl(rng)
    vals = [sl_operator_trace(slp, 2, N) for N in (16, 32, 64, 128)]
    diffs = np.abs(np.diff(vals))
    assert np.all(diffs[1:] < diffs[:-1])


def test_config_parsing():
    doc = {"n": 1, "T": 1.0, "nu": [0.0, 0.4], "Sbar": "anti",
           "P": {"kind": "constant", "matrix": [[1.0]]},
           "R1": {"kind": "constant", "matrix": [[-2.0]]}}
    slp = parse_sl_config(json.dumps(doc))
    assert slp.nu == 0.4j and slp.Sbar[0, 0] == -1
    assert slp.Q.is_zero() and slp.R.is_zero()


@settings(max_examples=10)
@given(seeds)
def test_transform_consistency(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    T = 1.0
    Q = trig_path(rng, n, rsym(rng, n, 0.3) + 0.2 * np.triu(np.ones((n, n)), 1), scale=0.2)
    slp = random_sl(rng, n=n)
    slp = SturmLiouvilleProblem(constant_path(np.eye(n), T), Q, slp.R, slp.R1, slp.Sbar,
                                slp.nu, T)
    alt = normalized_problem(slp)
    for lam in (0.0, rng.uniform(-5, 5)):
        hs = []
        for p in (slp, alt):
            B0, D, bd = hamiltonian_data(p)
            hs.append(characteristic(B0, D, bd, np.array([lam]), 1e-12)[0][0])
        np.testing.assert_allclose(hs[1], hs[0], rtol=TRANSFORM_TOL, atol=TRANSFORM_TOL)


@settings(max_examples=5)
@given(seeds)
def test_spectral_correspondence(seed):
    rng = np.random.default_rng(seed)
    slp = random_sl(rng, n=int(rng.integers(1, 3)))
    B0, D, bd = hamiltonian_data(slp)
    lam = np.sort(sl_eigenvalues(slp, 100).eigenvalues.real)
    lam = lam[np.abs(lam) < 40]
    sh = eigenvalues_adaptive(B0, D, bd, (-40, 40), piece=10)
    np.testing.assert_allclose(np.repeat(sh.eigenvalues, sh.multiplicities), lam,
                               atol=SPECTRUM_TOL)


@settings(max_examples=10)
@given(seeds)
def test_sign_relation(seed):
    rng = np.random.default_rng(seed)
    slp = random_sl(rng, n=int(rng.integers(1, 3)))
    tr = lagrangian_trace(slp, 4)
    for m, rtol in ((2, 1e-7), (3, 1e-9), (4, 1e-9)):
        np.testing.assert_allclose((-1) ** m * sl_operator_trace(slp, m, 128), tr.values[m],
                                   rtol=rtol)


def test_kernel_dimensions_match():
    # y'' + lam r y = 0 antiperiodic: every eigenvalue is double
    for r in (1.0, 2.5):
        slp = krein_problem(constant_path([[r]], 1.0))
        B0, D, bd = hamiltonian_data(slp)
        lam = sl_eigenvalues(slp, 40).eigenvalues[:4]
        np.testing.assert_allclose(lam, np.repeat(np.pi ** 2 * np.array([1, 9]) / r, 2), rtol=1e-9)
        _, Ms = characteristic(B0, D, bd, lam[::2], 1e-13)
        for M in Ms:
            sv = np.linalg.svd(M - bd.omega * np.eye(2), compute_uv=False)
            assert np.sum(sv < 1e-6) == 2
