from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from hamtrace.core import (BoundaryData, DegenerateError, DomainError, constant_path,
                           standard_J, zero_path)
from hamtrace.iterated import (compositions, compute_Mk, identity_suite, trace_power,
                               trace_power_special)

from problems import random_hamiltonian, rsym, trig_path

SYMPLECTIC_TOL = 1e-8
CLOSED_FORM_TOL = 1e-9
GAUGE_TOL = 1e-10

seeds = st.integers(0, 2 ** 32 - 1)


def test_zero_perturbation():
    stack = compute_Mk(trig_path(np.random.default_rng(0), 2, np.eye(2)), zero_path(2, 1.0), 3)
    for Mk in stack.Ms[1:]:
        np.testing.assert_array_equal(Mk, 0)


def test_constant_nested_integrals():
    stack = compute_Mk(zero_path(2, 1.0), constant_path(np.eye(2), 1.0), 4)
    J = standard_J(1)
    np.testing.assert_allclose(stack.Ms[1], J, atol=1e-12)
    np.testing.assert_allclose(stack.Ms[2], -np.eye(2) / 2, atol=1e-12)
    # gamma_alpha(1) = exp(alpha J), so M_k = J^k / k!
    for k, Mk in enumerate(stack.Ms):
        np.testing.assert_allclose(Mk, np.linalg.matrix_power(J, k) / factorial(k), atol=1e-12)
    series = sum(0.1 ** k * Mk for k, Mk in enumerate(stack.Ms))
    np.testing.assert_allclose(series, expm(0.1 * J), atol=1e-6)


def test_compositions_enumeration():
    assert sorted(compositions(3)) == [(1, 1, 1), (1, 2), (2, 1), (3,)]
    assert len(list(compositions(6))) == 2 ** 5


def test_special_value_identity_monodromy():
    B, D = zero_path(2, 1.0), constant_path(np.eye(2), 1.0)
    bd = BoundaryData.periodic(1, 1j * np.pi, 1.0)
    value, tag = trace_power_special(B, D, bd)
    np.testing.assert_allclose(value, 0.5, atol=1e-12)
    assert tag == "special-M-±I"
    np.testing.assert_allclose(trace_power(B, D, bd, 2).values[2], 0.5, atol=CLOSED_FORM_TOL)


def test_special_requires_hypothesis():
    rng = np.random.default_rng(4)
    B, D, bd = random_hamiltonian(rng, n=1)
    with pytest.raises(DomainError):
        trace_power_special(B, D, bd)


def test_degenerate_unperturbed():
    with pytest.raises(DegenerateError, match="unperturbed system degenerate"):
        trace_power(zero_path(2, 1.0), constant_path(np.eye(2), 1.0), BoundaryData.periodic(1), 2)


def test_m3_composition_sum():
    rng = np.random.default_rng(8)
    B, D, bd = random_hamiltonian(rng, n=1)
    tr = trace_power(B, D, bd, 3)
    G1, G2, G3 = tr.Gs[1:4]
    expect = -3 * np.trace(G3) + 3 * np.trace(G1 @ G2) - np.trace(G1 @ G1 @ G1)
    np.testing.assert_allclose(tr.values[3], expect, rtol=1e-12)


@settings(max_examples=25)
@given(seeds)
def test_symplectic_constraints(seed):
    rng = np.random.default_rng(seed)
    B, D, _ = random_hamiltonian(rng, positive=False)
    stack = compute_Mk(B, D, 4)
    assert max(stack.symplectic_defects()) <= SYMPLECTIC_TOL
    M1, M2 = stack.Ms[1:3]
    assert abs(2 * np.trace(M2) - np.trace(M1 @ M1)) <= SYMPLECTIC_TOL


@settings(max_examples=50)
@given(seeds)
def test_closed_forms_match_composition(seed):
    rng = np.random.default_rng(seed)
    B, D, bd = random_hamiltonian(rng, positive=bool(rng.integers(2)))
    tr = trace_power(B, D, bd, 2)
    for m in (1, 2):
        np.testing.assert_allclose(tr.closed_forms[m], tr.values[m], rtol=CLOSED_FORM_TOL,
                                   atol=CLOSED_FORM_TOL)


@given(seeds)
def test_second_trace_nonnegative_for_positive_D(seed):
    rng = np.random.default_rng(seed)
    B, D, bd = random_hamiltonian(rng)
    v = trace_power(B, D, bd, 2).values[2]
    assert abs(v.imag) <= 1e-9 * max(1.0, abs(v))
    assert v.real >= -1e-9


@given(seeds)
def test_gauge_shift_of_nu(seed):
    rng = np.random.default_rng(seed)
    B, D, bd = random_hamiltonian(rng, n=1, T=rng.uniform(0.5, 2.0))
    a = trace_power(B, D, bd, 3).values
    b = trace_power(B, D, bd.with_nu(bd.nu + 2j * np.pi / bd.T), 3).values
    for m in a:
        np.testing.assert_allclose(b[m], a[m], rtol=GAUGE_TOL, atol=GAUGE_TOL)


def test_identity_examples():
    r = identity_suite(1.0, 0.0, 2)
    np.testing.assert_allclose(r.closed_form, (1 - np.cosh(1)) / (np.cosh(1) - 1) ** 2)
    assert abs(r.partial_sum - r.closed_form) < 1e-3
    np.testing.assert_allclose(r.corrected, -1.841347188415585, rtol=1e-10)
    r = identity_suite(1e-8, np.pi / 2, 2)
    np.testing.assert_allclose(r.closed_form, 1.0, rtol=1e-12)
    np.testing.assert_allclose(r.partial_sum, 1.0, rtol=1e-3)
    r = identity_suite(0.0, np.pi / 2, 1)
    np.testing.assert_allclose(r.closed_form, -1.0, rtol=1e-15)
    np.testing.assert_allclose(r.partial_sum, -1.0, rtol=1e-3)


def test_identity_pole():
    with pytest.raises(DomainError, match="pole"):
        identity_suite(0.0, 0.0, 2)
