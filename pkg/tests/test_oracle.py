import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hamtrace.core import (BoundaryData, DegenerateError, DomainError, builtin_path, constant_path,
                           function_path, standard_J, zero_path)
from hamtrace.iterated import trace_power
from hamtrace.oracle import (GridTooCoarseError, characteristic, eigenvalues_adaptive, eigenvalues_by_shooting, eigenvalues_galerkin,
                             hill_ratio_check, reciprocal_power_sum, truncated_fredholm)
from hamtrace.sturm import SturmLiouvilleProblem, hamiltonian_data
from hamtrace.threebody import K_matrix

from problems import positive_path, random_hamiltonian, rsym, trig_path

ROOT_TOL = 1e-8
HILL_TOL = 1e-6
SYMMETRY_TOL = 1e-8
CLOSE_PAIR_SEED = 12  # pair at -11.9469, -11.9448

seeds = st.integers(0, 2 ** 32 - 1)


def _free(T=1.0):
    return zero_path(2, T), constant_path(np.eye(2), T)


def _reflected(seed):
    """B = 0 and D > 0 with D(t) = D(T - t): a cosine-only trigonometric path."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    d = 2 * n
    c0, c1 = rsym(rng, d, 0.3), rsym(rng, d, 0.3)
    lo = np.linalg.eigvalsh(c0[None] + np.cos(np.linspace(0, np.pi, 257))[:, None, None] * c1).min()
    const = c0 + (rng.uniform(0.5, 1.5) - lo) * np.eye(d)
    D = builtin_path("trig", {"const": const.tolist(), "cos": [c1.tolist()]}, 1.0)
    bd = BoundaryData.periodic(n, 1j * rng.uniform(0.2, 3), 1.0)
    return zero_path(d, 1.0), D, bd


def test_twisted_free_spectrum():
    B, D = _free()
    sl = eigenvalues_by_shooting(B, D, BoundaryData.periodic(1, 0.3j), (-10, 10), 400)
    k = np.arange(-2, 3)
    expect = np.sort(np.concatenate([2 * np.pi * k + 0.3, 2 * np.pi * k - 0.3]))
    expect = expect[np.abs(expect) < 10]
    np.testing.assert_allclose(sl.eigenvalues, expect, atol=ROOT_TOL)
    assert np.all(sl.multiplicities == 1) and np.all(sl.certified)


def test_krein_double_eigenvalues():
    B, D = _free()
    sl = eigenvalues_by_shooting(B, D, BoundaryData.antiperiodic(1), (-20, 20), 400)
    k = np.arange(-3, 3)
    np.testing.assert_allclose(sl.eigenvalues, (2 * k + 1) * np.pi, atol=ROOT_TOL)
    assert np.all(sl.multiplicities == 2)


def test_empty_window():
    B, D = _free()
    sl = eigenvalues_by_shooting(B, D, BoundaryData.antiperiodic(1), (-3, 3), 100)
    assert len(sl) == 0
    value, bound = reciprocal_power_sum(sl, 2)
    assert value == 0 and bound == 0


def test_degenerate_unperturbed_problem():
    B, D = _free()
    with pytest.raises(DegenerateError):
        eigenvalues_by_shooting(B, D, BoundaryData.periodic(1), (-5, 5), 100)


def test_krein_reciprocal_sum():
    B, D = _free()
    sl = eigenvalues_galerkin(B, D, BoundaryData.antiperiodic(1), 60)
    value, bound = reciprocal_power_sum(sl, 2)
    assert bound < 1e-4
    assert abs(value - 0.5) <= bound
    with pytest.raises(DomainError):
        reciprocal_power_sum(sl, 1)


def test_random_sum_matches_trace_power():
    rng = np.random.default_rng(12)
    B, D, bd = random_hamiltonian(rng, n=1)
    sl = eigenvalues_galerkin(B, D, bd, 150)
    tr = trace_power(B, D, bd, 2)
    value, bound = reciprocal_power_sum(sl, 2)
    assert abs(value - tr.values[2]) <= bound


def test_shooting_and_galerkin_agree():
    rng = np.random.default_rng(21)
    B, D, bd = random_hamiltonian(rng, n=1)
    sh = eigenvalues_by_shooting(B, D, bd, (-15, 15), 600)
    ga = eigenvalues_galerkin(B, D, bd, 100)
    inside = ga.eigenvalues[np.abs(ga.eigenvalues) < 15]
    np.testing.assert_allclose(sh.eigenvalues, inside, atol=1e-7)


def test_fredholm_identity_at_zero():
    rng = np.random.default_rng(1)
    B, D, bd = random_hamiltonian(rng, n=1)
    det = truncated_fredholm(B, D, bd, 0.0, N=64)
    assert det.values == [1, 1, 1] and det.extrapolated == 1


def test_fredholm_matches_monodromy_ratio():
    P = constant_path([[1.0]], 1.0)
    slp = SturmLiouvilleProblem(P, zero_path(1, 1.0), P, P.scaled(-2.0), [[1.0]], 0.3j, 1.0)
    B0, D, bd = hamiltonian_data(slp)
    for alpha in (0.1, 0.5):
        det = truncated_fredholm(B0, D, bd, alpha, N=256)
        hc = hill_ratio_check(slp, alpha)
        np.testing.assert_allclose(det.extrapolated, hc.rhs, rtol=1e-6)


def test_hill_trivial_perturbation():
    P = constant_path([[1.0]], 1.0)
    slp = SturmLiouvilleProblem(P, zero_path(1, 1.0), P, zero_path(1, 1.0), [[1.0]], 0.3j, 1.0)
    hc = hill_ratio_check(slp)
    np.testing.assert_allclose([hc.lhs, hc.rhs], [1, 1], atol=1e-12)


@pytest.mark.parametrize("r, u", [(2.0, 0.3), (5.0, 1.1), (0.7, 2.0)])
def test_hill_constant_coefficients(r, u):
    # -y'' + lam r y = 0 twisted by e^{iu}: prod_k (1 - r/(2 pi k + u)^2)
    # = (cos u - cos sqrt r)/(cos u - 1)
    P = constant_path([[1.0]], 1.0)
    slp = SturmLiouvilleProblem(P, zero_path(1, 1.0), zero_path(1, 1.0),
                                constant_path([[-r]], 1.0), [[1.0]], 1j * u, 1.0)
    hc = hill_ratio_check(slp, 1.0)
    exact = (np.cos(u) - np.cos(np.sqrt(r))) / (np.cos(u) - 1)
    np.testing.assert_allclose(hc.rhs, exact, rtol=1e-10)
    np.testing.assert_allclose(hc.lhs, exact, rtol=HILL_TOL)


def test_hill_three_body_form():
    beta, e, T = 2.0, 0.1, 2 * np.pi
    K2 = K_matrix(beta)[2:, 2:]
    R = function_path(lambda t: (1 / (1 + e * np.cos(t)))[:, None, None] * K2, 2, T, True)
    slp = SturmLiouvilleProblem(constant_path(np.eye(2), T), constant_path(standard_J(1), T), R,
                                constant_path(-np.eye(2), T), np.eye(2), 0.0, T)
    assert hill_ratio_check(slp, 1.0, N=200).rel_err < 1e-4


def test_roots_recertify_at_higher_accuracy():
    rng = np.random.default_rng(31)
    B, D, bd = random_hamiltonian(rng, n=1)
    sl = eigenvalues_by_shooting(B, D, bd, (-10, 10), 400)
    h, _ = characteristic(B, D, bd, sl.eigenvalues, tol=1e-13)
    assert np.all(np.abs(h) <= 1e-6 * sl.scale)


@settings(max_examples=10)
@given(seeds)
def test_conjugation_symmetry(seed):
    rng = np.random.default_rng(seed)
    B, D, bd = random_hamiltonian(rng, n=1)
    a = eigenvalues_adaptive(B, D, bd, (-12, 12)).eigenvalues
    b = eigenvalues_adaptive(B, D, bd.with_nu(-bd.nu), (-12, 12)).eigenvalues
    # real spectra: conjugation leaves them fixed
    np.testing.assert_allclose(np.sort(np.conj(a)), np.sort(b), atol=SYMMETRY_TOL)


def test_close_roots_demand_finer_grid():
    # a root pair closer than the default cell width
    B, D, bd = _reflected(CLOSE_PAIR_SEED)
    with pytest.raises(GridTooCoarseError):
        eigenvalues_by_shooting(B, D, bd, (-12, -11), 100)
    sl = eigenvalues_adaptive(B, D, bd, (-12, -11))
    assert np.sum(np.abs(sl.eigenvalues + 11.9459) < 0.002) == 2


@settings(max_examples=10)
@given(seeds)
def test_reflection_symmetry(seed):
    B, D, bd = _reflected(seed)
    sl = eigenvalues_adaptive(B, D, bd, (-12, 12))
    lam, mult = sl.eigenvalues, sl.multiplicities
    np.testing.assert_allclose(lam, -lam[::-1], atol=SYMMETRY_TOL)
    np.testing.assert_array_equal(mult, mult[::-1])
