import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hamtrace.core import BoundaryData, DomainError, builtin_path, constant_path, zero_path
from hamtrace.index import (check_bracket, crossing_count, index_bracket, morse_bound_sl,
                            nondegeneracy_certificate, stability_criteria)
from hamtrace.monodromy import monodromy
from hamtrace.sturm import SturmLiouvilleProblem, sl_galerkin

from problems import rsym, trig_path

SIGMA_MIN = 1e-6
T = 1.0
seeds = st.integers(0, 2 ** 32 - 1)


def _instance(rng, scale):
    n = int(rng.integers(1, 3))
    d = 2 * n
    B = trig_path(rng, d, rsym(rng, d, 1.0), scale=0.5)
    D = trig_path(rng, d, rsym(rng, d, 0.5 * scale), scale=0.3 * scale)
    ev = np.linalg.eigvalsh(D(np.linspace(0, T, 513)))
    D1 = constant_path((min(ev.min(), 0) - 0.1) * np.eye(d), T)
    D2 = constant_path((max(ev.max(), 0) + 0.1) * np.eye(d), T)
    bd = BoundaryData.periodic(n, 1j * rng.uniform(0.2, 3), T)
    return B, D, bd, D1, D2


def test_bracket_validation():
    D = constant_path(np.diag([0.5, -0.5]), T)
    neg, pos = constant_path(-np.eye(2), T), constant_path(np.eye(2), T)
    check_bracket(D, neg, pos)
    with pytest.raises(DomainError, match="negative definite"):
        check_bracket(D, constant_path(np.zeros((2, 2)), T), pos)
    with pytest.raises(DomainError, match="positive definite"):
        check_bracket(D, neg, constant_path(np.zeros((2, 2)), T))
    with pytest.raises(DomainError, match="D <= D2"):
        check_bracket(D, neg, pos.scaled(0.2))
    with pytest.raises(DomainError, match="D1 <= D"):
        check_bracket(D, neg.scaled(0.2), pos)


def test_crossing_count_needs_imaginary_nu():
    bd = BoundaryData.periodic(1, 0.3, T)
    with pytest.raises(DomainError, match="imaginary"):
        crossing_count(zero_path(2, T), constant_path(np.eye(2), T), bd)


@settings(max_examples=8)
@given(seeds)
def test_certificate_is_sound(seed):
    rng = np.random.default_rng(seed)
    B, D, bd, D1, D2 = _instance(rng, rng.uniform(0.05, 1.0))
    if not nondegeneracy_certificate(B, D, bd, D1, D2):
        return
    total, crossings = crossing_count(B, D, bd)
    assert crossings == [] and total == 0
    M = monodromy(B, bd, 1.0, D).M
    sv = np.linalg.svd(M - bd.omega * np.eye(len(M)), compute_uv=False)
    assert sv.min() > SIGMA_MIN


@settings(max_examples=8)
@given(seeds)
def test_crossing_total_inside_bracket(seed):
    rng = np.random.default_rng(seed)
    rep = index_bracket(*_instance(rng, rng.uniform(1, 8)))
    if rep.oracle_error is None:
        assert rep.consistent, rep.as_dict()


def test_stability_examples():
    bd = BoundaryData.periodic(1, 0, T)
    D = builtin_path("trig", {"const": [[0.8, 0.1], [0.1, 0.6]], "cos": [[[0.1, 0], [0, 0.1]]]}, T)
    v = stability_criteria(zero_path(2, T), D, bd, [-1, 1j])
    assert v.claim == "spectrally-stable"
    assert {e["criterion"] for e in v.entries if e["satisfied"]} >= {"identity-monodromy-symmetric"}
    v = stability_criteria(constant_path(2 * np.pi * np.eye(2), T), D, bd, [-1])
    assert v.claim == "spectrally-stable"
    v = stability_criteria(constant_path(np.diag([1.0, -1.0]), T), D.scaled(0.05), bd, [-1])
    assert (v.claim, v.theorem) == ("hyperbolic", "hyperbolic-persistence")
    # a large perturbation of a saddle is inconclusive
    v = stability_criteria(constant_path(np.diag([1.0, -1.0]), T), D.scaled(20.0), bd, [-1])
    assert v.claim == "inconclusive"


def _sl(R1, nu=0.4j, Sbar=1.0):
    P = constant_path([[1.0]], T)
    Z = zero_path(1, T)
    return SturmLiouvilleProblem(P, Z, Z, R1, [[Sbar]], nu, T)


def _negative_count(slp, N=64):
    A, W = sl_galerkin(slp, N)
    H = A + W
    return int(np.sum(np.linalg.eigvalsh((H + H.conj().T) / 2) < 0))


def test_morse_bound_nonnegative_potential():
    assert morse_bound_sl(_sl(constant_path([[0.5]], T))) == 0


@pytest.mark.parametrize("const,amp", [(-3.0, 8.0), (-20.0, 5.0), (-1.0, 0.5)])
def test_morse_bound_dominates_count(const, amp):
    slp = _sl(builtin_path("trig", {"const": [[const]], "cos": [[[amp]]]}, T))
    assert morse_bound_sl(slp) >= _negative_count(slp)


def test_morse_bound_with_comparison():
    slp = _sl(builtin_path("trig", {"const": [[-3.0]], "cos": [[[1.0]]]}, T))
    b = morse_bound_sl(slp, K=constant_path([[4.0]], T))
    assert b >= _negative_count(slp)
    with pytest.raises(DomainError, match="R1 >= -K"):
        morse_bound_sl(slp, K=constant_path([[1.0]], T))
    with pytest.raises(DomainError, match="imaginary"):
        morse_bound_sl(_sl(constant_path([[1.0]], T), nu=0.3))
