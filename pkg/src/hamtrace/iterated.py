"""Iterated integrals M_k and trace formulas for Tr[(D(A - B - nu J)^{-1})^m]."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import zeta

from .core import (BoundaryData, DegenerateError, DomainError, MatrixPath, function_path,
                   standard_J)
from .monodromy import DEFAULT_TOL, FundamentalSolution, integrate_fundamental

M_MAX_CAP = 8
COND_LIMIT = 1e12
DEGENERACY_TOL = 1e-10
HYPOTHESIS_TOL = 1e-10


@dataclass
class IteratedIntegralStack:
    """M_0 = I, M_1, ..., M_m of the expansion gamma_alpha(T) = gamma_0(T) sum alpha^k M_k."""

    m_max: int
    Ms: list
    gamma0: FundamentalSolution = field(repr=False)
    D: MatrixPath = field(repr=False)
    tol: float

    @property
    def Dhat(self) -> MatrixPath:
        """gamma_0(t)^T D(t) gamma_0(t) as a path."""
        g, D = self.gamma0, self.D

        def fn(t):
            G = g(t)
            return np.einsum("tji,tjk,tkl->til", G, D(t), G)

        return function_path(fn, self.D.dim, self.D.period, symmetric=True)

    def symplectic_defects(self) -> list[float]:
        """max-norm of sum_j M_j^T J M_{k-j} for k = 1..m_max (zero in exact arithmetic)."""
        J = standard_J(self.Ms[0].shape[0] // 2)
        out = []
        for k in range(1, self.m_max + 1):
            S = sum(self.Ms[j].T @ J @ self.Ms[k - j] for j in range(k + 1))
            out.append(float(np.max(np.abs(S))))
        return out


def compute_Mk(B: MatrixPath, D: MatrixPath, m_max: int, tol: float = 1e-12,
               gamma0: FundamentalSolution | None = None) -> IteratedIntegralStack:
    """All M_k, k <= m_max, from one augmented integration.

    Integrates Psi_0 = gamma_0, Psi_k' = J B Psi_k + J D Psi_{k-1}, Psi_k(0) = 0, so
    that Psi_k = gamma_0 Phi_k with Phi_k' = J Dhat Phi_{k-1}; then
    M_k = gamma_0(T)^{-1} Psi_k(T).
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    d = B.dim
    if gamma0 is None:
        gamma0 = integrate_fundamental(B, 0.0, None, tol)
    J = standard_J(d // 2)
    Ms = [np.eye(d)]
    if D.is_zero():
        Ms += [np.zeros((d, d)) for _ in range(m_max)]
        return IteratedIntegralStack(m_max, Ms, gamma0, D, tol)
    K = m_max + 1
    y0 = np.zeros((K, d, d))
    y0[0] = np.eye(d)

    def rhs(t, y):
        Y = y.reshape(K, d, d)
        JB = J @ B.at(t)
        JD = J @ D.at(t)
        out = JB @ Y
        out[1:] += JD @ Y[:-1]
        return out.ravel()

    sol = solve_ivp(rhs, (0.0, B.period), y0.ravel(), method="DOP853", rtol=tol,
                    atol=tol * 1e-2)
    if sol.status != 0:
        raise DomainError(f"integration failed: {sol.message}")
    Y = sol.y[:, -1].reshape(K, d, d)
    G0 = Y[0]
    for k in range(1, K):
        Ms.append(np.linalg.solve(G0, Y[k]))
    return IteratedIntegralStack(m_max, Ms, gamma0, D, tol)


def compositions(m: int):
    """All ordered tuples of positive integers summing to m."""
    for cuts in itertools.product((0, 1), repeat=m - 1):
        parts, run = [], 1
        for c in cuts:
            if c:
                parts.append(run)
                run = 1
            else:
                run += 1
        parts.append(run)
        yield tuple(parts)


def composition_trace(Gs: list, m: int) -> complex:
    """m sum_k (-1)^k / k sum_{j_1+..+j_k=m} Tr(G_{j_1} ... G_{j_k}); Gs[0] unused."""
    d = Gs[1].shape[0]
    total = 0.0 + 0.0j
    for parts in compositions(m):
        P = np.eye(d, dtype=complex)
        for j in parts:
            P = P @ Gs[j]
        k = len(parts)
        total += (-1) ** k / k * np.trace(P)
    return complex(m * total)


# ---------------------------------------------------------------------------
# Quadrature for the closed forms
# ---------------------------------------------------------------------------

def _panels(T: float, breakpoints=None, n_panels: int = 64):
    edges = np.linspace(0.0, T, n_panels + 1)
    if breakpoints is not None:
        edges = np.union1d(edges, [b for b in breakpoints if 0 < b < T])
    return edges


def integral_Dhat(gamma0: FundamentalSolution, D: MatrixPath, breakpoints=None,
                  nodes: int = 20, n_panels: int = 64) -> np.ndarray:
    """int_0^T gamma_0^T D gamma_0 dt by composite Gauss-Legendre quadrature."""
    edges = _panels(D.period, breakpoints, n_panels)
    x, w = np.polynomial.legendre.leggauss(nodes)
    a, b = edges[:-1, None], edges[1:, None]
    t = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    wt = (0.5 * (b - a) * w).ravel()
    G = gamma0(t)
    Dh = np.einsum("tji,tjk,tkl->til", G, D(t), G)
    return np.einsum("t,tij->ij", wt, Dh)


def second_iterated_integral(gamma0: FundamentalSolution, D: MatrixPath, breakpoints=None,
                             nodes: int = 20, n_panels: int = 64) -> np.ndarray:
    """int_0^T J Dhat(t) int_0^t J Dhat(s) ds dt by nested Gauss-Legendre quadrature.

    The inner integral up to each outer node is the sum of completed panels plus a
    Gauss-Legendre rule on the partial panel, so the rule is exact for piecewise
    polynomials of degree < 2*nodes on the panel grid.
    """
    d = D.dim
    J = standard_J(d // 2)
    edges = _panels(D.period, breakpoints, n_panels)
    x, w = np.polynomial.legendre.leggauss(nodes)

    def JDh(t):
        G = gamma0(t)
        return J @ np.einsum("tji,tjk,tkl->til", G, D(t), G)

    total = np.zeros((d, d))
    acc = np.zeros((d, d))
    for a, b in zip(edges[:-1], edges[1:]):
        h = 0.5 * (b - a)
        t_out = h * x + 0.5 * (a + b)
        F_out = JDh(t_out)
        # partial inner integral from a to each outer node
        lo = a
        sub_h = 0.5 * (t_out - lo)
        t_in = (sub_h[:, None] * x[None, :] + 0.5 * (t_out + lo)[:, None]).ravel()
        F_in = JDh(t_in).reshape(nodes, nodes, d, d)
        inner = acc[None] + np.einsum("i,j,ijkl->ikl", sub_h, w, F_in)
        total += np.einsum("i,ikl,ilm->km", h * w, F_out, inner)
        acc = acc + np.einsum("i,ikl->kl", h * w, F_out)
    return total


# ---------------------------------------------------------------------------
# Trace reports
# ---------------------------------------------------------------------------

@dataclass
class TraceReport:
    values: dict
    methods: dict
    closed_forms: dict
    Gs: list = field(repr=False)
    M: np.ndarray = field(repr=False)
    omega: complex = 1.0
    condition: float = 1.0
    stack: IteratedIntegralStack | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "omega": self.omega,
            "condition_number": self.condition,
            "traces": [{"m": m, "value": v, "method": self.methods[m],
                        "closed_form": self.closed_forms.get(m)}
                       for m, v in sorted(self.values.items())],
        }


def _resolvent_factor(M: np.ndarray, omega: complex):
    d = M.shape[0]
    eigs = np.linalg.eigvals(M)
    if np.min(np.abs(eigs - omega)) <= DEGENERACY_TOL:
        raise DegenerateError(f"omega = {omega:.6g} is an eigenvalue of the monodromy")
    X = M - omega * np.eye(d)
    cond = float(np.linalg.cond(X))
    if cond > COND_LIMIT:
        raise DegenerateError(f"condition number {cond:.3e} of M - omega I exceeds {COND_LIMIT:.0e}")
    return M @ np.linalg.inv(X), cond


def trace_power(B: MatrixPath, D: MatrixPath, boundary: BoundaryData, m_max: int = 4,
                tol: float = 1e-12, breakpoints=None) -> TraceReport:
    """Tr[(D(A - B - nu J)^{-1})^m] for m = 1..m_max via composition sums of
    G_k = M_k M (M - omega I)^{-1}, M = S gamma_0(T).

    For m = 1 and 2 the closed forms built from int Dhat and the second iterated
    integral (computed by quadrature over the dense gamma_0) are reported alongside.
    The m = 1 value is a conditional trace for Hamiltonian problems.
    """
    if not 1 <= m_max <= M_MAX_CAP:
        raise ValueError(f"m_max must be in [1, {M_MAX_CAP}]")
    stack = compute_Mk(B, D, m_max, tol)
    M = boundary.S @ stack.gamma0.final
    omega = boundary.omega
    X, cond = _resolvent_factor(M, omega)
    Gs = [None] + [Mk @ X for Mk in stack.Ms[1:]]
    values = {m: composition_trace(Gs, m) for m in range(1, m_max + 1)}
    methods = {m: "composition-sum" for m in values}
    closed = {}
    if not D.is_zero():
        J = standard_J(B.dim // 2)
        I1 = J @ integral_Dhat(stack.gamma0, D, breakpoints)
        G1 = I1 @ X
        closed[1] = complex(-np.trace(G1))
        if m_max >= 2:
            I2 = second_iterated_integral(stack.gamma0, D, breakpoints)
            closed[2] = complex(np.trace(G1 @ G1) - 2 * np.trace(I2 @ X))
    else:
        closed = {1: 0j, 2: 0j}
    return TraceReport(values, methods, closed, Gs, M, omega, cond, stack)


def trace_power_special(B: MatrixPath, D: MatrixPath, boundary: BoundaryData, m: int = 2,
                        tol: float = 1e-12, breakpoints=None) -> tuple[complex, str]:
    """Simplified m = 2 trace under a structural hypothesis on M = S gamma_0(T).

    Returns (value, method tag). Hypotheses, tried in order: M = +-I; MJ = JM,
    M^T = M and M commuting with J int Dhat; MJ = JM and M^T = M.
    """
    if m != 2:
        raise ValueError("only m = 2 has a simplified form")
    g0 = integrate_fundamental(B, 0.0, None, tol)
    M = boundary.S @ g0.final
    d = M.shape[0]
    I = np.eye(d)
    J = standard_J(d // 2)
    w = boundary.omega
    if np.min(np.abs(np.linalg.eigvals(M) - w)) <= DEGENERACY_TOL:
        raise DegenerateError()
    A = J @ integral_Dhat(g0, D, breakpoints)
    A2 = np.trace(A @ A)
    for sign in (1, -1):
        if np.max(np.abs(M - sign * I)) <= HYPOTHESIS_TOL:
            return complex(sign * w / (1 - sign * w) ** 2 * A2), "special-M-±I"
    if np.max(np.abs(M @ J - J @ M)) <= HYPOTHESIS_TOL and np.max(np.abs(M - M.T)) <= HYPOTHESIS_TOL:
        R = np.linalg.inv(M - w * I)
        if np.max(np.abs(M @ A - A @ M)) <= HYPOTHESIS_TOL * max(1.0, np.max(np.abs(A))):
            return complex(w * np.trace(A @ A @ M @ R @ R)), "special-M-commuting"
        X = M @ R
        return complex(np.trace(A @ X @ A @ X) - np.trace(A @ A @ X)), "special-M-symmetric"
    raise DomainError("no structural hypothesis on the monodromy holds")


# ---------------------------------------------------------------------------
# Lattice-sum identities
# ---------------------------------------------------------------------------

@dataclass
class IdentityResult:
    closed_form: complex
    partial_sum: complex
    tail: complex
    tail_bound: float

    @property
    def corrected(self) -> complex:
        return self.partial_sum + self.tail


def _closed_identity(nu: complex, alpha: complex, m: int) -> complex:
    e = np.exp(nu)
    ca, sa = np.cos(alpha), np.sin(alpha)
    if m == 1:
        den = (ca - e) ** 2 + sa ** 2
        if abs(den) < 1e-12:
            raise DomainError("pole of the closed form")
        return complex(-2 * e * sa / den)
    ch = np.cosh(nu)
    den = ca - ch
    if abs(den) < 1e-12:
        raise DomainError("pole of the closed form")
    if m == 2:
        return complex((1 - ch * ca) / den ** 2)
    if m == 3:
        return complex(-sa * (ch ** 2 + ch * ca - 2) / (2 * den ** 3))
    raise ValueError("m must be 1, 2 or 3")


def identity_suite(nu: complex, alpha: complex, m: int, K: int = 10_000) -> IdentityResult:
    """Closed forms of sum_k [1/(2k pi + i nu - alpha)^m + 1/(2k pi - i nu - alpha)^m]
    against the symmetric partial sum over |k| <= K.

    The tail is the leading term of the expansion in 1/k of the neglected pairs; the
    bound covers the next order.
    """
    if m not in (1, 2, 3):
        raise ValueError("m must be 1, 2 or 3")
    closed = _closed_identity(nu, alpha, m)
    k = np.arange(-K, K + 1)
    partial = 0j
    cs = (1j * nu - alpha, -1j * nu - alpha)
    for c in cs:
        partial += np.sum(1.0 / (2 * np.pi * k + c) ** m)
    def zeta_tail(p):
        return float(zeta(p, K + 1))

    tail = 0j
    cmax = max(abs(c) for c in cs)
    for c in cs:
        # pair (k, -k): expand 1/(x+c)^m + 1/(-x+c)^m in 1/x, x = 2 pi k
        if m == 1:
            tail += -2 * c * zeta_tail(2) / (2 * np.pi) ** 2
        elif m == 2:
            tail += 2 * zeta_tail(2) / (2 * np.pi) ** 2 + 6 * c ** 2 * zeta_tail(4) / (2 * np.pi) ** 4
        else:
            tail += -6 * c * zeta_tail(4) / (2 * np.pi) ** 4
    nxt = {1: 2 * cmax ** 3 * zeta_tail(4) / (2 * np.pi) ** 4,
           2: 10 * cmax ** 4 * zeta_tail(6) / (2 * np.pi) ** 6,
           3: 20 * cmax ** 3 * zeta_tail(6) / (2 * np.pi) ** 6}[m]
    bound = 4 * nxt + 1e-15 * K
    return IdentityResult(closed, complex(partial), complex(tail), float(bound))


__all__ = [
    "IteratedIntegralStack", "TraceReport", "IdentityResult", "compute_Mk", "compositions",
    "composition_trace", "trace_power", "trace_power_special", "identity_suite",
    "integral_Dhat", "second_iterated_integral",
]
