"""Linear stability of elliptic Lagrangian (equilateral) solutions of the planar
three-body problem via trace formulas.

Notation: beta in [0, 9] is the mass parameter, e in [0, 1) the eccentricity, and
the essential part of the linearized flow is z' = J B_{beta,e}(t) z on [0, 2 pi].
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import bisect, brentq, minimize_scalar

from .core import DomainError, MatrixPath, register_builtin, standard_J
from .iterated import integral_Dhat, second_iterated_integral
from .monodromy import UNIT_CIRCLE_TOL, quadruple_defect

PERIOD = 2 * np.pi
J4 = standard_J(2)
U_MAT = np.block([[np.eye(2), 1j * np.eye(2)], [np.eye(2), -1j * np.eye(2)]]) / np.sqrt(2)
TOL_RES = 1e-4
TOL_POLE = 1e-6
SQRT2_OMEGA_U = np.sqrt(2) / 2  # omega = e^{i sqrt(2) pi} = e^{2 pi i u}
BOX_BETA = 3.0334
BOX_E = 0.1797


class ResonanceError(DomainError):
    """Closed form evaluated too close to a removable-looking singularity."""


def mass_to_beta(m1: float, m2: float, m3: float) -> float:
    """beta = 27 (m1 m2 + m1 m3 + m2 m3) / (m1 + m2 + m3)^2."""
    if min(m1, m2, m3) <= 0:
        raise ValueError("masses must be positive")
    return 27 * (m1 * m2 + m1 * m3 + m2 * m3) / (m1 + m2 + m3) ** 2


def _check_beta(beta: float, lo: float = 0.0, hi: float = 9.0) -> float:
    beta = float(beta)
    if not lo <= beta <= hi:
        raise DomainError(f"beta={beta} outside [{lo}, {hi}]")
    return beta


def _csqrt(x) -> complex:
    return np.sqrt(complex(x))


# ---------------------------------------------------------------------------
# Coefficient paths
# ---------------------------------------------------------------------------

def B_matrix(beta: float, e: float = 0.0, t=0.0) -> np.ndarray:
    """B_{beta,e}(t); vectorized over t (returns (len(t), 4, 4) for array t)."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    s = np.sqrt(9 - beta)
    c = np.cos(t_arr)
    den = 2 * (1 + e * c)
    out = np.zeros((len(t_arr), 4, 4))
    out[:, 0, 0] = out[:, 1, 1] = 1.0
    out[:, 0, 3] = out[:, 3, 0] = 1.0
    out[:, 1, 2] = out[:, 2, 1] = -1.0
    out[:, 2, 2] = (2 * e * c - 1 - s) / den
    out[:, 3, 3] = (2 * e * c - 1 + s) / den
    return out[0] if np.ndim(t) == 0 else out


def K_matrix(beta: float) -> np.ndarray:
    s = np.sqrt(9 - beta)
    return np.diag([0.0, 0.0, (3 + s) / 2, (3 - s) / 2])


def cos_part(t, sign: int) -> np.ndarray:
    """cos^+ = max(cos, 0) for sign=+1, cos^- = min(cos, 0) for sign=-1."""
    c = np.cos(t)
    return np.maximum(c, 0.0) if sign > 0 else np.minimum(c, 0.0)


def _three_body_factory(params: dict, T: float) -> MatrixPath:
    beta = _check_beta(params["beta"])
    e = float(params.get("e", 0.0))
    if not 0 <= e < 1:
        raise DomainError("e must lie in [0, 1)")
    return MatrixPath(4, PERIOD, "builtin", lambda t: B_matrix(beta, e, t), True)


def _perturbation_factory(params: dict, T: float) -> MatrixPath:
    beta = _check_beta(params["beta"])
    e = float(params.get("e", 0.0))
    K = K_matrix(beta)
    return MatrixPath(4, PERIOD, "builtin",
                      lambda t: (e * np.cos(t) / (1 + e * np.cos(t)))[:, None, None] * K, True)


def _k_part_factory(params: dict, T: float) -> MatrixPath:
    beta = _check_beta(params["beta"])
    sign = int(params.get("sign", -1))
    K = K_matrix(beta)
    return MatrixPath(4, PERIOD, "builtin", lambda t: cos_part(t, sign)[:, None, None] * K, True)


register_builtin("three_body", _three_body_factory)
register_builtin("three_body_perturbation", _perturbation_factory)
register_builtin("three_body_k", _k_part_factory)


# ---------------------------------------------------------------------------
# Diagonalization of the e = 0 system
# ---------------------------------------------------------------------------

def thetas(beta: float) -> np.ndarray:
    """theta_1..theta_4; complex for beta > 1 (principal branch of sqrt(1 - beta))."""
    r = _csqrt(1 - beta)
    t1 = -np.sqrt((1 - r) / 2)
    t2 = np.sqrt((1 + r) / 2)
    return np.array([t1, t2, -t1, -t2])


def P_matrix(beta: float) -> np.ndarray:
    """Symplectic P_beta with P^{-1} J B_beta P = S_beta; needs beta in (0, 1) or (1, 9]."""
    beta = _check_beta(beta)
    if beta == 0 or beta == 1:
        raise DomainError("P_beta is singular at beta = 0 and beta = 1")
    r = _csqrt(1 - beta)
    s = np.sqrt(9 - beta)
    q = np.sqrt(r)
    ap, am = 2 + 2 * r, 2 - 2 * r
    Lp, Lm = np.sqrt(4 + r - s), np.sqrt(4 - r - s)
    P = np.zeros((4, 4), complex)
    P[0, 1] = ap ** 0.25 * (s - r) / (2 * q * Lp)
    P[1, 0] = -am ** 0.75 * (2 + s - r) / (2 * q * (3 + s) * Lm)
    P[0, 2] = -am ** 0.25 * (s + r) / (2 * q * Lm)
    P[1, 3] = ap ** 0.75 * (2 + s + r) / (2 * q * (3 + s) * Lp)
    P[2, 0] = am ** 0.75 * (4 + s + r) / (2 * q * (3 + s) * Lm)
    P[3, 1] = -2 * ap ** 0.25 / (q * Lp)
    P[2, 3] = -ap ** 0.75 * (s + 4 - r) / (2 * q * (3 + s) * Lp)
    P[3, 2] = 2 * am ** 0.25 / (q * Lm)
    return P


def S_matrix(beta: float) -> np.ndarray:
    """Block normal form: exp(S t) is the rotation R(theta_1 t) <> R(theta_2 t)."""
    th = thetas(beta)
    return J4 @ np.diag([th[0], th[1], th[0], th[1]])


def gamma0(beta: float, t) -> np.ndarray:
    """exp(J B_beta t) for scalar or array t."""
    A = J4 @ B_matrix(beta)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = expm(t_arr[:, None, None] * A[None])
    return out[0] if np.ndim(t) == 0 else out


@dataclass
class DiagonalizationData:
    beta: float
    theta: np.ndarray
    P: np.ndarray
    V: np.ndarray
    Dtilde: np.ndarray
    coeffs: dict
    Dnm: np.ndarray  # tabulated entries; equals 2 J D~

    def invariant_defects(self, n_times: int = 32) -> dict:
        """Max-norm defects of the structural identities of the diagonalization."""
        P, V, th = self.P, self.V, self.theta
        ts = np.linspace(0, PERIOD, n_times)
        G = gamma0(self.beta, ts)
        Vi = np.linalg.inv(V)
        frame = np.einsum("ij,tjk,kl->til", Vi, G, V)
        target = np.exp(1j * np.outer(ts, th))[:, :, None] * np.eye(4)[None]
        return {
            "symplectic": float(np.max(np.abs(P.T @ J4 @ P - J4))),
            "normal_form": float(np.max(np.abs(np.linalg.solve(P, J4 @ B_matrix(self.beta) @ P)
                                               - S_matrix(self.beta)))),
            "exponential_frame": float(np.max(np.abs(frame - target))),
            "D_table": float(np.max(np.abs(2 * J4 @ self.Dtilde - self.Dnm))),
        }


def diagonalization(beta: float) -> DiagonalizationData:
    P = P_matrix(beta)
    V = P @ np.linalg.inv(U_MAT)
    Ui = np.linalg.inv(U_MAT)
    Dt = Ui.T @ P.T @ K_matrix(beta) @ P @ Ui
    s = np.sqrt(9 - beta)
    d1, d2 = (3 + s) / 2, (3 - s) / 2
    co = {
        "a": P[2, 0] ** 2 * d1, "b": P[2, 0] * P[2, 3] * d1, "c": P[2, 3] ** 2 * d1,
        "h": P[3, 1] ** 2 * d2, "f": P[3, 1] * P[3, 2] * d2, "g": P[3, 2] ** 2 * d2,
    }
    return DiagonalizationData(float(beta), thetas(beta), P, V, Dt, co, _D_table(co))


def _D_table(co: dict) -> np.ndarray:
    a, b, c, h, f, g = (co[k] for k in "abchfg")
    D = np.zeros((4, 4), complex)
    D[0, 0], D[1, 1], D[2, 2], D[3, 3] = -(a + g), -(h + c), a + g, h + c
    D[0, 1] = -1j * (f - b)
    D[1, 0] = -D[0, 1]
    D[1, 2] = D[2, 1] = -1j * (f + b)
    D[1, 3] = c - h
    D[3, 1] = -D[1, 3]
    D[0, 2] = g - a
    D[2, 0] = -D[0, 2]
    D[0, 3] = D[3, 0] = -1j * (f + b)
    D[2, 3] = 1j * (b - f)
    D[3, 2] = -D[2, 3]
    return D


def _k_weights(th: np.ndarray, u: float) -> np.ndarray:
    z = np.exp(2j * np.pi * th)
    return z / (z - np.exp(2j * np.pi * u))


def _pole_distance(beta: float, u: float) -> float:
    z = np.exp(2j * np.pi * thetas(beta))
    return float(np.min(np.abs(z - np.exp(2j * np.pi * u))))


# ---------------------------------------------------------------------------
# f(beta, omega) = Tr[(K^-_beta (A - nu J - B_beta)^{-1})^2], omega = e^{2 pi i u}
# ---------------------------------------------------------------------------

def _as_u(omega) -> float:
    """Accept omega on the unit circle (complex) and return u in [0, 1)."""
    w = complex(omega)
    if abs(abs(w) - 1) > 1e-12:
        raise DomainError("omega must lie on the unit circle")
    return float(np.angle(w) / (2 * np.pi)) % 1.0


def _real_part(value: complex, what: str) -> float:
    if abs(value.imag) > 1e-9 * max(1.0, abs(value.real)):
        warnings.warn(f"{what} has imaginary residue {value.imag:.2e}", RuntimeWarning,
                      stacklevel=3)
    return float(value.real)


def f_closed(beta: float, omega) -> float:
    """Closed-form double sums 2 f_1 - f_2 over the D_nm table.

    Raises ResonanceError within TOL_RES of (theta_m - theta_n)^2 = 1 and within
    TOL_POLE of omega = e^{2 pi i theta_j}.
    """
    beta = _check_beta(beta)
    if beta == 0 or beta == 1:
        raise ResonanceError("closed form needs beta in (0, 1) or (1, 9]")
    u = _as_u(omega)
    th = thetas(beta)
    A = th[None, :] - th[:, None]  # A[n, m] = theta_m - theta_n
    den = A ** 2 - 1
    if np.min(np.abs(den)) < TOL_RES:
        raise ResonanceError(f"theta resonance at beta={beta}")
    if _pole_distance(beta, u) < TOL_POLE:
        raise ResonanceError(f"omega within {TOL_POLE} of a monodromy eigenvalue")
    D = diagonalization(beta).Dnm
    k = _k_weights(th, u)
    DD = D * D.T
    E = np.exp(1j * np.pi * A)
    I1 = (2 + 2 * E + 1j * np.pi * A * den) / (2 * den ** 2)
    I2 = (2 + E + 1 / E) / den ** 2
    f1 = 0.25 * np.sum(DD * k[:, None] * I1)
    f2 = 0.25 * np.sum(DD * k[:, None] * k[None, :] * I2)
    return _real_part(complex(2 * f1 - f2), "f_closed")


def _weight_panels(sign: int):
    if sign < 0:
        return [(np.pi / 2, 3 * np.pi / 2)]
    return [(0.0, np.pi / 2), (3 * np.pi / 2, 2 * np.pi)]


def _frame_integrals(th: np.ndarray, sign: int, nodes: int, splits: int):
    """First and second iterated integrals of w(t) e^{i(theta_m - theta_n) t} with
    w = cos^{sign}, by nested Gauss-Legendre on `splits` sub-panels per piece."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    A = th[None, :] - th[:, None]
    I1 = np.zeros((4, 4), complex)
    I2 = np.zeros((4, 4, 4), complex)  # I2[n, l, m]
    acc = np.zeros((4, 4), complex)  # running int_0^t w e^{i (theta_m - theta_l) s} ds
    for a0, b0 in _weight_panels(sign):
        edges = np.linspace(a0, b0, splits + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            h = 0.5 * (b - a)
            t = h * x + 0.5 * (a + b)
            wt = h * w * cos_part(t, sign)
            Eo = np.exp(1j * t[:, None, None] * A[None])  # [i, n, l]
            sh = 0.5 * (t - a)
            s = sh[:, None] * x[None, :] + 0.5 * (t + a)[:, None]
            ws = sh[:, None] * w[None, :] * cos_part(s, sign)
            Ei = np.exp(1j * s[:, :, None, None] * A[None, None])  # [i, j, l, m]
            inner = acc[None] + np.einsum("ij,ijlm->ilm", ws, Ei)
            I2 += np.einsum("i,inl,ilm->nlm", wt, Eo, inner)
            step = np.einsum("i,inl->nl", wt, Eo)
            I1 += step
            acc = acc + step
    return I1, I2


def f_quadrature(beta: float, omega, sign: int = -1, rtol: float = 1e-13) -> float:
    """f(beta, omega) from the m = 2 trace formula in the frame where gamma_0 is
    e^{i Theta t}, with nested Gauss-Legendre quadrature refined by panel doubling
    until successive values agree to ``rtol``.

    ``sign`` selects K^- (default) or K^+; both give the same value.
    """
    beta = _check_beta(beta)
    u = _as_u(omega)
    if _pole_distance(beta, u) < 1e-12:
        raise DomainError("omega is an eigenvalue of the unperturbed monodromy")
    dz = diagonalization(beta)
    C = np.linalg.solve(dz.V, J4 @ K_matrix(beta) @ dz.V)
    k = _k_weights(dz.theta, u)
    prev = None
    for splits in (1, 2, 4, 8, 16, 32):
        I1, I2 = _frame_integrals(dz.theta, sign, 40, splits)
        G1 = (C * I1) * k[None, :]
        M2 = np.einsum("nl,lm,nlm->nm", C, C, I2)
        val = complex(np.trace(G1 @ G1) - 2 * np.trace(M2 * k[None, :]))
        if prev is not None and abs(val - prev) <= rtol * max(1.0, abs(val)):
            return _real_part(val, "f_quadrature")
        prev = val
    warnings.warn("f_quadrature did not reach the requested tolerance", RuntimeWarning,
                  stacklevel=2)
    return _real_part(prev, "f_quadrature")


class _ExpmSolution:
    """Callable t -> exp(J B_beta t) with the interface of a fundamental solution."""

    def __init__(self, beta: float):
        self.beta = beta

    def __call__(self, t):
        return gamma0(self.beta, t)


def f_direct(beta: float, omega, sign: int = -1) -> float:
    """f(beta, omega) in the original real frame with gamma_0 = exp(J B_beta t).

    Valid for every beta in [0, 9], including the endpoints where P_beta is singular.
    """
    beta = _check_beta(beta)
    w = np.exp(2j * np.pi * _as_u(omega))
    K = MatrixPath(4, PERIOD, "function", lambda t: cos_part(t, sign)[:, None, None]
                   * K_matrix(beta), True)
    g0 = _ExpmSolution(beta)
    bps = [np.pi / 2, 3 * np.pi / 2]
    I1 = J4 @ integral_Dhat(g0, K, bps, nodes=24, n_panels=32)
    I2 = second_iterated_integral(g0, K, bps, nodes=24, n_panels=32)
    M = gamma0(beta, PERIOD)
    X = M @ np.linalg.inv(M - w * np.eye(4))
    G1 = I1 @ X
    return _real_part(complex(np.trace(G1 @ G1) - 2 * np.trace(I2 @ X)), "f_direct")


def f_value(beta: float, u: float) -> float:
    """f(beta, e^{2 pi i u}) by the best available route; +inf at a pole."""
    beta = _check_beta(beta)
    if _pole_distance(beta, u) < 1e-9:
        return float("inf")
    w = np.exp(2j * np.pi * u)
    if beta in (0.0, 1.0):
        return f_direct(beta, w)
    try:
        return f_closed(beta, w)
    except ResonanceError:
        return f_quadrature(beta, w)


def _refined_sup(fun, n_scan: int = 256):
    """sup over u in [0, 1) of a 1-periodic function: scan, then refine every local
    maximum above 0.9 * max with bounded Brent (golden section + parabolic steps)."""
    us = np.arange(n_scan) / n_scan
    vals = np.array([fun(u) for u in us])
    if np.any(np.isinf(vals)):
        return float("inf"), float(us[np.argmax(vals)])
    top = vals.max()
    best, best_u = top, float(us[np.argmax(vals)])
    for i in range(n_scan):
        left, right = vals[i - 1], vals[(i + 1) % n_scan]
        if vals[i] >= left and vals[i] >= right and vals[i] >= 0.9 * top:
            res = minimize_scalar(lambda v: -fun(v % 1.0), bounds=(us[i] - 1 / n_scan,
                                                                    us[i] + 1 / n_scan),
                                  method="bounded", options={"xatol": 1e-12})
            if -res.fun > best:
                best, best_u = -res.fun, float(res.x % 1.0)
    return float(best), best_u


def f_hat(beta: float) -> tuple[float, float]:
    """(sup_u f(beta, e^{2 pi i u}), maximizing u); +inf if a monodromy eigenvalue
    lies on the unit circle."""
    beta = _check_beta(beta)
    if np.any(np.abs(np.abs(np.exp(2j * np.pi * thetas(beta))) - 1) < 1e-12):
        return float("inf"), float("nan")
    return _refined_sup(lambda u: f_value(beta, u))


# ---------------------------------------------------------------------------
# g(beta, nu) = -Tr(J K_beta M (M - omega)^{-1}), M = gamma_0(2 pi)
# ---------------------------------------------------------------------------

def g_closed(beta: float, u: float) -> float:
    """Closed form of g for beta in (1, 9] and nu = i u."""
    beta = _check_beta(beta)
    if not beta > 1:
        raise DomainError("closed form of g needs beta in (1, 9]")
    r = _csqrt(1 - beta)
    s = np.sqrt(-1 + r)
    A = np.sqrt(2) * (-3 - beta + 3 * r) / (4 * r * s)
    q = np.sqrt(2) * np.pi * s
    X = (np.exp(-q) - np.exp(q)) / (2 * np.cos(2 * np.pi * u) - np.exp(-q) - np.exp(q))
    return float(2 * (A * X).real)


def g_frame(beta: float, u: float) -> float:
    """g as Tr(i J D~_beta diag(k_j)) in the diagonalizing frame."""
    dz = diagonalization(beta)
    k = _k_weights(dz.theta, u)
    return _real_part(complex(np.trace(1j * J4 @ dz.Dtilde @ np.diag(k))), "g_frame")


def g_direct(beta: float, u: float) -> float:
    """g from the real-frame monodromy; valid for every beta in [0, 9]."""
    M = gamma0(beta, PERIOD)
    w = np.exp(2j * np.pi * u)
    val = -np.trace(J4 @ K_matrix(beta) @ M @ np.linalg.inv(M - w * np.eye(4)))
    return _real_part(complex(val), "g_direct")


def g_value(beta: float, u: float) -> float:
    if _pole_distance(beta, u) < 1e-9:
        return float("inf")
    if beta > 1 + 1e-6:
        return g_closed(beta, u)
    return g_direct(beta, u)


def g_hat(beta: float) -> tuple[float, float]:
    beta = _check_beta(beta)
    if np.any(np.abs(np.abs(np.exp(2j * np.pi * thetas(beta))) - 1) < 1e-12):
        return float("inf"), float("nan")
    return _refined_sup(lambda u: g_value(beta, u))


def g_hat_bound(beta: float) -> float:
    """Elementary upper bound for g_hat on (1, 9]."""
    c, d, b = _cd(beta)
    q = np.sqrt(2) * np.pi
    return float(b ** 0.25 * np.sqrt(b + 15) / np.sqrt(2 * (b - 1))
                 * np.sqrt(np.exp(-2 * q * c) + np.exp(2 * q * c) - 2 * np.cos(2 * q * d))
                 / abs((np.exp(-q * c) - np.exp(q * c)) * np.sin(q * d)))


def _cd(beta: float):
    beta = _check_beta(beta)
    if not beta > 1:
        raise DomainError("needs beta in (1, 9]")
    s = np.sqrt(-1 + _csqrt(1 - beta))
    return s.real, s.imag, beta


def h_value(beta: float) -> float:
    """Reciprocal of the elementary bound on g_hat."""
    return 1.0 / g_hat_bound(beta)


def phi(e):
    """pi - 4/sqrt(1 - e^2) * atan(sqrt((1 - e)/(1 + e))); increasing from 0 at e = 0."""
    e = np.asarray(e, dtype=float)
    return np.pi - 4 / np.sqrt(1 - e ** 2) * np.arctan(np.sqrt((1 - e) / (1 + e)))


E_MAX = 1 - 1e-9


def solve_phi(target: float) -> float:
    """e in [0, 1 - 1e-9] with phi(e) = target, by bisection."""
    if not np.isfinite(target) or target <= 0:
        return 0.0
    if target >= phi(E_MAX):
        raise DomainError(f"phi(e) = {target} has no root in [0, 1)")
    return float(bisect(lambda e: phi(e) - target, 0.0, E_MAX, xtol=1e-15))


def beta0() -> tuple[float, float, float]:
    """(beta_0, h(beta_0), e(beta_0)): maximizer of h on (1, 9] and its eccentricity."""
    res = minimize_scalar(lambda b: -h_value(b), bounds=(1.0 + 1e-6, 9.0), method="bounded",
                          options={"xatol": 1e-10})
    hb = -res.fun
    return float(res.x), float(hb), solve_phi(hb)


# ---------------------------------------------------------------------------
# Region curves
# ---------------------------------------------------------------------------

CURVE_RELATIONS = {
    "Gamma1": "e = 1/(1 + sqrt f(beta, -1)), stable side",
    "Gamma2": "e = f(beta, -1)^(-1/2), stable side",
    "Gamma3": "e = 1/(1 + sqrt f(beta, exp(i sqrt2 pi))), stable side",
    "Gamma4": "e = f_hat(beta)^(-1/2), hyperbolic side",
    "Gamma5": "phi(e) = 1/g_hat(beta), hyperbolic side",
    "Gamma6": "e = f(beta, -1)^(-1/2), -1 nondegenerate side",
    "Gamma7": "phi(e) = 1/g(beta, i/2), -1 nondegenerate side",
}


@dataclass
class RegionCurve:
    tag: str
    beta: np.ndarray
    e: np.ndarray
    relation: str
    resolution: int
    failures: list = field(default_factory=list)


def _inv_sqrt(x: float) -> float:
    return 0.0 if np.isinf(x) else 1 / np.sqrt(x)


def _curve_point(tag: str, b: float) -> float:
    if tag == "Gamma1":
        fv = f_value(b, 0.5)
        return 0.0 if np.isinf(fv) else 1 / (1 + np.sqrt(fv))
    if tag in ("Gamma2", "Gamma6"):
        return _inv_sqrt(f_value(b, 0.5))
    if tag == "Gamma3":
        fv = f_value(b, SQRT2_OMEGA_U)
        return 0.0 if np.isinf(fv) else 1 / (1 + np.sqrt(fv))
    if tag == "Gamma4":
        return _inv_sqrt(f_hat(b)[0])
    if tag == "Gamma5":
        gh = g_hat(b)[0]
        return 0.0 if np.isinf(gh) else solve_phi(1 / gh)
    if tag == "Gamma7":
        gv = g_value(b, 0.5)
        return 0.0 if np.isinf(gv) else solve_phi(1 / gv)
    raise ValueError(tag)


CURVE_RANGES = {
    "Gamma1": (0.0, 0.75), "Gamma2": (0.75, 1.0), "Gamma3": (0.75, 1.0),
    "Gamma4": (1.0, 9.0), "Gamma5": (1.0, 9.0), "Gamma6": (1.0, 9.0), "Gamma7": (1.0, 9.0),
}


def _curve_task(args):
    tag, b = args
    try:
        return _curve_point(tag, b), None
    except DomainError as exc:
        return float("nan"), f"{tag} beta={b}: {exc}"


def region_curves(resolution: int = 400, tags=None, jobs: int | None = 1) -> list[RegionCurve]:
    """Sample the curves Gamma1..Gamma7 with ``resolution`` points each."""
    from .core import pmap

    if resolution < 50:
        raise ValueError("resolution must be >= 50")
    tags = list(tags or CURVE_RANGES)
    tasks = []
    grids = {}
    for tag in tags:
        lo, hi = CURVE_RANGES[tag]
        grids[tag] = np.linspace(lo, hi, resolution)
        tasks += [(tag, float(b)) for b in grids[tag]]
    results = pmap(_curve_task, tasks, jobs=jobs)
    curves, pos = [], 0
    for tag in tags:
        chunk = results[pos:pos + resolution]
        pos += resolution
        es = np.array([r[0] for r in chunk])
        fails = [r[1] for r in chunk if r[1]]
        curves.append(RegionCurve(tag, grids[tag], es, CURVE_RELATIONS[tag], resolution, fails))
    return curves


def curves_csv(curves: list[RegionCurve]) -> str:
    lines = ["curve_tag,beta,e"]
    for c in curves:
        for b, e in zip(c.beta, c.e):
            lines.append(f"{c.tag},{float(b)!r},{float(e)!r}")
    return "\n".join(lines) + "\n"


def landmark_O2() -> tuple[float, float]:
    """Crossing of Gamma2 and Gamma3 on (3/4, 1)."""
    F = lambda b: _curve_point("Gamma2", b) - _curve_point("Gamma3", b)
    b = brentq(F, 0.76, 0.99, xtol=1e-12)
    return float(b), _curve_point("Gamma2", b)


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def monodromy_eigenvalues(beta: float, e: float, tol: float = 1e-12) -> np.ndarray:
    from .monodromy import integrate_fundamental

    path = MatrixPath(4, PERIOD, "builtin", lambda t: B_matrix(beta, e, t), True)
    return np.linalg.eigvals(integrate_fundamental(path, 0.0, None, tol).final)


@dataclass
class Classification:
    beta: float
    e: float
    verdict: str  # linear-stable | hyperbolic | inconclusive
    theorem: str | None
    margin: float | None
    normal_form: str | None = None
    extra: list = field(default_factory=list)
    eigenvalues: np.ndarray | None = None
    configuration: str | None = None

    def as_dict(self) -> dict:
        out = {"beta": self.beta, "e": self.e, "verdict": self.verdict,
               "theorem": self.theorem, "margin": self.margin,
               "normal_form": self.normal_form, "extra_claims": self.extra}
        if self.eigenvalues is not None:
            out["monodromy_eigenvalues"] = self.eigenvalues
            out["configuration"] = self.configuration
        return out


def _configuration(eigs: np.ndarray) -> str:
    on = np.abs(np.abs(eigs) - 1) < UNIT_CIRCLE_TOL
    if np.all(on):
        return "elliptic"
    if not np.any(on):
        return "hyperbolic"
    return "mixed"


def classify_point(beta: float, e: float, crosscheck: bool = False) -> Classification:
    """Strongest certified claim at (beta, e) from the trace-formula criteria."""
    beta = _check_beta(beta)
    if not 0 <= e < 1:
        raise DomainError("e must lie in [0, 1)")
    verdict, thm, margin, nf = "inconclusive", None, None, None
    extra = []
    if beta < 0.75:
        bound = _curve_point("Gamma1", beta)
        if e < bound:
            verdict, thm, margin = "linear-stable", "stable-below-Gamma1", bound - e
            nf = "R(theta1)<>R(theta2), theta1, theta2 in (pi, 2 pi)"
    elif 0.75 < beta < 1:
        b2, b3 = _curve_point("Gamma2", beta), _curve_point("Gamma3", beta)
        bound = min(b2, b3)
        if e < bound:
            verdict, thm, margin = "linear-stable", "stable-below-Gamma2-Gamma3", bound - e
            nf = "R(theta1)<>R(theta2), theta1 in ((2 - sqrt2) pi, pi), theta2 in (sqrt2 pi, 2 pi)"
    elif beta > 1:
        b4 = _curve_point("Gamma4", beta)
        if e < b4:
            verdict, thm, margin = "hyperbolic", "hyperbolic-below-Gamma4", b4 - e
        else:
            b5 = _curve_point("Gamma5", beta)
            if e < b5:
                verdict, thm, margin = "hyperbolic", "hyperbolic-below-Gamma5", b5 - e
            elif beta >= BOX_BETA and e <= BOX_E:
                verdict, thm = "hyperbolic", "hyperbolic-box"
                margin = min(beta - BOX_BETA, BOX_E - e)
    if beta > 0.75:
        if e < _curve_point("Gamma6", beta):
            extra.append("minus-one-nondegenerate (below Gamma6)")
        elif beta >= 1 and e < _curve_point("Gamma7", beta):
            extra.append("minus-one-nondegenerate (below Gamma7)")
    out = Classification(beta, float(e), verdict, thm, margin, nf, extra)
    if crosscheck:
        eigs = monodromy_eigenvalues(beta, e)
        out.eigenvalues = eigs
        out.configuration = _configuration(eigs)
    return out


__all__ = [
    "B_matrix", "K_matrix", "P_matrix", "S_matrix", "thetas", "gamma0", "diagonalization",
    "DiagonalizationData", "f_closed", "f_quadrature", "f_direct", "f_value", "f_hat",
    "g_closed", "g_frame", "g_direct", "g_value", "g_hat", "g_hat_bound", "h_value", "phi",
    "solve_phi", "beta0", "region_curves", "RegionCurve", "curves_csv", "landmark_O2",
    "classify_point", "Classification", "mass_to_beta", "monodromy_eigenvalues",
    "quadruple_defect", "ResonanceError",
]
