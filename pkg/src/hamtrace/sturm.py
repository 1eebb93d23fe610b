"""Sturm-Liouville problems -(P y' + Q y)' + Q^T y' + (R + lam R1) y = 0 with the
twisted boundary condition y(0) = omega Sbar y(T), their Hamiltonian (Legendre)
form, Lagrangian trace formulas and Krein's classical sums."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.integrate import quad_vec
from scipy.special import zeta

from .core import (BoundaryData, ConfigError, DomainError, MatrixPath, constant_path,
                   function_path, path_from_spec, zero_path)
from .iterated import TraceReport, trace_power
from .oracle import SpectrumSlice, _attach_tails, fourier_coefficients, toeplitz_blocks

SYM_TOL = 1e-12
COMPAT_TOL = 1e-10
QUAD_TOL = 1e-11


def _blockdiag_paths(top: np.ndarray, bottom: np.ndarray) -> np.ndarray:
    n = top.shape[-1]
    out = np.zeros(top.shape[:-2] + (2 * n, 2 * n), dtype=np.result_type(top, bottom))
    out[..., :n, :n] = top
    out[..., n:, n:] = bottom
    return out


@dataclass(eq=False)
class SturmLiouvilleProblem:
    """Coefficient paths of dimension n on [0, T], orthogonal Sbar and twist nu."""

    P: MatrixPath
    Q: MatrixPath
    R: MatrixPath
    R1: MatrixPath
    Sbar: np.ndarray
    nu: complex = 0.0
    T: float = 1.0
    p_condition: float = field(init=False, default=1.0)

    def __post_init__(self):
        self.Sbar = np.atleast_2d(np.array(self.Sbar, dtype=float))
        self.nu = complex(self.nu)
        self.T = float(self.T)
        n = self.P.dim
        for name in ("Q", "R", "R1"):
            p = getattr(self, name)
            if p.dim != n:
                raise ConfigError(f"{name} has dimension {p.dim}, expected {n}")
            if not np.isclose(p.period, self.T):
                raise ConfigError(f"{name} has period {p.period}, expected {self.T}")
        if self.Sbar.shape != (n, n):
            raise ConfigError(f"Sbar must be {n}x{n}")
        if np.max(np.abs(self.Sbar.T @ self.Sbar - np.eye(n))) > 1e-12:
            raise ConfigError("Sbar is not orthogonal")
        t = np.linspace(0, self.T, 257)
        Pt = self.P(t)
        conds = np.linalg.cond(Pt)
        if not np.all(np.isfinite(conds)) or np.max(conds) > 1e12:
            raise DomainError("P is singular at some sampled time")
        self.p_condition = float(np.max(conds))
        for name in ("P", "R", "R1"):
            vals = getattr(self, name)(t)
            if np.max(np.abs(vals - np.swapaxes(vals, 1, 2))) > SYM_TOL:
                raise ConfigError(f"{name} is not symmetric")
        S = self.Sbar
        for name in ("P", "Q"):
            p = getattr(self, name)
            if np.max(np.abs(S @ p(self.T) - p(0.0) @ S)) > COMPAT_TOL:
                raise ConfigError(f"Sbar is not compatible with {name} at the endpoints")

    @property
    def n(self) -> int:
        return self.P.dim

    @property
    def omega(self) -> complex:
        return complex(np.exp(self.nu * self.T))

    def boundary(self) -> BoundaryData:
        return BoundaryData(sla.block_diag(self.Sbar, self.Sbar), self.nu, self.T)


def to_hamiltonian(slp: SturmLiouvilleProblem, lam: float = 0.0) -> tuple[MatrixPath, BoundaryData]:
    """B_lam = [[P^-1, -P^-1 Q], [-Q^T P^-1, Q^T P^-1 Q - R - lam R1]] and Sbar_d = diag(Sbar, Sbar)."""
    P, Q, R, R1 = slp.P, slp.Q, slp.R, slp.R1

    def fn(t):
        Pi = np.linalg.inv(P(t))
        Qt = Q(t)
        QT = np.swapaxes(Qt, 1, 2)
        top = np.concatenate([Pi, -Pi @ Qt], axis=2)
        bot = np.concatenate([-QT @ Pi, QT @ Pi @ Qt - R(t) - lam * R1(t)], axis=2)
        out = np.concatenate([top, bot], axis=1)
        return 0.5 * (out + np.swapaxes(out, 1, 2))

    return function_path(fn, 2 * slp.n, slp.T, symmetric=True), slp.boundary()


def hamiltonian_data(slp: SturmLiouvilleProblem) -> tuple[MatrixPath, MatrixPath, BoundaryData]:
    """(B_0, D, Sbar_d) with D = diag(0, -R1), so that B_lam = B_0 + lam D."""
    B0, bd = to_hamiltonian(slp, 0.0)
    n = slp.n
    if slp.R1.is_zero():
        D = zero_path(2 * n, slp.T)
    else:
        R1 = slp.R1
        D = function_path(lambda t: _blockdiag_paths(np.zeros((len(t), n, n)), -R1(t)),
                          2 * n, slp.T, symmetric=True)
    return B0, D, bd


def _derivative(path: MatrixPath, h: float = 1e-3):
    """Fourth-order finite differences, one-sided within 2h of the endpoints."""
    T = path.period
    fwd = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12 * h)
    cen = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12 * h)

    def d(t):
        t = np.asarray(t, float)
        out = np.empty((t.size, path.dim, path.dim))
        lo, hi = t < 2 * h, t > T - 2 * h
        mid = ~(lo | hi)
        if np.any(mid):
            tm = t[mid]
            out[mid] = sum(c * path(tm + k * h) for c, k in zip(cen, range(-2, 3)) if c)
        if np.any(lo):
            tl = t[lo]
            out[lo] = sum(c * path(tl + k * h) for k, c in enumerate(fwd))
        if np.any(hi):
            th = t[hi]
            out[hi] = -sum(c * path(th - k * h) for k, c in enumerate(fwd))
        return out

    return d


def normalized_problem(slp: SturmLiouvilleProblem) -> SturmLiouvilleProblem:
    """Same operator with P = I and the skew first-order coefficient.

    For P = I the operator is -y'' + Qhat y' + Rhat y with Qhat = Q^T - Q and
    Rhat = R - Q'. It is rewritten with Q' = -Qhat/2 (skew) and R' = R - (Q + Q^T)'/2,
    a second Legendre transform of the same operator.
    """
    n = slp.n
    t = np.linspace(0, slp.T, 33)
    if np.max(np.abs(slp.P(t) - np.eye(n)[None])) > 1e-14:
        raise DomainError("normalized form needs P = I")
    Q, R = slp.Q, slp.R
    dQ = _derivative(Q)

    def qs(t):
        q = Q(t)
        return 0.5 * (q - np.swapaxes(q, 1, 2))

    def rs(t):
        d = dQ(t)
        out = R(t) - 0.5 * (d + np.swapaxes(d, 1, 2))
        return 0.5 * (out + np.swapaxes(out, 1, 2))

    return SturmLiouvilleProblem(slp.P, function_path(qs, n, slp.T), function_path(rs, n, slp.T, True),
                                 slp.R1, slp.Sbar, slp.nu, slp.T)


def lagrangian_trace(slp: SturmLiouvilleProblem, m_max: int = 3, tol: float = 1e-12) -> TraceReport:
    """sum_j 1/lam_j^m for m <= m_max through the Hamiltonian form.

    The eigenvalue problem A(nu) y + lam R1 y = 0 is trace class, so the m = 1 value
    is an honest eigenvalue sum. Equivalently (-1)^m Tr[(R1 A(nu)^-1)^m].
    """
    B0, D, bd = hamiltonian_data(slp)
    return trace_power(B0, D, bd, m_max, tol)


# ---------------------------------------------------------------------------
# Fourier-Galerkin frame for the second-order operator
# ---------------------------------------------------------------------------

def _sl_shift(slp: SturmLiouvilleProblem) -> float:
    n = slp.n
    if np.array_equal(slp.Sbar, np.eye(n)):
        return 0.0
    if np.array_equal(slp.Sbar, -np.eye(n)):
        return np.pi
    raise DomainError("Galerkin frame supports Sbar = I and Sbar = -I only")


def sl_galerkin(slp: SturmLiouvilleProblem, N: int, rows=None):
    """Matrices of A(nu) and R1 on Fourier modes; ``rows`` selects test modes (default |k| <= N).

    With c_k = i omega_k + nu the entries are
    -c_k c_l P_{k-l} - c_k Q_{k-l} + c_l (Q^T)_{k-l} + R_{k-l}.
    """
    shift = _sl_shift(slp)
    kc = 3 * N
    Pc, Qc, Rc, R1c = (fourier_coefficients(p, kc) for p in (slp.P, slp.Q, slp.R, slp.R1))
    QTc = np.conj(Qc[::-1]).transpose(0, 2, 1)
    cols = np.arange(-N, N + 1)
    rows = cols if rows is None else np.asarray(rows)
    n = slp.n
    ck = 1j * (2 * np.pi * rows + shift) / slp.T + slp.nu
    cl = 1j * (2 * np.pi * cols + shift) / slp.T + slp.nu
    rk = np.repeat(ck, n)
    cl_ = np.repeat(cl, n)
    Pm = toeplitz_blocks(Pc, N, rows, cols)
    Qm = toeplitz_blocks(Qc, N, rows, cols)
    QTm = toeplitz_blocks(QTc, N, rows, cols)
    A = (-(rk[:, None] * cl_[None, :]) * Pm - rk[:, None] * Qm + cl_[None, :] * QTm
         + toeplitz_blocks(Rc, N, rows, cols))
    W = toeplitz_blocks(R1c, N, rows, cols)
    return A, W


def _definiteness(path: MatrixPath) -> int:
    t = np.linspace(0, path.period, 513)
    ev = np.linalg.eigvalsh(path(t))
    if np.min(ev) > 0:
        return 1
    if np.max(ev) < 0:
        return -1
    return 0


def sl_eigenvalues(slp: SturmLiouvilleProblem, N: int = 200, rel_tol: float = 1e-7) -> SpectrumSlice:
    """Eigenvalues of A(nu) y + lam R1 y = 0 in the Fourier frame.

    For definite R1 and imaginary nu the pencil is Hermitian-definite and each Ritz
    value carries a residual bound from the coupling to modes N < |k| <= 2N. For
    indefinite R1 the error is the distance to the nearest Ritz value at 3N/4.
    """
    A, W = sl_galerkin(slp, N)
    sgn = _definiteness(slp.R1)
    hermitian = abs(slp.nu.real) == 0
    if sgn != 0 and hermitian:
        # A x = -lam W x  <=>  (-sgn A) x = lam (sgn W) x with sgn W > 0
        A = 0.5 * (A + A.conj().T)
        W = 0.5 * (W + W.conj().T)
        lam, X = sla.eigh(-sgn * A, sgn * W)
        outside = np.concatenate([np.arange(-2 * N, -N), np.arange(N + 1, 2 * N + 1)])
        Ao, Wo = sl_galerkin(slp, N, outside)
        Rres = Ao @ X + (Wo @ X) * lam[None, :]
        t = np.linspace(0, slp.T, 513)
        wmin = float(np.min(np.abs(np.linalg.eigvalsh(slp.R1(t)))))
        errs = np.linalg.norm(Rres, axis=0) / np.sqrt(wmin)
    else:
        lam = _sl_general(A, W)
        N2 = max(4, (3 * N) // 4)
        A2, W2 = sl_galerkin(slp, N2)
        lam2 = _sl_general(A2, W2)
        errs = np.array([np.min(np.abs(lam2 - x)) for x in lam])
    good = errs <= rel_tol * np.maximum(1.0, np.abs(lam))
    order = np.argsort(np.abs(lam))
    keep = []
    for i in order:
        if not good[i]:
            break
        keep.append(i)
    keep = np.array(sorted(keep, key=lambda i: lam[i].real), dtype=int)
    lam_k = lam[keep]
    if np.all(np.abs(np.imag(lam_k)) <= 1e-9 * np.maximum(1, np.abs(lam_k))):
        lam_k = lam_k.real
    window = (float(np.min(lam_k.real)), float(np.max(lam_k.real))) if len(keep) else (0.0, 0.0)
    sl = SpectrumSlice(lam_k, np.ones(len(keep), int), window, "galerkin", 2, errs[keep])
    return _attach_tails(sl)


def _sl_general(A, W):
    # eigenvalues of A^{-1}(-W) are 1/lam
    mu = np.linalg.eigvals(np.linalg.solve(A, -W))
    mu = mu[np.abs(mu) > 1e-14 * max(1.0, np.max(np.abs(mu)))]
    return 1.0 / mu


def sl_operator_trace(slp: SturmLiouvilleProblem, m: int, N: int = 200) -> complex:
    """Tr[(R1 A(nu)^-1)^m] on the truncated Fourier frame."""
    A, W = sl_galerkin(slp, N)
    X = np.linalg.solve(A.T, W.T).T  # W A^-1
    return complex(np.trace(np.linalg.matrix_power(X, m)))


def smallest_eigenvalue(slp: SturmLiouvilleProblem, N: int = 64) -> float:
    """Smallest eigenvalue of the Galerkin compression of A(nu) (imaginary nu)."""
    A, _ = sl_galerkin(slp, N)
    return float(np.min(np.linalg.eigvalsh(0.5 * (A + A.conj().T))))


# ---------------------------------------------------------------------------
# Closed forms for A(nu) = -(d/dt + nu)^2
# ---------------------------------------------------------------------------

def free_resolvent_trace(R_ave, Sbar, omega: complex, T: float) -> complex:
    """Tr(R A(nu)^-1) = -omega T^2 Tr(R_ave Sbar (Sbar - omega)^-2) for A(nu) = -(d/dt + nu)^2."""
    R_ave, Sbar = np.atleast_2d(R_ave), np.atleast_2d(Sbar)
    X = np.linalg.inv(Sbar - omega * np.eye(len(Sbar)))
    return complex(-omega * T ** 2 * np.trace(R_ave @ Sbar @ X @ X))


def free_resolvent_trace2(R_ave, Sbar, omega: complex, T: float) -> complex:
    """Tr(R A(nu)^-2) = (omega T^4/6) Tr(R_ave Sbar (Sbar^2 + 4 omega Sbar + omega^2)(Sbar - omega)^-4)."""
    R_ave, Sbar = np.atleast_2d(R_ave), np.atleast_2d(Sbar)
    I = np.eye(len(Sbar))
    X = np.linalg.inv(Sbar - omega * I)
    X4 = X @ X @ X @ X
    return complex(omega * T ** 4 / 6 * np.trace(R_ave @ Sbar @ (Sbar @ Sbar + 4 * omega * Sbar
                                                                   + omega ** 2 * I) @ X4))


def free_mode_sum(r: float, T: float, nu: complex, power: int, antiperiodic: bool = False,
                  K: int | None = None) -> float:
    """sum_k r / kappa_k^(2 power) over the Fourier modes of -(d/dt + nu)^2, n = 1.

    kappa_k = (2 pi k + shift)/T + nu/i. With ``K`` the sum is truncated at |k| <= K;
    otherwise the two half-lattices are summed exactly with Hurwitz zeta values.
    """
    u = (nu / 1j).real
    a = ((np.pi if antiperiodic else 0.0) + u * T) / (2 * np.pi)
    p = 2 * power
    if K is not None:
        k = np.arange(-K, K + 1)
        return float(np.sum(r * (T / (2 * np.pi)) ** p / (k + a) ** p))
    a0 = a - np.floor(a)
    if a0 == 0:
        raise DomainError("zero mode: A(nu) is degenerate")
    return float(r * (T / (2 * np.pi)) ** p * (zeta(p, a0) + zeta(p, 1 - a0)))


# ---------------------------------------------------------------------------
# Krein's sums for y'' + lam R y = 0, y(0) + y(T) = 0
# ---------------------------------------------------------------------------

@dataclass
class KreinData:
    R: MatrixPath
    T: float
    R_ave: np.ndarray = field(init=False)
    C: np.ndarray = field(init=False)
    _nodes: tuple = field(init=False, repr=False)

    def __post_init__(self):
        n = self.R.dim
        total = quad_vec(lambda t: self.R(t), 0.0, self.T, epsabs=QUAD_TOL, epsrel=QUAD_TOL)[0]
        self.R_ave = total / self.T
        t, w, Y = self._cumulative()
        # X = Y + C with zero average
        self.C = -np.einsum("t,tij->ij", w, Y) / self.T
        self._nodes = (t, w, Y + self.C[None])

    def _cumulative(self, panels: int = 64, q: int = 20):
        x, w = np.polynomial.legendre.leggauss(q)
        edges = np.linspace(0.0, self.T, panels + 1)
        ts, ws, Ys = [], [], []
        acc = np.zeros((self.R.dim, self.R.dim))
        for a, b in zip(edges[:-1], edges[1:]):
            h = 0.5 * (b - a)
            tn = a + h * (x + 1)
            # int_a^{tn} (R - R_ave) for each node, by Gauss on [a, tn]
            sub = a + np.outer(tn - a, (x + 1) / 2)
            vals = self.R(sub.ravel()).reshape(q, q, self.R.dim, self.R.dim) - self.R_ave
            inner = np.einsum("j,ijkl->ikl", w, vals) * ((tn - a) / 2)[:, None, None]
            ts.append(tn)
            ws.append(w * h)
            Ys.append(acc[None] + inner)
            full = self.R(tn) - self.R_ave
            acc = acc + np.einsum("j,jkl->kl", w * h, full)
        return np.concatenate(ts), np.concatenate(ws), np.concatenate(Ys)

    def X(self, t):
        """X(t) = int_0^t (R - R_ave) ds + C."""
        t = np.atleast_1d(np.asarray(t, float))
        x, w = np.polynomial.legendre.leggauss(20)
        sub = np.outer(t, (x + 1) / 2)
        vals = self.R(sub.ravel()).reshape(len(t), 20, self.R.dim, self.R.dim) - self.R_ave
        return np.einsum("j,ijkl->ikl", w, vals) * (t / 2)[:, None, None] + self.C

    def mean_X(self) -> np.ndarray:
        t, w, X = self._nodes
        return np.einsum("t,tij->ij", w, X) / self.T


def krein_sums(kd: KreinData) -> tuple[float, float]:
    """(sum 1/lam_j, sum 1/lam_j^2) for y'' + lam R y = 0 with y(0) + y(T) = 0.

    sum1 = (T/4) int Tr R and sum2 = (T/2) int Tr X^2 + (T^2/48) Tr[(int R)^2],
    eigenvalues counted with multiplicity.
    """
    T = kd.T
    intR = kd.R_ave * T
    _, w, X = kd._nodes
    s1 = T / 4 * float(np.trace(intR))
    s2 = T / 2 * float(np.einsum("t,tij,tji->", w, X, X)) + T ** 2 / 48 * float(np.trace(intR @ intR))
    return s1, s2


def krein_problem(R: MatrixPath) -> SturmLiouvilleProblem:
    """y'' + lam R y = 0, y(0) = -y(T) as A y + lam R1 y = 0 with P = I, R1 = -R."""
    n, T = R.dim, R.period
    return SturmLiouvilleProblem(constant_path(np.eye(n), T), zero_path(n, T), zero_path(n, T),
                                 R.scaled(-1.0), -np.eye(n), 0.0, T)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def parse_sl_config(document) -> SturmLiouvilleProblem:
    """SL problem from JSON with fields n, T, nu, Sbar, P, Q, R, R1 (paths as in problem configs)."""
    if isinstance(document, (str, os.PathLike)):
        text = str(document)
        if not text.lstrip().startswith("{"):
            with open(text) as fh:
                text = fh.read()
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    missing = [k for k in ("n", "T", "P", "R1") if k not in document]
    if missing:
        raise ConfigError(f"missing fields: {', '.join(missing)}")
    n = int(document["n"])
    T = float(document["T"])
    nu = document.get("nu", [0.0, 0.0])
    nu = complex(float(nu[0]), float(nu[1]))
    Sb = document.get("Sbar", "identity")
    Sbar = np.eye(n) if Sb == "identity" else -np.eye(n) if Sb == "anti" else np.array(Sb, float)
    paths = {}
    for key in ("P", "Q", "R", "R1"):
        spec = document.get(key)
        paths[key] = zero_path(n, T) if spec is None else path_from_spec(spec, T)
    return SturmLiouvilleProblem(paths["P"], paths["Q"], paths["R"], paths["R1"], Sbar, nu, T)


def parse_krein_config(document) -> KreinData:
    if isinstance(document, (str, os.PathLike)):
        text = str(document)
        if not text.lstrip().startswith("{"):
            with open(text) as fh:
                text = fh.read()
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    missing = [k for k in ("T", "R") if k not in document]
    if missing:
        raise ConfigError(f"missing fields: {', '.join(missing)}")
    T = float(document["T"])
    if T <= 0:
        raise ConfigError("T must be positive")
    return KreinData(path_from_spec(document["R"], T), T)


__all__ = [
    "SturmLiouvilleProblem", "KreinData", "to_hamiltonian", "hamiltonian_data",
    "normalized_problem", "lagrangian_trace", "sl_galerkin", "sl_eigenvalues",
    "sl_operator_trace", "smallest_eigenvalue", "free_resolvent_trace", "free_resolvent_trace2",
    "free_mode_sum", "krein_sums", "krein_problem", "parse_sl_config", "parse_krein_config",
]
