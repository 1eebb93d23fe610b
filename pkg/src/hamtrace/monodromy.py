"""Fundamental solutions of z' = J(B + lam D) z and monodromy analysis."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853, OdeSolution, solve_ivp

from .core import BoundaryData, DomainError, MatrixPath, standard_J, zero_path

DEFAULT_TOL = 1e-10
DRIFT_BOUND = 1e-9
UNIT_CIRCLE_TOL = 1e-8
PAIRING_TOL = 1e-8
CLUSTER_TOL = 1e-6


class IntegrationError(DomainError):
    pass


@dataclass
class FundamentalSolution:
    """Dense solution gamma(t) on [t0, t1] with a symplecticity certificate."""

    times: np.ndarray
    gammas: np.ndarray
    interpolant: OdeSolution = field(repr=False)
    sympl_drift: float
    drift_exceeded: bool
    order: int
    steps: int
    rejected: int
    nfev: int
    tol: float
    lam: complex

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        d = self.gammas.shape[-1]
        y = self.interpolant(t)
        if t.ndim == 0:
            return y.reshape(d, d)
        return np.moveaxis(y, -1, 0).reshape(len(t), d, d)

    @property
    def final(self) -> np.ndarray:
        return self.gammas[-1]


def _symplectic_drift(gammas: np.ndarray) -> float:
    d = gammas.shape[-1]
    J = standard_J(d // 2)
    G = np.einsum("tji,jk,tkl->til", gammas, J, gammas)
    return float(np.max(np.abs(G - J)))


def integrate_fundamental(B: MatrixPath, lam: complex = 0.0, D: MatrixPath | None = None,
                          tol: float = DEFAULT_TOL, *, t_span: tuple[float, float] | None = None,
                          initial: np.ndarray | None = None,
                          drift_bound: float = DRIFT_BOUND) -> FundamentalSolution:
    """Integrate gamma' = J (B + lam D) gamma with an adaptive order 8(5,3) Runge-Kutta
    scheme and dense output.

    Parameters
    ----------
    B, D : MatrixPath
        Coefficient paths of equal dimension; ``D`` defaults to zero.
    lam : complex
        Spectral parameter.
    tol : float
        Relative and absolute tolerance of the step-size controller.
    t_span : tuple, optional
        Sub-interval of [0, T]; defaults to the whole period.
    initial : ndarray, optional
        Initial value at ``t_span[0]``; defaults to the identity.
    """
    d = B.dim
    if D is None:
        D = zero_path(d, B.period)
    if D.dim != d:
        raise ValueError("B and D must have the same dimension")
    if tol <= 0:
        raise ValueError("tol must be positive")
    t0, t1 = t_span if t_span is not None else (0.0, B.period)
    J = standard_J(d // 2)
    lam = complex(lam)
    use_complex = lam.imag != 0 or (initial is not None and np.iscomplexobj(initial))
    dtype = complex if use_complex else float
    lam_c = lam if use_complex else lam.real
    y0 = (np.eye(d) if initial is None else np.asarray(initial)).astype(dtype).ravel()
    D_zero = D.is_zero()

    def rhs(t, y):
        A = B.at(t) if D_zero else B.at(t) + lam_c * D.at(t)
        return ((J @ A) @ y.reshape(d, d)).ravel()

    solver = DOP853(rhs, t0, y0, t1, rtol=tol, atol=tol * 1e-2)
    ts = [t0]
    ys = [y0]
    interps = []
    steps = 0
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"integration failed at t={solver.t}: {msg}")
        steps += 1
        ts.append(solver.t)
        ys.append(solver.y.copy())
        interps.append(solver.dense_output())
    # nfev = 2 (initial) + 12 per attempt + 3 per dense output
    attempts = (solver.nfev - 2 - 3 * steps) / 12.0
    rejected = max(0, int(round(attempts)) - steps)
    ts = np.array(ts)
    gammas = np.array(ys).reshape(len(ts), d, d)
    drift = _symplectic_drift(gammas) if initial is None else float("nan")
    exceeded = bool(drift > drift_bound)
    if exceeded:
        warnings.warn(f"symplectic drift {drift:.2e} exceeds bound {drift_bound:.0e}",
                      RuntimeWarning, stacklevel=2)
    interp = OdeSolution(ts, interps)
    return FundamentalSolution(ts, gammas, interp, drift, exceeded, 7, steps, rejected,
                               solver.nfev, tol, lam)


def batch_endpoints(B: MatrixPath, D: MatrixPath, lams, tol: float = DEFAULT_TOL,
                    chunk: int = 128) -> np.ndarray:
    """gamma_lam(T) for many real or complex lam, integrated in vectorized chunks.

    Chunks are formed after sorting by |lam| so that one large parameter does not
    dictate the step size of many small ones.
    """
    lams = np.atleast_1d(np.asarray(lams))
    d = B.dim
    J = standard_J(d // 2)
    T = B.period
    out = np.empty((len(lams), d, d), dtype=complex)
    order = np.argsort(np.abs(lams), kind="stable")
    is_real = not np.iscomplexobj(lams) or np.all(np.imag(lams) == 0)
    for start in range(0, len(lams), chunk):
        idx = order[start:start + chunk]
        lc = lams[idx].real if is_real else lams[idx].astype(complex)
        L = len(idx)
        dtype = float if is_real else complex
        y0 = np.broadcast_to(np.eye(d, dtype=dtype), (L, d, d)).ravel()

        def rhs(t, y, lc=lc, L=L):
            Bt = B.at(t)
            Dt = D.at(t)
            A = (J @ Bt)[None] + lc[:, None, None] * (J @ Dt)[None]
            return (A @ y.reshape(L, d, d)).ravel()

        sol = solve_ivp(rhs, (0.0, T), y0, method="DOP853", rtol=tol, atol=tol * 1e-2)
        if sol.status != 0:
            raise IntegrationError(sol.message)
        out[idx] = sol.y[:, -1].reshape(L, d, d)
    return out if not is_real else out.real


# ---------------------------------------------------------------------------
# Monodromy analysis
# ---------------------------------------------------------------------------

def cluster_eigenvalues(eigs: np.ndarray, tol: float = CLUSTER_TOL):
    """Group nearby eigenvalues; returns list of (mean value, multiplicity)."""
    remaining = list(np.asarray(eigs, dtype=complex))
    clusters = []
    while remaining:
        mu = remaining.pop(0)
        members = [mu]
        keep = []
        for x in remaining:
            if abs(x - mu) <= tol * max(1.0, abs(mu)):
                members.append(x)
            else:
                keep.append(x)
        remaining = keep
        clusters.append((complex(np.mean(members)), len(members)))
    return clusters


def e_omega(eigs: np.ndarray, omega: complex, tol: float = UNIT_CIRCLE_TOL) -> int:
    """Number of eigenvalues (with multiplicity) on the unit-circle arc
    {e^{i theta} : |theta| <= |arg omega|}."""
    theta0 = abs(np.angle(omega))
    eigs = np.asarray(eigs, dtype=complex)
    on = np.abs(np.abs(eigs) - 1.0) < tol
    return int(np.sum(on & (np.abs(np.angle(eigs)) <= theta0 + tol)))


def quadruple_defect(eigs: np.ndarray) -> float:
    """Largest distance from an eigenvalue's symplectic partners to the spectrum.

    For a real symplectic matrix, mu in the spectrum implies 1/mu, conj(mu) and
    1/conj(mu) are too; the returned value is 0 for an exact quadruple structure.
    """
    eigs = np.asarray(eigs, dtype=complex)
    worst = 0.0
    for mu in eigs:
        for partner in (1 / mu, np.conj(mu), 1 / np.conj(mu)):
            worst = max(worst, float(np.min(np.abs(eigs - partner)) / max(1.0, abs(partner))))
    return worst


@dataclass
class MonodromyReport:
    M: np.ndarray
    eigenvalues: np.ndarray
    clusters: list
    classification: str
    degenerate_at: list
    e_omega: dict
    quadruple_ok: bool
    sympl_drift: float

    def as_dict(self) -> dict:
        return {
            "M": self.M,
            "eigenvalues": [{"value": v, "multiplicity": m} for v, m in self.clusters],
            "classification": self.classification,
            "degenerate_at": self.degenerate_at,
            "e_omega": [{"omega": w, "count": c} for w, c in self.e_omega.items()],
            "quadruple_ok": self.quadruple_ok,
            "sympl_drift": self.sympl_drift,
        }


def classify_spectrum(eigs: np.ndarray, tol: float = UNIT_CIRCLE_TOL) -> str:
    on = np.abs(np.abs(eigs) - 1.0) < tol
    if np.all(on):
        return "elliptic"
    if not np.any(on):
        return "hyperbolic"
    return "mixed"


def monodromy(B: MatrixPath, boundary: BoundaryData, lam: complex = 0.0,
              D: MatrixPath | None = None, tol: float = DEFAULT_TOL,
              omegas=None) -> MonodromyReport:
    """M = S gamma_lam(T), its spectrum and stability classification.

    ``omegas`` are unit-circle points at which degeneracy and e_omega are reported;
    the twist of ``boundary`` is always included.
    """
    fs = integrate_fundamental(B, lam, D, tol)
    M = boundary.S @ fs.final
    eigs = np.linalg.eigvals(M)
    qs = [boundary.omega] + [complex(w) for w in (omegas or [])]
    degenerate = [w for w in qs if np.min(np.abs(eigs - w)) < UNIT_CIRCLE_TOL]
    cls = classify_spectrum(eigs)
    if degenerate:
        cls = "degenerate"
    eo = {w: e_omega(eigs, w) for w in qs if abs(abs(w) - 1) < 1e-12}
    return MonodromyReport(M, eigs, cluster_eigenvalues(eigs), cls, degenerate, eo,
                           quadruple_defect(eigs) <= PAIRING_TOL ** 0.5, fs.sympl_drift)
