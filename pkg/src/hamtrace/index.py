"""Trace-based bounds on relative Morse indices, non-degeneracy certificates and
stability/hyperbolicity criteria."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BoundaryData, DomainError, MatrixPath, standard_J
from .iterated import integral_Dhat, trace_power
from .monodromy import classify_spectrum, integrate_fundamental
from .oracle import GridTooCoarseError, eigenvalues_by_shooting

BRACKET_MARGIN = 1e-10
ORDER_TOL = 1e-12
FLOOR_SLACK = 1e-9
HYPOTHESIS_TOL = 1e-8
NU_GRID = 64


def _eig_range(path: MatrixPath, n: int = 513):
    t = np.linspace(0, path.period, n)
    ev = np.linalg.eigvalsh(path(t))
    return float(np.min(ev)), float(np.max(ev))


def check_bracket(D: MatrixPath, D1: MatrixPath, D2: MatrixPath) -> None:
    """Raise DomainError unless D1 < 0 < D2 and D1 <= D <= D2 on a time grid."""
    if _eig_range(D1)[1] > -BRACKET_MARGIN:
        raise DomainError("lower bracket D1 is not negative definite")
    if _eig_range(D2)[0] < BRACKET_MARGIN:
        raise DomainError("upper bracket D2 is not positive definite")
    if _eig_range(D + D1.scaled(-1.0))[0] < -ORDER_TOL:
        raise DomainError("D1 <= D fails")
    if _eig_range(D2 + D.scaled(-1.0))[0] < -ORDER_TOL:
        raise DomainError("D <= D2 fails")


def _even_traces(B, Dj, boundary, k_max, tol):
    tr = trace_power(B, Dj, boundary, k_max, tol)
    return {k: float(tr.values[k].real) for k in range(2, k_max + 1, 2)}


def nondegeneracy_certificate(B: MatrixPath, D: MatrixPath, boundary: BoundaryData,
                              D1: MatrixPath, D2: MatrixPath, k_max: int = 4,
                              tol: float = 1e-12) -> bool:
    """True when some even k <= k_max has Tr[(D_j F)^k] <= 1 for both brackets,
    F = (A - B - nu J)^-1; this certifies that A - B - D - nu J is non-degenerate.
    False is inconclusive."""
    check_bracket(D, D1, D2)
    t1 = _even_traces(B, D1, boundary, k_max, tol)
    t2 = _even_traces(B, D2, boundary, k_max, tol)
    return any(t1[k] <= 1 and t2[k] <= 1 for k in t1)


@dataclass
class Crossing:
    lam: float
    multiplicity: int
    n_plus: int
    n_minus: int
    contribution: int


@dataclass
class IndexBoundReport:
    m_minus: int
    m_plus: int
    traces_lower: dict
    traces_upper: dict
    nondegenerate: bool
    crossings: list = field(default_factory=list)
    crossing_total: int | None = None
    oracle_error: str | None = None

    @property
    def bracket(self) -> tuple[int, int]:
        return -self.m_minus, self.m_plus

    @property
    def consistent(self) -> bool | None:
        if self.crossing_total is None:
            return None
        return -self.m_minus <= self.crossing_total <= self.m_plus

    def as_dict(self) -> dict:
        return {
            "m_minus": self.m_minus, "m_plus": self.m_plus,
            "bracket": list(self.bracket),
            "traces_lower": self.traces_lower, "traces_upper": self.traces_upper,
            "nondegenerate": self.nondegenerate,
            "crossings": [vars(c) for c in self.crossings],
            "crossing_total": self.crossing_total,
            "consistent": self.consistent,
            "oracle_error": self.oracle_error,
        }


def crossing_form(B: MatrixPath, D: MatrixPath, boundary: BoundaryData, lam: float,
                  multiplicity: int, tol: float = 1e-12) -> np.ndarray:
    """Restriction of int z^* D z to ker(A - nu J - B - lam D), in the basis of
    ker(S gamma_lam(T) - omega I) given by the smallest right singular vectors."""
    g = integrate_fundamental(B, lam, D, tol)
    M = boundary.S @ g.final
    d = M.shape[0]
    _, _, Vh = np.linalg.svd(M - boundary.omega * np.eye(d))
    V = Vh[-multiplicity:].conj().T
    W = integral_Dhat(g, D)
    Q = V.conj().T @ W @ V
    return 0.5 * (Q + Q.conj().T)


def crossing_count(B: MatrixPath, D: MatrixPath, boundary: BoundaryData, grid: int = 400,
                   tol: float = 1e-11) -> tuple[int, list]:
    """Signed crossing count of s -> A - nu J - B - s D over s in (0, 1].

    A crossing at s0 in (0, 1) adds n_+ - n_- of the crossing form; at s0 = 1 only
    -n_- is added, since a kernel at the endpoint is not yet negative.
    """
    if abs(boundary.nu.real) > 0:
        raise DomainError("crossing count needs imaginary nu")
    sl = eigenvalues_by_shooting(B, D, boundary, (0.0, 1.0), grid, tol, open_left=True)
    out, total = [], 0
    for lam, mult in zip(sl.eigenvalues, sl.multiplicities):
        Q = crossing_form(B, D, boundary, float(lam), int(mult))
        ev = np.linalg.eigvalsh(Q)
        scale = max(1e-300, float(np.max(np.abs(ev))))
        if np.min(np.abs(ev)) <= 1e-8 * scale:
            raise DomainError(f"non-regular crossing at s = {lam}")
        npl, nmi = int(np.sum(ev > 0)), int(np.sum(ev < 0))
        at_end = abs(lam - 1.0) <= 1e-8
        c = -nmi if at_end else npl - nmi
        total += c
        out.append(Crossing(float(lam), int(mult), npl, nmi, c))
    return total, out


def index_bracket(B: MatrixPath, D: MatrixPath, boundary: BoundaryData, D1: MatrixPath,
                  D2: MatrixPath, k_max: int = 4, oracle: bool = True, grid: int = 400,
                  tol: float = 1e-12) -> IndexBoundReport:
    """Bracket [-m_minus, m_plus] of the relative Morse index of A - B - nu J and
    A - B - D - nu J, m = min over even k of floor Tr[(D_j F)^k], together with
    the oracle's signed crossing count over s in (0, 1]."""
    check_bracket(D, D1, D2)
    t1 = _even_traces(B, D1, boundary, k_max, tol)
    t2 = _even_traces(B, D2, boundary, k_max, tol)
    m_minus = min(int(np.floor(v + FLOOR_SLACK)) for v in t1.values())
    m_plus = min(int(np.floor(v + FLOOR_SLACK)) for v in t2.values())
    nondeg = any(t1[k] <= 1 and t2[k] <= 1 for k in t1)
    rep = IndexBoundReport(max(m_minus, 0), max(m_plus, 0), t1, t2, nondeg)
    if oracle:
        try:
            rep.crossing_total, rep.crossings = crossing_count(B, D, boundary, grid)
        except (GridTooCoarseError, DomainError) as exc:
            rep.oracle_error = str(exc)
    return rep


# ---------------------------------------------------------------------------
# Stability criteria
# ---------------------------------------------------------------------------

CLAIM_RANK = {"inconclusive": 0, "elliptic-count": 1, "spectrally-stable": 2, "hyperbolic": 2}


@dataclass
class StabilityVerdict:
    omegas: list
    entries: list
    claim: str
    theorem: str | None

    def as_dict(self) -> dict:
        return {"omegas": self.omegas, "entries": self.entries, "claim": self.claim,
                "theorem": self.theorem}


def _is_time_symmetric(D: MatrixPath, n: int = 129) -> bool:
    t = np.linspace(0, D.period, n)
    return bool(np.max(np.abs(D(t) - D(D.period - t))) <= HYPOTHESIS_TOL)


def _definite_sign(path: MatrixPath, strict: bool = True) -> int:
    lo, hi = _eig_range(path)
    if (lo > 0) if strict else (lo >= -ORDER_TOL):
        return 1
    if (hi < 0) if strict else (hi <= ORDER_TOL):
        return -1
    return 0


def stability_criteria(B: MatrixPath, D: MatrixPath, boundary: BoundaryData, omegas,
                       tol: float = 1e-12) -> StabilityVerdict:
    """Evaluate trace-based stability criteria for z' = J(B + D) z.

    Criteria, each applied only when its structural hypothesis holds numerically:

    * constant-B-lambda-max: B constant, JB = BJ, exp(JBT) = I, D >= 0, int D > 0 and
      int lambda_max(D) dt < 2 give spectral stability.
    * identity-monodromy: M = I, D definite and omega/(1 - omega)^2 Tr[(J int Dhat)^2] <= 1
      give e_omega(M~)/2 = n (halved bound when B = 0 and D(t) = D(T - t)).
    * hyperbolic-persistence: M hyperbolic, D semidefinite and
      Tr[(D(A - nu J - B)^-1)^2] <= 1 on a grid of nu in i[0, pi/T] give M~ hyperbolic.
    """
    d = B.dim
    n = d // 2
    T = boundary.T
    J = standard_J(n)
    omegas = [complex(w) for w in omegas]
    entries = []
    g0 = integrate_fundamental(B, 0.0, None, tol)
    M = boundary.S @ g0.final
    I = np.eye(d)

    # constant B with exp(JBT) = I
    if B.kind == "constant" and boundary.kind == "identity":
        Bc = B.spec_matrix()
        ok = (np.max(np.abs(J @ Bc - Bc @ J)) <= HYPOTHESIS_TOL
              and np.max(np.abs(M - I)) <= HYPOTHESIS_TOL
              and _definite_sign(D, strict=False) == 1)
        if ok:
            x, w = np.polynomial.legendre.leggauss(40)
            edges = np.linspace(0, T, 33)
            a, b = edges[:-1, None], edges[1:, None]
            t = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
            wt = (0.5 * (b - a) * w).ravel()
            ev = np.linalg.eigvalsh(D(t))
            integral_D = np.einsum("t,tij->ij", wt, D(t))
            lam_int = float(wt @ ev[:, -1])
            positive = np.min(np.linalg.eigvalsh(integral_D)) > 0
            entries.append({"criterion": "constant-B-lambda-max", "omega": None,
                            "value": lam_int, "threshold": 2.0,
                            "satisfied": bool(positive and lam_int < 2),
                            "claim": "spectrally-stable" if positive and lam_int < 2
                            else "inconclusive"})

    # M = I with definite D
    if np.max(np.abs(M - I)) <= HYPOTHESIS_TOL:
        sgn = _definite_sign(D)
        if sgn != 0:
            A = J @ integral_Dhat(g0, D)
            A2 = complex(np.trace(A @ A))
            symmetric = B.kind == "constant" and not np.any(B.spec_matrix()) and _is_time_symmetric(D)
            for w in omegas:
                if abs(abs(w) - 1) > 1e-12 or abs(w - 1) < 1e-12:
                    continue
                val = (w / (1 - w) ** 2 * A2).real
                if symmetric:
                    val /= 2
                sat = val <= 1
                claim = "inconclusive"
                if sat:
                    claim = "spectrally-stable" if abs(w + 1) < 1e-12 else "elliptic-count"
                entries.append({"criterion": "identity-monodromy" + ("-symmetric" if symmetric else ""),
                                "omega": w, "value": val, "threshold": 1.0, "satisfied": bool(sat),
                                "claim": claim, "e_omega": 2 * n if sat else None})

    # hyperbolic persistence
    if classify_spectrum(np.linalg.eigvals(M)) == "hyperbolic" and _definite_sign(D, strict=False) != 0:
        nus = 1j * np.linspace(0.0, np.pi / T, NU_GRID)
        worst = -np.inf
        for nu in nus:
            v = trace_power(B, D, boundary.with_nu(nu), 2, tol).values[2].real
            worst = max(worst, v)
            if worst > 1:
                break
        sat = worst <= 1
        entries.append({"criterion": "hyperbolic-persistence", "omega": None, "value": float(worst),
                        "threshold": 1.0, "satisfied": bool(sat),
                        "claim": "hyperbolic" if sat else "inconclusive"})

    best, theorem = "inconclusive", None
    for e in entries:
        if e["satisfied"] and CLAIM_RANK[e["claim"]] > CLAIM_RANK[best]:
            best, theorem = e["claim"], e["criterion"]
    return StabilityVerdict(omegas, entries, best, theorem)


# ---------------------------------------------------------------------------
# Morse index bounds for Sturm-Liouville operators
# ---------------------------------------------------------------------------

def morse_bound_sl(slp, K: MatrixPath | None = None, k_max: int = 4, N: int = 64) -> int:
    """Upper bound for the number of negative eigenvalues of A(nu) + R1.

    With ``K`` (K > 0, R1 >= -K, A(nu) > 0) the bound is min_k floor Tr[(K A(nu)^-1)^k].
    Without ``K``: R1 >= 0 gives 0; for P = I, Q = 0, R = 0 the operator is
    -(d/dt + nu)^2 - Rpot with Rpot = -R1 and the bound is
    floor(-omega T Tr[int Rpot^+ dt Sbar (Sbar - omega)^-2]).
    """
    from .sturm import SturmLiouvilleProblem, lagrangian_trace, smallest_eigenvalue

    if abs(slp.nu.real) > 0:
        raise DomainError("Morse bounds need imaginary nu")
    n, T = slp.n, slp.T
    if K is not None:
        if _definite_sign(K) != 1:
            raise DomainError("K must be positive definite")
        if _eig_range(slp.R1 + K)[0] < -ORDER_TOL:
            raise DomainError("R1 >= -K fails")
        if smallest_eigenvalue(slp, N) <= 0:
            raise DomainError("A(nu) is not positive")
        aux = SturmLiouvilleProblem(slp.P, slp.Q, slp.R, K.scaled(-1.0), slp.Sbar, slp.nu, T)
        tr = lagrangian_trace(aux, k_max)
        return min(int(np.floor(tr.values[k].real + FLOOR_SLACK)) for k in range(1, k_max + 1))
    if _definite_sign(slp.R1, strict=False) == 1:
        if smallest_eigenvalue(slp, N) <= 0:
            raise DomainError("A(nu) is not positive")
        return 0
    t = np.linspace(0, T, 33)
    free = (np.max(np.abs(slp.P(t) - np.eye(n)[None])) <= 1e-14
            and np.max(np.abs(slp.Q(t))) == 0 and np.max(np.abs(slp.R(t))) == 0)
    if not free:
        raise DomainError("a comparison matrix K is required")
    w = slp.omega
    S = slp.Sbar
    if np.min(np.abs(np.linalg.eigvals(S) - w)) <= 1e-10:
        raise DomainError("-(d/dt + nu)^2 is not invertible")
    x, wq = np.polynomial.legendre.leggauss(40)
    edges = np.linspace(0, T, 65)
    a, b = edges[:-1, None], edges[1:, None]
    tq = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    wt = (0.5 * (b - a) * wq).ravel()
    Rpot = -slp.R1(tq)
    ev, U = np.linalg.eigh(Rpot)
    Rplus = np.einsum("tij,tj,tkj->tik", U, np.maximum(ev, 0), U)
    intR = np.einsum("t,tij->ij", wt, Rplus)
    X = np.linalg.inv(S - w * np.eye(n))
    val = (-w * T * np.trace(intR @ S @ X @ X)).real
    return int(np.floor(val + FLOOR_SLACK))


__all__ = [
    "IndexBoundReport", "StabilityVerdict", "Crossing", "check_bracket",
    "nondegeneracy_certificate", "index_bracket", "crossing_count", "crossing_form",
    "stability_criteria", "morse_bound_sl",
]
