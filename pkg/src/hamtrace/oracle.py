"""Independent spectral oracles for A - nu J - B - lam D on S-twisted periodic
functions: characteristic-determinant shooting, Fourier-Galerkin eigenvalues,
reciprocal power sums with tail fits, and truncated Fredholm determinants."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .core import BoundaryData, DegenerateError, DomainError, MatrixPath, standard_J
from .monodromy import batch_endpoints

ROOT_TOL = 1e-10
CERT_FACTOR = 1e-8
SIGMA_ACCEPT = 1e-6


class GridTooCoarseError(DomainError):
    pass


# ---------------------------------------------------------------------------
# Characteristic determinant
# ---------------------------------------------------------------------------

def characteristic(B: MatrixPath, D: MatrixPath, boundary: BoundaryData, lams,
                   tol: float = 1e-11):
    """h(lam) = det(S gamma_lam(T) - omega I) and the matrices S gamma_lam(T)."""
    G = batch_endpoints(B, D, lams, tol)
    Ms = boundary.S[None] @ G
    d = Ms.shape[-1]
    h = np.linalg.det(Ms - boundary.omega * np.eye(d)[None])
    return h, Ms


def _real_char(h: np.ndarray, boundary: BoundaryData) -> np.ndarray:
    # omega^{-n} det(M - omega I) is real for real symplectic M and |omega| = 1
    return np.real(h * boundary.omega ** (-boundary.n))


def _sigma_min(Ms: np.ndarray, omega: complex) -> np.ndarray:
    d = Ms.shape[-1]
    return np.linalg.svd(Ms - omega * np.eye(d)[None], compute_uv=False)[:, -1]


# ---------------------------------------------------------------------------
# Spectrum slices
# ---------------------------------------------------------------------------

@dataclass
class SpectrumSlice:
    """Eigenvalues found in a window, with per-root error estimates and tail fits.

    ``order`` is 1 for first-order (Hamiltonian) operators and 2 for Sturm-Liouville
    operators; it fixes the growth law lam_j ~ j^order used by the tail fit.
    """

    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    window: tuple
    method: str
    order: int
    root_errors: np.ndarray
    scale: float = 1.0
    certified: np.ndarray | None = None
    tails: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(np.sum(self.multiplicities))

    def as_dict(self) -> dict:
        return {
            "window": list(self.window),
            "method": self.method,
            "eigenvalues": [{"lambda": l, "mult": int(m), "error": float(e)}
                            for l, m, e in zip(self.eigenvalues, self.multiplicities,
                                               self.root_errors)],
            "tail": {k: {"a": v[0], "b": v[1], "power": 1.0 / self.order}
                     for k, v in self.tails.items()},
        }


def _fit_counting(mags: np.ndarray, mults: np.ndarray, order: int):
    """Fit N(lam) = a lam^(1/order) + b on the outer third of one side of the spectrum."""
    if len(mags) < 6:
        return None
    counts = np.cumsum(mults) - 0.5 * mults
    k = len(mags) // 3
    x = mags[-k:] ** (1.0 / order)
    A = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(A, counts[-k:], rcond=None)
    return float(a), float(b)


def _attach_tails(sl: SpectrumSlice) -> SpectrumSlice:
    lam = np.real(sl.eigenvalues)
    for side, sel in (("positive", lam > 0), ("negative", lam < 0)):
        mags = np.abs(lam[sel])
        order = np.argsort(mags)
        fit = _fit_counting(mags[order], sl.multiplicities[sel][order], sl.order)
        if fit is not None:
            sl.tails[side] = fit
    return sl


def _side_total(mags, mults, fit, m, order, J):
    """sum over the J smallest magnitudes plus the fitted density beyond the gap."""
    partial = float(np.sum(mults[:J] / mags[:J] ** m))
    if J < len(mags):
        cut = 0.5 * (mags[J - 1] + mags[J])
    else:
        cut = mags[-1] + 0.5 * (mags[-1] - mags[-2])
    p = 1.0 / order
    a = fit[0]
    tail = a * p * cut ** (p - m) / (m - p)
    return partial + tail, tail


def reciprocal_power_sum(sl: SpectrumSlice, m: int) -> tuple[complex, float]:
    """sum_j mult_j / lam_j^m over the slice plus fitted tails; returns (value, bound).

    The bound adds the propagated root errors, twice the change of the total when the
    cutoff moves from the outermost gap to the gap at 80% of the found roots, and one
    eigenvalue's worth of contribution at each cutoff.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if m == 1 and sl.order == 1:
        raise DomainError("m = 1 is only a conditional trace for first-order operators")
    lam = np.asarray(sl.eigenvalues)
    mult = np.asarray(sl.multiplicities, dtype=float)
    if np.iscomplexobj(lam) and np.any(np.abs(lam.imag) > 1e-9 * np.maximum(1, np.abs(lam))):
        value = complex(np.sum(mult / lam ** m))
        return value, float("inf") if sl.tails else 0.0
    lam = lam.real
    err_roots = float(np.sum(mult * m * np.asarray(sl.root_errors) / np.abs(lam) ** (m + 1)))
    total, bound = 0.0, err_roots
    for side, sel, sgn in (("positive", lam > 0, 1.0), ("negative", lam < 0, (-1.0) ** m)):
        mags = np.abs(lam[sel])
        ms = mult[sel]
        o = np.argsort(mags)
        mags, ms = mags[o], ms[o]
        fit = sl.tails.get(side)
        if fit is None:
            total += sgn * float(np.sum(ms / mags ** m))
            continue
        J1 = len(mags)
        J2 = max(3, int(0.8 * J1))
        t1, _ = _side_total(mags, ms, fit, m, sl.order, J1)
        t2, _ = _side_total(mags, ms, fit, m, sl.order, J2)
        total += sgn * t1
        bound += 2 * abs(t1 - t2) + float(ms[-1] / mags[-1] ** m)
    return complex(total), float(bound)


# ---------------------------------------------------------------------------
# Shooting
# ---------------------------------------------------------------------------

def _illinois(fun, a, b, fa, fb, xtol, max_iter=100):
    """Vectorized Illinois (modified regula falsi) on many brackets at once."""
    a, b, fa, fb = (np.array(v, dtype=float) for v in (a, b, fa, fb))
    side = np.zeros(len(a), dtype=int)
    for _ in range(max_iter):
        active = np.abs(b - a) > xtol * np.maximum(1.0, np.abs(a))
        if not np.any(active):
            break
        c = np.where(fb != fa, (a * fb - b * fa) / (fb - fa), 0.5 * (a + b))
        # keep regula falsi iterates strictly inside; fall back to bisection
        bad = ~((c > np.minimum(a, b)) & (c < np.maximum(a, b)))
        c = np.where(bad, 0.5 * (a + b), c)
        idx = np.nonzero(active)[0]
        fc = np.zeros(len(a))
        fc[idx] = fun(c[idx])
        for i in idx:
            if fc[i] == 0:
                a[i] = b[i] = c[i]
                continue
            if np.sign(fc[i]) == np.sign(fb[i]):
                b[i], fb[i] = c[i], fc[i]
                if side[i] == -1:
                    fa[i] *= 0.5
                side[i] = -1
            else:
                a[i], fa[i] = c[i], fc[i]
                if side[i] == 1:
                    fb[i] *= 0.5
                side[i] = 1
    return 0.5 * (a + b)


def _golden_min(fun, lo, hi, xtol, max_iter=200):
    """Vectorized golden-section minimization on many intervals."""
    g = (np.sqrt(5) - 1) / 2
    lo, hi = np.array(lo, float), np.array(hi, float)
    c = hi - g * (hi - lo)
    d = lo + g * (hi - lo)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if np.all(np.abs(hi - lo) <= xtol * np.maximum(1.0, np.abs(lo))):
            break
        left = fc < fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new_c = hi - g * (hi - lo)
        new_d = lo + g * (hi - lo)
        # reuse the surviving interior point
        c, d = np.where(left, new_c, d), np.where(left, c, new_d)
        fc_old, fd_old = fc, fd
        need_c = left
        vals = fun(np.where(left, c, d))
        fc = np.where(left, vals, fd_old)
        fd = np.where(left, fc_old, vals)
        del need_c
    return 0.5 * (lo + hi)


def _zero_order(B, D, boundary, lam0, rho, tol) -> float:
    """Slope of log|h| against log|lam - lam0| over three decades of approach."""
    deltas = rho * np.logspace(0, -3, 4)
    pts = np.concatenate([lam0 + deltas, lam0 - deltas])
    h, _ = characteristic(B, D, boundary, pts, tol)
    y = np.log(np.abs(h).reshape(2, -1).mean(axis=0) + 1e-300)
    slope = np.polyfit(np.log(deltas), y, 1)[0]
    return float(slope)


def eigenvalues_by_shooting(B: MatrixPath, D: MatrixPath, boundary: BoundaryData,
                            window=(-50.0, 50.0), grid: int = 2000, tol: float = 1e-11,
                            xtol: float = ROOT_TOL, order: int = 1,
                            open_left: bool = False) -> SpectrumSlice:
    """Real eigenvalues lam in ``window`` from zeros of h(lam) = det(S gamma_lam(T) - omega I).

    Odd-order zeros are bracketed by sign changes of omega^{-n} h (real for imaginary
    nu and real coefficients) and refined by Illinois regula falsi; even-order zeros
    are found as local minima of the smallest singular value of S gamma_lam(T) - omega I
    refined by golden section. Multiplicity is the larger of the kernel dimension and
    the rounded zero order of h. ``open_left`` excludes the left window end itself.
    """
    if D.is_zero():
        raise DomainError("D must not vanish identically")
    lo, hi = map(float, window)
    if not hi > lo:
        raise ValueError("empty window")
    d = B.dim
    w = boundary.omega
    _, M0 = characteristic(B, D, boundary, np.array([0.0]), tol)
    if np.min(np.abs(np.linalg.eigvals(M0[0]) - w)) <= 1e-10:
        raise DegenerateError()
    lams = np.linspace(lo, hi, grid + 1)
    h, Ms = characteristic(B, D, boundary, lams, tol)
    scale = float(np.median(np.abs(h)))
    real_case = abs(abs(w) - 1) < 1e-14
    sig = _sigma_min(Ms, w)
    roots = []
    if real_case:
        hr = _real_char(h, boundary)
        sc = np.nonzero(np.sign(hr[:-1]) * np.sign(hr[1:]) < 0)[0]
        exact = np.nonzero(hr == 0)[0]
        if len(sc):
            fun = lambda x: _real_char(characteristic(B, D, boundary, x, tol)[0], boundary)
            r = _illinois(fun, lams[sc], lams[sc + 1], hr[sc], hr[sc + 1], xtol)
            roots += [(float(x), int(i), "sign") for x, i in zip(r, sc)]
        roots += [(float(lams[i]), int(min(i, grid - 1)), "sign") for i in exact]
        sign_cells = set(sc.tolist()) | set(exact.tolist())
    else:
        sign_cells = set()
    # local minima of sigma_min away from sign-change cells
    cand = [i for i in range(1, grid) if sig[i] < sig[i - 1] and sig[i] < sig[i + 1]
            and not ({i - 1, i} & sign_cells)]
    if cand:
        fun = lambda x: _sigma_min(characteristic(B, D, boundary, x, tol)[1], w)
        xs = _golden_min(fun, lams[np.array(cand) - 1], lams[np.array(cand) + 1], xtol)
        sv = fun(xs)
        # threshold relative to the local size of S gamma_lam(T), which can vary by
        # many orders of magnitude across the window when D is indefinite
        local = np.maximum(1.0, np.max(np.abs(Ms[np.array(cand)]), axis=(1, 2)))
        for x, s, i, sc in zip(xs, sv, cand, local):
            if s <= SIGMA_ACCEPT * sc:
                roots.append((float(x), int(i if x >= lams[i] else i - 1), "minimum"))
    roots.sort()
    if open_left:
        roots = [r for r in roots if r[0] > lo + xtol * max(1.0, abs(lo))]
    # one root per cell
    cells = [r[1] for r in roots]
    if len(set(cells)) != len(cells):
        raise GridTooCoarseError("two roots in one grid cell; increase grid")
    if not roots:
        return SpectrumSlice(np.zeros(0), np.zeros(0, int), (lo, hi), "det-rootfind", order,
                             np.zeros(0), scale, np.zeros(0, bool))
    xs = np.array([r[0] for r in roots])
    h_c, M_c = characteristic(B, D, boundary, xs, tol * 1e-2)
    mults, errs = [], []
    spacing = (hi - lo) / grid
    for j, (x, cell, how) in enumerate(roots):
        sv = np.linalg.svd(M_c[j] - w * np.eye(d), compute_uv=False)
        nullity = int(np.sum(sv <= SIGMA_ACCEPT * max(1.0, sv[0])))
        gaps = [abs(x - y) for y in xs if y != x]
        rho = 0.1 * min([spacing] + gaps)
        slope = _zero_order(B, D, boundary, x, rho, tol * 1e-2)
        zo = int(np.floor(slope + 0.5))
        mult = max(nullity, zo, 1)
        if how == "sign" and mult % 2 == 0 or how == "minimum" and mult % 2 == 1:
            raise GridTooCoarseError(f"zero order {mult} inconsistent with sign pattern near {x}")
        mults.append(mult)
        errs.append(xtol * max(1.0, abs(x)))
    cert = np.abs(h_c) <= CERT_FACTOR * max(scale, 1e-300)
    sl = SpectrumSlice(xs, np.array(mults), (lo, hi), "det-rootfind", order, np.array(errs),
                       scale, cert)
    return _attach_tails(sl)


def eigenvalues_adaptive(B: MatrixPath, D: MatrixPath, boundary: BoundaryData,
                         window=(-50.0, 50.0), piece: float = 2.0, grid: int = 100,
                         tol: float = 1e-11, max_doublings: int = 8,
                         open_left: bool = False) -> SpectrumSlice:
    """Shooting over consecutive sub-windows of width ``piece``; a sub-window whose
    grid is too coarse is re-shot with a doubled grid, up to ``max_doublings`` times.

    Close root pairs then cost extra integrations only where they occur.
    """
    lo, hi = map(float, window)
    if not hi > lo:
        raise ValueError("empty window")
    edges = np.linspace(lo, hi, max(1, int(np.ceil((hi - lo) / piece))) + 1)
    parts = []
    for j, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        g = grid
        for attempt in range(max_doublings + 1):
            try:
                parts.append(eigenvalues_by_shooting(B, D, boundary, (a, b), g, tol,
                                                     open_left=open_left or j > 0))
                break
            except GridTooCoarseError:
                if attempt == max_doublings:
                    raise
                g *= 2
    cat = lambda name: np.concatenate([getattr(p, name) for p in parts])
    sl = SpectrumSlice(cat("eigenvalues"), cat("multiplicities").astype(int), (lo, hi),
                       "det-rootfind", parts[0].order, cat("root_errors"),
                       float(np.median([p.scale for p in parts])), cat("certified"))
    return _attach_tails(sl)


# ---------------------------------------------------------------------------
# Fourier-Galerkin frame
# ---------------------------------------------------------------------------

def fourier_coefficients(path: MatrixPath, kmax: int, n_samples: int | None = None) -> np.ndarray:
    """c_j = (1/T) int path(t) e^{-2 pi i j t/T} dt for |j| <= kmax, shape (2kmax+1, d, d).

    Exact coefficients are used when the path carries them; otherwise the trapezoidal
    rule on ``n_samples`` (default 8 kmax, at least 64) uniform points, i.e. an FFT.
    """
    d = path.dim
    out = np.zeros((2 * kmax + 1, d, d), complex)
    if path.fourier is not None:
        for k, c in path.fourier.items():
            if k <= kmax:
                out[kmax + k] = c
                if k > 0:
                    out[kmax - k] = np.conj(c)
        return out
    n = n_samples or max(64, 8 * kmax)
    n = max(n, 2 * kmax + 2)
    t = np.arange(n) * path.period / n
    F = np.fft.fft(path(t), axis=0) / n
    idx = np.arange(-kmax, kmax + 1) % n
    return F[idx]


def _frequencies(boundary: BoundaryData, N: int) -> np.ndarray:
    kind = boundary.kind
    if kind == "identity":
        shift = 0.0
    elif kind == "anti":
        shift = np.pi
    else:
        raise DomainError("Galerkin frame supports S = I and S = -I only")
    k = np.arange(-N, N + 1)
    return (2 * np.pi * k + shift) / boundary.T


def toeplitz_blocks(coef: np.ndarray, N: int, rows=None, cols=None) -> np.ndarray:
    """Block matrix [c_{k-l}] for k in rows, l in cols (default |k|, |l| <= N)."""
    K = (coef.shape[0] - 1) // 2
    d = coef.shape[1]
    rows = np.arange(-N, N + 1) if rows is None else np.asarray(rows)
    cols = np.arange(-N, N + 1) if cols is None else np.asarray(cols)
    diff = rows[:, None] - cols[None, :]
    ok = np.abs(diff) <= K
    blocks = np.zeros((len(rows), len(cols), d, d), complex)
    blocks[ok] = coef[(diff + K)[ok]]
    return blocks.transpose(0, 2, 1, 3).reshape(len(rows) * d, len(cols) * d)


def hamiltonian_galerkin(B: MatrixPath, D: MatrixPath, boundary: BoundaryData, N: int,
                         kcoef: int | None = None):
    """(L, Dm, freqs) for L = A - nu J - B and multiplication by D on modes |k| <= N."""
    kc = kcoef or 2 * N
    J = standard_J(B.dim // 2)
    freqs = _frequencies(boundary, N)
    Bc = fourier_coefficients(B, kc)
    Dc = fourier_coefficients(D, kc)
    d = B.dim
    diag = [(-1j * f - boundary.nu) * J for f in freqs]
    L = sla.block_diag(*diag) - toeplitz_blocks(Bc, N)
    Dm = toeplitz_blocks(Dc, N)
    return L, Dm, freqs, Bc, Dc


def _min_eig_on_grid(path: MatrixPath, n: int = 512) -> float:
    t = np.linspace(0, path.period, n)
    return float(np.min(np.linalg.eigvalsh(0.5 * (path(t) + np.swapaxes(path(t), 1, 2)))))


def eigenvalues_galerkin(B: MatrixPath, D: MatrixPath, boundary: BoundaryData, N: int,
                         rel_tol: float = 1e-9) -> SpectrumSlice:
    """Eigenvalues of L x = lam D x for imaginary nu and D > 0 in the Fourier frame.

    The pencil is Hermitian-definite. Each Ritz value carries the residual bound
    ||r|| / sqrt(min eig D) from the coupling to modes N < |k| <= 2N; the slice keeps
    the contiguous band around zero whose bounds are below ``rel_tol * max(1, |lam|)``.
    """
    if abs(boundary.nu.real) > 0:
        raise DomainError("Galerkin oracle needs imaginary nu")
    dmin = _min_eig_on_grid(D)
    if dmin <= 0:
        raise DomainError("Galerkin oracle needs D > 0")
    L, Dm, freqs, Bc, Dc = hamiltonian_galerkin(B, D, boundary, N)
    L = 0.5 * (L + L.conj().T)
    Dm = 0.5 * (Dm + Dm.conj().T)
    lam, X = sla.eigh(L, Dm)
    inside = np.arange(-N, N + 1)
    outside = np.concatenate([np.arange(-2 * N, -N), np.arange(N + 1, 2 * N + 1)])
    CB = toeplitz_blocks(Bc, N, outside, inside)
    CD = toeplitz_blocks(Dc, N, outside, inside)
    R = -(CB @ X) - (CD @ X) * lam[None, :]
    errs = np.linalg.norm(R, axis=0) / np.sqrt(dmin)
    good = errs <= rel_tol * np.maximum(1.0, np.abs(lam))
    # contiguous band around zero
    zero = np.searchsorted(lam, 0.0)
    hi = zero
    while hi < len(lam) and good[hi]:
        hi += 1
    lo = zero
    while lo > 0 and good[lo - 1]:
        lo -= 1
    lam_b, err_b = lam[lo:hi], errs[lo:hi]
    window = (float(lam_b[0]) if len(lam_b) else 0.0, float(lam_b[-1]) if len(lam_b) else 0.0)
    sl = SpectrumSlice(lam_b, np.ones(len(lam_b), int), window, "galerkin", 1, err_b)
    return _attach_tails(sl)


# ---------------------------------------------------------------------------
# Truncated Fredholm determinants
# ---------------------------------------------------------------------------

@dataclass
class TruncatedDeterminant:
    levels: list
    values: list
    log_values: list
    extrapolated_log: complex
    convergence: float
    observed_rate: float

    @property
    def extrapolated(self) -> complex:
        return complex(np.exp(self.extrapolated_log))

    def as_dict(self) -> dict:
        return {"levels": self.levels, "values": self.values, "log_values": self.log_values,
                "extrapolated": self.extrapolated, "extrapolated_log": self.extrapolated_log,
                "convergence": self.convergence, "observed_rate": self.observed_rate}


def compressed_operator(B: MatrixPath, D: MatrixPath, boundary: BoundaryData, N: int,
                        margin: int | None = None) -> np.ndarray:
    """P_N D (A - B - nu J)^{-1} P_N in the Fourier frame.

    The inverse is taken on the larger frame |k| <= N + margin and then restricted,
    so only the compression, not the inverse, is truncated at N.
    """
    Mbig = N + (margin if margin is not None else max(32, N // 4))
    L, _, _, _, Dc = hamiltonian_galerkin(B, D, boundary, Mbig, kcoef=2 * Mbig)
    d = B.dim
    inside = np.arange(-N, N + 1)
    full = np.arange(-Mbig, Mbig + 1)
    cols = ((inside + Mbig)[:, None] * d + np.arange(d)[None, :]).ravel()
    E = np.zeros((L.shape[0], len(cols)), complex)
    E[cols, np.arange(len(cols))] = 1.0
    lu = sla.lu_factor(L)
    if np.min(np.abs(np.diag(lu[0]))) < 1e-12 * np.max(np.abs(np.diag(lu[0]))):
        raise DegenerateError("truncated operator is near singular")
    X = sla.lu_solve(lu, E)
    DN = toeplitz_blocks(Dc, Mbig, inside, full)
    return DN @ X


def truncated_fredholm(B: MatrixPath, D: MatrixPath, boundary: BoundaryData, alpha: complex,
                       N: int = 256) -> TruncatedDeterminant:
    """det(I - alpha P_N F P_N), F = D (A - B - nu J)^{-1}, at N/4, N/2, N, with a
    two-step Richardson extrapolation of the logarithm in powers of 1/N."""
    _frequencies(boundary, 1)
    levels = [N // 4, N // 2, N]
    vals, logs = [], []
    for n in levels:
        if alpha == 0:
            vals.append(1.0 + 0j)
            logs.append(0j)
            continue
        F = compressed_operator(B, D, boundary, n)
        sign, ld = np.linalg.slogdet(np.eye(F.shape[0]) - alpha * F)
        vals.append(complex(sign * np.exp(ld)))
        logs.append(complex(np.log(sign) + ld))
    # unwrap the branch of log so that levels are comparable
    for i in range(1, 3):
        k = np.round((logs[i].imag - logs[i - 1].imag) / (2 * np.pi))
        logs[i] -= 2j * np.pi * k
    l1, l2, l3 = logs
    r_lo = 2 * l2 - l1
    r_hi = 2 * l3 - l2
    ext = (4 * r_hi - r_lo) / 3
    conv = float(abs(r_hi - ext))
    d1, d2 = abs(l2 - l1), abs(l3 - l2)
    rate = float(np.log2(d1 / d2)) if d1 > 0 and d2 > 0 else float("inf")
    return TruncatedDeterminant(levels, vals, logs, complex(ext), conv, rate)


# ---------------------------------------------------------------------------
# Hill-type ratio for Sturm-Liouville problems
# ---------------------------------------------------------------------------

@dataclass
class HillCheck:
    lhs: complex
    rhs: complex
    rel_err: float
    n_eigenvalues: int
    tail_log: complex


def hill_ratio_check(slp, alpha: complex = 1.0, N: int = 200, tol: float = 1e-12) -> HillCheck:
    """prod_j (1 - alpha/lam_j) over Galerkin eigenvalues of A(nu) y + lam R1 y = 0 with a
    fitted tail, against det(S_d gamma_alpha(T) - omega) / det(S_d gamma_0(T) - omega)."""
    from .monodromy import integrate_fundamental
    from .sturm import hamiltonian_data, sl_eigenvalues

    B0, D, bd = hamiltonian_data(slp)
    d = B0.dim
    w = bd.omega
    g0 = integrate_fundamental(B0, 0.0, D, tol).final
    ga = integrate_fundamental(B0, alpha, D, tol).final
    den = np.linalg.det(bd.S @ g0 - w * np.eye(d))
    if abs(den) < 1e-12:
        raise DegenerateError()
    rhs = complex(np.linalg.det(bd.S @ ga - w * np.eye(d)) / den)
    if D.is_zero():
        return HillCheck(1.0 + 0j, rhs, abs(rhs - 1), 0, 0j)
    sl = sl_eigenvalues(slp, N)
    lam = sl.eigenvalues
    logp = complex(np.sum(sl.multiplicities * np.log(1 - alpha / lam.astype(complex))))
    # tail of sum log(1 - alpha/lam) = -sum_m alpha^m/m sum_tail lam^{-m}
    tail = 0j
    lam_r = lam.real
    for side, sel, sgn in (("positive", lam_r > 0, 1.0), ("negative", lam_r < 0, -1.0)):
        fit = sl.tails.get(side)
        if fit is None:
            continue
        mags = np.sort(np.abs(lam_r[sel]))
        cut = mags[-1] + 0.5 * (mags[-1] - mags[-2])
        p = 1.0 / sl.order
        for m in (1, 2, 3):
            s_m = fit[0] * p * cut ** (p - m) / (m - p)
            tail -= alpha ** m / m * sgn ** m * s_m
    lhs = complex(np.exp(logp + tail))
    return HillCheck(lhs, rhs, float(abs(lhs - rhs) / abs(rhs)), len(sl), tail)


__all__ = [
    "SpectrumSlice", "TruncatedDeterminant", "HillCheck", "GridTooCoarseError",
    "characteristic", "eigenvalues_by_shooting", "eigenvalues_adaptive", "eigenvalues_galerkin",
    "reciprocal_power_sum", "truncated_fredholm", "compressed_operator", "hill_ratio_check",
    "fourier_coefficients", "toeplitz_blocks", "hamiltonian_galerkin",
]
