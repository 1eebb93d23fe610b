"""Shared types: matrix paths, boundary data, the standard symplectic form and
problem configuration parsing.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.interpolate import CubicSpline, interp1d


class DomainError(Exception):
    """Raised when the mathematical hypotheses of an operation fail."""


class DegenerateError(DomainError):
    """The unperturbed operator has nontrivial kernel."""

    def __init__(self, detail: str = ""):
        msg = "unperturbed system degenerate"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class ConfigError(ValueError):
    """Malformed or inconsistent problem configuration."""


SYMPLECTIC_TOL = 1e-12
SYMMETRY_TOL = 1e-12


def standard_J(n: int) -> np.ndarray:
    """Return the 2n x 2n matrix [[0, -I], [I, 0]]."""
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, -I], [I, Z]])


@dataclass(frozen=True)
class StandardSymplecticForm:
    n: int

    @property
    def J(self) -> np.ndarray:
        return standard_J(self.n)


# ---------------------------------------------------------------------------
# Matrix paths
# ---------------------------------------------------------------------------

EvalFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class MatrixPath:
    """A matrix-valued function on [0, T].

    ``fn`` maps a 1-d array of times to an array of shape ``(len(t), dim, dim)``.
    ``spec`` holds the serializable description (None for derived paths).
    """

    dim: int
    period: float
    kind: str
    fn: EvalFn = field(repr=False)
    symmetric: bool = False
    spec: dict | None = field(default=None, repr=False)
    # optional exact Fourier data: dict k -> complex matrix for k >= 0
    fourier: dict | None = field(default=None, repr=False)

    def _check_times(self, t: np.ndarray) -> np.ndarray:
        slack = 1e-12 * max(1.0, self.period)
        if np.any(t < -slack) or np.any(t > self.period + slack):
            raise ValueError(f"time outside [0, {self.period}]")
        return np.clip(t, 0.0, self.period)

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        tt = self._check_times(np.atleast_1d(np.asarray(t, dtype=float)))
        vals = self.fn(tt)
        return vals[0] if scalar else vals

    def at(self, t: float) -> np.ndarray:
        """Unchecked evaluation at one time, clipped to [0, T]; for ODE right-hand sides."""
        return self.fn(np.array([min(max(t, 0.0), self.period)]))[0]

    def samples(self, t: np.ndarray) -> np.ndarray:
        return self(np.asarray(t, dtype=float).reshape(-1))

    def is_zero(self) -> bool:
        return self.kind == "constant" and not np.any(self.spec_matrix())

    def spec_matrix(self) -> np.ndarray:
        if self.kind != "constant":
            raise ValueError("not a constant path")
        return self.fn(np.zeros(1))[0]

    def scaled(self, c: float) -> "MatrixPath":
        f = self.fn
        if self.kind == "constant":
            return constant_path(c * self.spec_matrix(), self.period)
        four = None
        if self.fourier is not None:
            four = {k: c * v for k, v in self.fourier.items()}
        return MatrixPath(self.dim, self.period, "function", lambda t: c * f(t),
                          self.symmetric and np.isrealobj(c), None, four)

    def __add__(self, other: "MatrixPath") -> "MatrixPath":
        if self.dim != other.dim or not np.isclose(self.period, other.period):
            raise ValueError("incompatible paths")
        f, g = self.fn, other.fn
        four = None
        if self.fourier is not None and other.fourier is not None:
            four = dict(self.fourier)
            for k, v in other.fourier.items():
                four[k] = four.get(k, 0) + v
        return MatrixPath(self.dim, self.period, "function", lambda t: f(t) + g(t),
                          self.symmetric and other.symmetric, None, four)


def constant_path(matrix, T: float) -> MatrixPath:
    A = np.array(matrix, dtype=float if np.isrealobj(matrix) else complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigError("constant path needs a square matrix")
    A.setflags(write=False)
    sym = bool(np.array_equal(A, A.T))

    def fn(t):
        return np.broadcast_to(A, (len(t),) + A.shape).copy()

    return MatrixPath(A.shape[0], float(T), "constant", fn, sym,
                      {"kind": "constant", "matrix": A.tolist()}, {0: A.astype(complex)})


def zero_path(dim: int, T: float) -> MatrixPath:
    return constant_path(np.zeros((dim, dim)), T)


def function_path(fn: Callable, dim: int, T: float, symmetric: bool = False) -> MatrixPath:
    """Wrap a vectorized callable t -> (len(t), dim, dim)."""
    return MatrixPath(dim, float(T), "function", fn, symmetric, None, None)


def tabulated_path(times, values, interp: str = "cubic", T: float | None = None,
                   symmetric: bool | None = None) -> MatrixPath:
    times = np.asarray(times, dtype=float)
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 3 or vals.shape[1] != vals.shape[2] or vals.shape[0] != len(times):
        raise ConfigError("tabulated values must have shape (len(times), dim, dim)")
    if np.any(np.diff(times) <= 0):
        raise ConfigError("tabulated times must be strictly increasing")
    if T is None:
        T = float(times[-1])
    if abs(times[0]) > 1e-12 or abs(times[-1] - T) > 1e-12 * max(1.0, T):
        raise ConfigError("tabulated times must cover [0, T]")
    if interp == "cubic":
        if len(times) < 4:
            raise ConfigError("cubic interpolation needs at least 4 samples")
        spline = CubicSpline(times, vals, axis=0)
    elif interp == "linear":
        spline = interp1d(times, vals, axis=0, kind="linear", assume_sorted=True)
    else:
        raise ConfigError(f"unknown interpolation order {interp!r}")
    if symmetric is None:
        symmetric = bool(np.all(np.abs(vals - vals.transpose(0, 2, 1)) <= SYMMETRY_TOL))

    def fn(t):
        out = np.asarray(spline(t))
        if symmetric:
            # entrywise interpolation of symmetric data is symmetric up to rounding
            out = 0.5 * (out + out.transpose(0, 2, 1))
        return out

    spec = {"kind": "tabulated", "times": times.tolist(), "values": vals.tolist(),
            "interp": interp}
    return MatrixPath(vals.shape[1], float(T), "tabulated", fn, symmetric, spec, None)


# builtin families ----------------------------------------------------------

def _trig_factory(params: dict, T: float) -> MatrixPath:
    """B(t) = C0 + sum_k (Ck cos(2 pi k t / T) + Sk sin(2 pi k t / T))."""
    c0 = np.array(params.get("const"), dtype=float)
    cos = [np.array(c, dtype=float) for c in params.get("cos", [])]
    sin = [np.array(s, dtype=float) for s in params.get("sin", [])]
    nk = max(len(cos), len(sin))
    dim = c0.shape[0]
    cos += [np.zeros((dim, dim))] * (nk - len(cos))
    sin += [np.zeros((dim, dim))] * (nk - len(sin))
    w = 2 * np.pi / T
    C = np.array(cos) if nk else np.zeros((0, dim, dim))
    S = np.array(sin) if nk else np.zeros((0, dim, dim))
    ks = np.arange(1, nk + 1)

    def fn(t):
        ph = np.outer(t, ks) * w
        return (c0[None] + np.einsum("tk,kij->tij", np.cos(ph), C)
                + np.einsum("tk,kij->tij", np.sin(ph), S))

    four = {0: c0.astype(complex)}
    for k in range(nk):
        four[k + 1] = 0.5 * (C[k] - 1j * S[k])
    sym = bool(np.array_equal(c0, c0.T) and all(np.array_equal(a, a.T) for a in cos + sin))
    return MatrixPath(dim, float(T), "builtin", fn, sym, None, four)


def _zero_factory(params: dict, T: float) -> MatrixPath:
    return zero_path(int(params["dim"]), T)


def _identity_factory(params: dict, T: float) -> MatrixPath:
    return constant_path(float(params.get("scale", 1.0)) * np.eye(int(params["dim"])), T)


BUILTINS: dict[str, Callable[[dict, float], MatrixPath]] = {
    "trig": _trig_factory,
    "zero": _zero_factory,
    "identity": _identity_factory,
}


def register_builtin(name: str, factory: Callable[[dict, float], MatrixPath]) -> None:
    BUILTINS[name] = factory


def builtin_path(name: str, params: dict | None = None, T: float | None = None) -> MatrixPath:
    params = dict(params or {})
    if name not in BUILTINS:
        # three-body families register themselves on import
        from . import threebody  # noqa: F401
    if name not in BUILTINS:
        raise ConfigError(f"unknown builtin path {name!r}")
    path = BUILTINS[name](params, T if T is not None else float(params.get("T", 1.0)))
    spec = {"kind": "builtin", "name": name, "params": params}
    return MatrixPath(path.dim, path.period, "builtin", path.fn, path.symmetric, spec,
                      path.fourier)


def path_from_spec(spec: dict, T: float) -> MatrixPath:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("path spec must be an object with a 'kind' field")
    kind = spec["kind"]
    if kind == "constant":
        return constant_path(spec["matrix"], T)
    if kind == "builtin":
        path = builtin_path(spec["name"], spec.get("params", {}), T)
        if not np.isclose(path.period, T):
            raise ConfigError(f"builtin {spec['name']!r} has period {path.period}, config T={T}")
        return path
    if kind == "tabulated":
        return tabulated_path(spec["times"], spec["values"], spec.get("interp", "cubic"), T)
    raise ConfigError(f"unknown path kind {kind!r}")


def matrix_path_eval(path: MatrixPath, t: float) -> np.ndarray:
    return path(t)


# ---------------------------------------------------------------------------
# Boundary data
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Boundary matrix S, twist exponent nu and period T, with omega = exp(nu T)."""

    S: np.ndarray
    nu: complex
    T: float

    def __post_init__(self):
        S = np.array(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
            raise ConfigError("S must be a square matrix of even size")
        n = S.shape[0] // 2
        J = standard_J(n)
        if np.max(np.abs(S.T @ S - np.eye(2 * n))) > SYMPLECTIC_TOL:
            raise ConfigError("S is not orthogonal")
        if np.max(np.abs(S.T @ J @ S - J)) > SYMPLECTIC_TOL:
            raise ConfigError("S is not symplectic")
        S.setflags(write=False)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "nu", complex(self.nu))
        object.__setattr__(self, "T", float(self.T))
        if self.T <= 0:
            raise ConfigError("period must be positive")

    @property
    def n(self) -> int:
        return self.S.shape[0] // 2

    @property
    def omega(self) -> complex:
        return complex(np.exp(self.nu * self.T))

    @property
    def kind(self) -> str:
        I = np.eye(2 * self.n)
        if np.array_equal(self.S, I):
            return "identity"
        if np.array_equal(self.S, -I):
            return "anti"
        return "matrix"

    def with_nu(self, nu: complex) -> "BoundaryData":
        return BoundaryData(self.S, nu, self.T)

    @classmethod
    def periodic(cls, n: int, nu: complex = 0.0, T: float = 1.0) -> "BoundaryData":
        return cls(np.eye(2 * n), nu, T)

    @classmethod
    def antiperiodic(cls, n: int, nu: complex = 0.0, T: float = 1.0) -> "BoundaryData":
        return cls(-np.eye(2 * n), nu, T)


def require_imaginary(nu: complex, what: str = "this operation") -> None:
    if abs(complex(nu).real) > 0:
        raise DomainError(f"{what} requires a purely imaginary nu, got {nu}")


# ---------------------------------------------------------------------------
# Configuration documents
# ---------------------------------------------------------------------------

def _parse_S(value, n: int) -> np.ndarray:
    if value == "identity":
        return np.eye(2 * n)
    if value == "anti":
        return -np.eye(2 * n)
    S = np.array(value, dtype=float)
    if S.shape != (2 * n, 2 * n):
        raise ConfigError(f"S must be {2 * n}x{2 * n}")
    return S


def parse_problem_config(document) -> tuple[MatrixPath, MatrixPath, BoundaryData]:
    """Parse a problem document (JSON text, path or dict) into (B, D, boundary)."""
    if isinstance(document, (str, os.PathLike)):
        text = str(document)
        if not text.lstrip().startswith("{"):
            with open(text) as fh:
                text = fh.read()
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigError("config must be a JSON object")
    missing = [k for k in ("n", "T", "S", "nu", "B", "D") if k not in document]
    if missing:
        raise ConfigError(f"missing fields: {', '.join(missing)}")
    n = document["n"]
    if not isinstance(n, int) or n < 1:
        raise ConfigError("n must be a positive integer")
    T = float(document["T"])
    if T <= 0:
        raise ConfigError("T must be positive")
    nu = document["nu"]
    if not (isinstance(nu, (list, tuple)) and len(nu) == 2):
        raise ConfigError("nu must be [re, im]")
    nu = complex(float(nu[0]), float(nu[1]))
    S = _parse_S(document["S"], n)
    B = path_from_spec(document["B"], T)
    D = path_from_spec(document["D"], T)
    for name, P in (("B", B), ("D", D)):
        if P.dim != 2 * n:
            raise ConfigError(f"{name} has dimension {P.dim}, expected {2 * n}")
    return B, D, BoundaryData(S, nu, T)


def problem_config_dict(B: MatrixPath, D: MatrixPath, boundary: BoundaryData) -> dict:
    """Serialize a problem; inverse of :func:`parse_problem_config`."""
    for P in (B, D):
        if P.spec is None:
            raise ConfigError("derived paths cannot be serialized")
    kind = boundary.kind
    S = kind if kind != "matrix" else boundary.S.tolist()
    return {"n": boundary.n, "T": boundary.T, "S": S,
            "nu": [boundary.nu.real, boundary.nu.imag], "B": B.spec, "D": D.spec}


def dump_json(obj: Any) -> str:
    """Deterministic JSON with full-precision floats and complex numbers as [re, im]."""
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# Parallel map
# ---------------------------------------------------------------------------

def resolve_jobs(jobs: int | None = None) -> int:
    env = os.environ.get("HAMTRACE_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    if jobs is None or jobs <= 0:
        return os.cpu_count() or 1
    return jobs


def pmap(fn: Callable, items, jobs: int | None = 1) -> list:
    """Order-preserving map, parallel over processes when jobs > 1."""
    items = list(items)
    if jobs is None:
        jobs = resolve_jobs(None)
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, items))
