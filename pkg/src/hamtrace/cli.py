"""Command-line front end.

Exit codes: 0 success, 1 domain error (degenerate operator, failed hypothesis),
2 usage or configuration error. Reports are JSON, region curves CSV. When an
output file is written, a manifest with content digests goes next to it.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import ConfigError, DegenerateError, DomainError, dump_json, parse_problem_config, resolve_jobs


class UsageError(Exception):
    pass


def _parse_complex(text: str) -> complex:
    s = text.strip().replace(" ", "")
    if s in ("i", "+i"):
        return 1j
    if s == "-i":
        return -1j
    if s.startswith("exp:"):
        return complex(np.exp(1j * float(s[4:])))
    try:
        return complex(s.replace("i", "j"))
    except ValueError as exc:
        raise UsageError(f"cannot parse complex number {text!r}") from exc


def _complex_list(text: str) -> list[complex]:
    return [_parse_complex(t) for t in text.split(",") if t.strip()]


def _window(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError as exc:
        raise UsageError(f"window must be 'lo,hi', got {text!r}") from exc
    return lo, hi


def _digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def _config_digest(path) -> str | None:
    if path is None:
        return None
    p = Path(path)
    return _digest(p.read_bytes()) if p.exists() else _digest(str(path).encode())


def _emit(args, text: str, tolerances: dict | None = None, started: float = 0.0) -> None:
    out = getattr(args, "out", None)
    if out is None:
        sys.stdout.write(text)
        return
    data = text.encode()
    Path(out).write_bytes(data)
    manifest = {
        "subcommand": args.command_path,
        "config_digest": _config_digest(getattr(args, "config", None)),
        "tool_version": __version__,
        "tolerances": tolerances or {},
        "wall_time": time.perf_counter() - started,
        "outputs": [{"path": str(out), "digest": _digest(data)}],
    }
    Path(str(out) + ".manifest.json").write_text(dump_json(manifest))


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def cmd_monodromy(args):
    from .monodromy import monodromy

    B, D, bd = parse_problem_config(args.config)
    rep = monodromy(B, bd, args.lam, D, args.tol, _complex_list(args.omegas) if args.omegas else None)
    return dump_json(rep.as_dict()), {"tol": args.tol}


def cmd_trace(args):
    from .iterated import trace_power

    B, D, bd = parse_problem_config(args.config)
    rep = trace_power(B, D, bd, args.m_max, args.tol)
    return dump_json(rep.as_dict()), {"tol": args.tol}


def cmd_identities(args):
    from .iterated import identity_suite

    r = identity_suite(_parse_complex(args.nu), _parse_complex(args.alpha), args.m, args.K)
    out = {"m": args.m, "K": args.K, "closed_form": r.closed_form, "partial_sum": r.partial_sum,
           "tail": r.tail, "tail_bound": r.tail_bound, "corrected": r.corrected}
    return dump_json(out), {}


def cmd_oracle_eigs(args):
    from .oracle import eigenvalues_by_shooting, eigenvalues_galerkin

    B, D, bd = parse_problem_config(args.config)
    if args.method == "galerkin":
        sl = eigenvalues_galerkin(B, D, bd, args.N)
    else:
        sl = eigenvalues_by_shooting(B, D, bd, _window(args.window), args.grid, args.tol)
    return dump_json(sl.as_dict()), {"tol": args.tol}


def cmd_oracle_hill(args):
    from .oracle import hill_ratio_check
    from .sturm import parse_sl_config

    slp = parse_sl_config(args.config)
    hc = hill_ratio_check(slp, _parse_complex(args.alpha), args.N)
    out = {"lhs": hc.lhs, "rhs": hc.rhs, "rel_err": hc.rel_err, "n_eigenvalues": hc.n_eigenvalues}
    return dump_json(out), {}


def cmd_sl_trace(args):
    from .sturm import lagrangian_trace, parse_sl_config

    rep = lagrangian_trace(parse_sl_config(args.config), args.m_max)
    return dump_json(rep.as_dict()), {}


def cmd_sl_krein(args):
    from .sturm import krein_sums, parse_krein_config

    kd = parse_krein_config(args.config)
    s1, s2 = krein_sums(kd)
    return dump_json({"sum1": s1, "sum2": s2, "R_ave": kd.R_ave, "C": kd.C}), {}


def _load_path(spec: str, T: float):
    from .core import path_from_spec

    text = spec if spec.lstrip().startswith("{") else Path(spec).read_text()
    try:
        return path_from_spec(json.loads(text), T)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc


def cmd_index_bracket(args):
    from .index import index_bracket

    B, D, bd = parse_problem_config(args.config)
    D1, D2 = _load_path(args.d1, bd.T), _load_path(args.d2, bd.T)
    rep = index_bracket(B, D, bd, D1, D2, args.kmax, oracle=not args.no_oracle)
    return dump_json(rep.as_dict()), {}


def cmd_stability(args):
    from .index import stability_criteria

    B, D, bd = parse_problem_config(args.config)
    v = stability_criteria(B, D, bd, _complex_list(args.omegas))
    return dump_json(v.as_dict()), {}


def _tb_u(args) -> float:
    if args.u is not None:
        return float(args.u) % 1.0
    w = _parse_complex(args.omega)
    if abs(abs(w) - 1) > 1e-12:
        raise UsageError("omega must lie on the unit circle")
    return float(np.angle(w) / (2 * np.pi)) % 1.0


def cmd_tb_f(args):
    from . import threebody as tb

    u = _tb_u(args)
    w = np.exp(2j * np.pi * u)
    out = {"beta": args.beta, "u": u, "f": tb.f_value(args.beta, u)}
    if args.both_routes:
        out["f_quadrature"] = tb.f_quadrature(args.beta, w)
    return dump_json(out), {}


def cmd_tb_g(args):
    from . import threebody as tb

    u = _tb_u(args)
    return dump_json({"beta": args.beta, "u": u, "g": tb.g_value(args.beta, u)}), {}


def cmd_tb_curves(args):
    from . import threebody as tb

    tags = args.tags.split(",") if args.tags else None
    curves = tb.region_curves(args.resolution, tags, jobs=resolve_jobs(args.jobs))
    for c in curves:
        for msg in c.failures:
            print(f"warning: {msg}", file=sys.stderr)
    return tb.curves_csv(curves), {"resolution": args.resolution}


def cmd_tb_classify(args):
    from . import threebody as tb

    c = tb.classify_point(args.beta, args.e, crosscheck=args.crosscheck)
    return dump_json(c.as_dict()), {}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hamtrace", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"hamtrace {__version__}")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(parent, name, fn, help_text, config=True):
        sp = parent.add_parser(name, help=help_text)
        if config:
            sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=None)
        sp.set_defaults(fn=fn)
        return sp

    sp = add(sub, "monodromy", cmd_monodromy, "monodromy matrix and spectrum")
    sp.add_argument("--lam", type=float, default=0.0)
    sp.add_argument("--omegas", default=None)
    sp.add_argument("--tol", type=float, default=1e-10)

    sp = add(sub, "trace", cmd_trace, "trace formula values")
    sp.add_argument("--m-max", type=int, default=4)
    sp.add_argument("--tol", type=float, default=1e-12)

    sp = add(sub, "identities", cmd_identities, "lattice-sum identities", config=False)
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--alpha", default="0")
    sp.add_argument("--nu", default="1")
    sp.add_argument("--K", type=int, default=10_000)

    orc = sub.add_parser("oracle", help="spectral oracles").add_subparsers(dest="sub", parser_class=_Parser)
    orc.required = True
    sp = add(orc, "eigs", cmd_oracle_eigs, "eigenvalues in a window")
    sp.add_argument("--window", default="-50,50")
    sp.add_argument("--grid", type=int, default=2000)
    sp.add_argument("--method", choices=["shooting", "galerkin"], default="shooting")
    sp.add_argument("--N", type=int, default=100)
    sp.add_argument("--tol", type=float, default=1e-11)
    sp = add(orc, "hill", cmd_oracle_hill, "eigenvalue product vs monodromy ratio")
    sp.add_argument("--alpha", default="1")
    sp.add_argument("--N", type=int, default=200)

    sl = sub.add_parser("sl", help="Sturm-Liouville problems").add_subparsers(dest="sub", parser_class=_Parser)
    sl.required = True
    sp = add(sl, "trace", cmd_sl_trace, "Lagrangian trace formula")
    sp.add_argument("--m-max", type=int, default=3)
    add(sl, "krein", cmd_sl_krein, "Krein sums")

    ix = sub.add_parser("index", help="index bounds").add_subparsers(dest="sub", parser_class=_Parser)
    ix.required = True
    sp = add(ix, "bracket", cmd_index_bracket, "relative Morse index bracket")
    sp.add_argument("--d1", required=True)
    sp.add_argument("--d2", required=True)
    sp.add_argument("--kmax", type=int, default=4)
    sp.add_argument("--no-oracle", action="store_true")

    sp = add(sub, "stability", cmd_stability, "stability criteria")
    sp.add_argument("--omegas", default="-1")

    tbp = sub.add_parser("threebody", help="elliptic Lagrangian orbits").add_subparsers(
        dest="sub", parser_class=_Parser)
    tbp.required = True
    for name, fn in (("f", cmd_tb_f), ("g", cmd_tb_g)):
        sp = add(tbp, name, fn, f"{name}(beta, omega)", config=False)
        sp.add_argument("--beta", type=float, required=True)
        sp.add_argument("--omega", default="-1")
        sp.add_argument("--u", type=float, default=None)
        if name == "f":
            sp.add_argument("--both-routes", action="store_true")
    sp = add(tbp, "curves", cmd_tb_curves, "region curves as CSV", config=False)
    sp.add_argument("--resolution", type=int, default=400)
    sp.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker processes")
    sp.add_argument("--tags", default=None)
    sp = add(tbp, "classify", cmd_tb_classify, "classify (beta, e)", config=False)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--e", type=float, required=True)
    sp.add_argument("--crosscheck", action="store_true")
    return p


def _glue_negative_values(argv: list[str]) -> list[str]:
    # "--window -200,200" would otherwise be read as an unknown option
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (tok.startswith("--") and "=" not in tok and nxt is not None and nxt.startswith("-")
                and len(nxt) > 1 and (nxt[1].isdigit() or nxt[1] in ".i")):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(_glue_negative_values(argv))
        args.command_path = " ".join(x for x in (args.command, getattr(args, "sub", None)) if x)
        started = time.perf_counter()
        text, tols = args.fn(args)
        _emit(args, text, tols, started)
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DegenerateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
