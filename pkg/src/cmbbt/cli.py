"""Command-line frontend.

Subcommands read a problem document (see :mod:`cmbbt.document`), run one
solver and print a JSON result document. Exit codes: 0 ok, 1 usage or
parse error, 2 singular symbol, 3 ``N`` too small, 4 eigenvalue search
incomplete. Errors are printed to stderr as a JSON object.
"""

import argparse
import logging
import sys
from typing import List, Optional

import numpy as np

from .boundary import assemble, kernel
from .bulk import bulk_basis
from .document import SCHEMA, array_pairs, complex_pair, dumps, parse_problem, problem_document
from .eigensystem import SearchConfig, eigenvalues, generalized_eigenspace
from .exceptions import (NTooSmall, OracleCapExceeded, ProblemFormatError, SearchIncomplete,
                         SingularSymbol)
from .laurent import is_regular
from .models import KitaevParams, kitaev_closed_form_check, kitaev_spec, kitaev_symbol
from .numerics import fix_phase
from .problem import ProblemSpec
from .semiinfinite import SemiInfiniteSpec, decaying_bulk_basis, semi_kernel

EXIT_OK, EXIT_USAGE, EXIT_SINGULAR, EXIT_N_TOO_SMALL, EXIT_INCOMPLETE = 0, 1, 2, 3, 4
DEFAULT_KERNEL_TOL = 1e-8


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with status 1."""

    def error(self, message):
        _emit_error("UsageError", message, usage=self.format_usage().strip())
        raise SystemExit(EXIT_USAGE)


def _emit_error(kind: str, message: str, **extra):
    payload = {"schema": SCHEMA, "error": kind, "message": message}
    payload.update(extra)
    print(dumps(payload), file=sys.stderr)


def _parse_complex(text: str) -> complex:
    """``"re"``, ``"re,im"`` or a Python complex literal such as ``"1+2j"``."""
    text = text.strip()
    try:
        if "," in text:
            re_, im_ = text.split(",", 1)
            return complex(float(re_), float(im_))
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _parse_pair(text: str):
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"empty interval {text!r}")
    return lo, hi


def _parse_region(text: str):
    try:
        cx, cy, r = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'cx,cy,r', got {text!r}") from None
    if r <= 0:
        raise argparse.ArgumentTypeError("region radius must be positive")
    return complex(cx, cy), r


def _read_problem(path: str):
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise ProblemFormatError(f"cannot read {path}: {exc.strerror}") from None
    return parse_problem(text)


def _dense_vector(vec) -> list:
    v = np.asarray(vec, dtype=complex)
    nrm = np.linalg.norm(v)
    if nrm > 0:
        v = fix_phase(v / nrm)
    return array_pairs(v)


def _roots_report(clusters) -> list:
    return [{"z": complex_pair(cl.z), "s": int(cl.multiplicity)} for cl in clusters]


# --------------------------------------------------------------------------
# commands


def run_kernel(spec, epsilon=0.0, tol: Optional[float] = DEFAULT_KERNEL_TOL, dump_dense=False,
               dump_boundary=False) -> dict:
    """Kernel of ``C - epsilon`` as a result document."""
    if isinstance(spec, SemiInfiniteSpec):
        return run_semi(spec, epsilon, tol=tol)
    epsilon = complex(epsilon)
    shifted = spec.symbol - epsilon if epsilon != 0 else spec.symbol
    regular = not shifted.is_zero and is_regular(shifted)
    if not regular:
        raise SingularSymbol(epsilon)
    basis = bulk_basis(spec, epsilon)
    B = assemble(spec, basis)
    alphas = kernel(B, atol=tol, canonical=True)
    out = {
        "schema": SCHEMA,
        "command": "kernel",
        "epsilon": complex_pair(epsilon),
        "regular": True,
        "roots": _roots_report(basis.clusters),
        "counts": basis.counts,
        "kernel_dim": len(alphas),
        "smallest_singular_value": float(B.smallest_singular_value()) if len(basis) else None,
        "vectors": [],
    }
    for a in alphas:
        entry = {"alpha": array_pairs(a)}
        if dump_dense:
            entry["dense"] = _dense_vector(basis.expand(a))
        out["vectors"].append(entry)
    if dump_boundary:
        out["boundary_matrix"] = {
            "rows": [[b, m] for b, m in B.row_index],
            "entries": array_pairs(B.entries),
            "scales": [float(x) for x in B.scales],
            "singular_values": [float(x) for x in B.singular_values()],
        }
    return out


def run_spectrum(spec: ProblemSpec, config: SearchConfig) -> dict:
    """Eigenvalues as a result document; ``complete`` is false/true/null."""
    res = eigenvalues(spec, config)
    diag = res.diagnostics
    out = {
        "schema": SCHEMA,
        "command": "spectrum",
        "hermitian_scan": bool(diag["hermitian"]),
        "eigenvalues": [{
            "epsilon": complex_pair(r.epsilon),
            "geometric": r.geometric,
            "algebraic": r.algebraic,
            "kappa_max": r.kappa_max,
            "residual": float(r.residual),
            "singular": r.singular,
        } for r in res.eigenvalues],
        "singular_epsilons": [complex_pair(e) for e in diag["singular_epsilons"]],
        "exceptional_epsilons": [complex_pair(e) for e in diag["exceptional_epsilons"]],
        "multiplicity_total": int(diag["multiplicity_total"]),
        "size": spec.size,
        "complete": diag["complete"],
        "evaluations": int(diag["evaluations"]),
    }
    if "oracle" in diag:
        out["oracle"] = diag["oracle"]
    return out


def run_geneig(spec: ProblemSpec, epsilon, dump_dense=False, max_kappa=None) -> dict:
    ge = generalized_eigenspace(spec, epsilon, max_kappa=max_kappa)
    vectors = []
    for v in ge.vectors:
        entry = {"rank": v.rank}
        if v.alpha is not None:
            entry["alpha"] = array_pairs(v.alpha)
        if dump_dense or v.alpha is None:
            entry["dense"] = _dense_vector(v.to_dense())
        vectors.append(entry)
    return {
        "schema": SCHEMA,
        "command": "geneig",
        "epsilon": complex_pair(epsilon),
        "kappa_max": ge.kappa_max,
        "dims": ge.dims,
        "routes": ge.routes,
        "vectors": vectors,
    }


def run_semi(spec: SemiInfiniteSpec, epsilon=0.0, tol: Optional[float] = DEFAULT_KERNEL_TOL,
             sites: int = 0) -> dict:
    epsilon = complex(epsilon)
    db = decaying_bulk_basis(spec.symbol, epsilon, (spec.p, spec.q))
    states = semi_kernel(spec, epsilon, atol=tol)
    out = {
        "schema": SCHEMA,
        "command": "semi",
        "epsilon": complex_pair(epsilon),
        "decaying_roots": _roots_report(db.basis.clusters),
        "marginal_roots": _roots_report(db.marginal),
        "growing_roots": _roots_report(db.outside),
        "counts": db.basis.counts,
        "kernel_dim": len(states),
        "states": [],
    }
    for st in states:
        entry = {"alpha": array_pairs(st.alpha), "z_dom": st.z_dom, "residual": st.residual,
                 "tail_bound_64": st.tail_bound(db.basis.sigma + 64)}
        if sites:
            entry["sites"] = array_pairs(st.sites(sites))
        out["states"].append(entry)
    return out


def run_kitaev(args) -> dict:
    params = KitaevParams(args.mu, args.t, args.delta, args.N)
    if args.semi:
        spec = SemiInfiniteSpec(kitaev_symbol(args.mu, args.t, args.delta), bandwidth=(-1, 1))
        return run_semi(spec, args.epsilon if args.epsilon is not None else 0.0,
                        sites=args.sites)
    spec = kitaev_spec(params)
    if args.emit_problem:
        return problem_document(spec, hermitian=True)
    closed = np.isclose(args.t, args.delta, rtol=1e-14, atol=0) and args.mu * args.t != 0
    if args.epsilon is not None:
        out = run_kernel(spec, args.epsilon, dump_dense=args.dump_dense)
        if closed:
            chk = kitaev_closed_form_check(params, args.epsilon, out["kernel_dim"] > 0)
            out["closed_form"] = {"eigenvalue": chk.closed_form_eigenvalue, "agrees": chk.passed,
                                  "residual": chk.residual, "special": chk.special}
        return out
    out = run_spectrum(spec, SearchConfig(hermitian=True, oracle_check=args.oracle_check,
                                          threads=args.threads))
    if closed:
        for rec in out["eigenvalues"]:
            if rec["singular"]:
                continue
            eps = complex(*rec["epsilon"])
            chk = kitaev_closed_form_check(params, eps, True)
            rec["closed_form_residual"] = chk.residual
    return out


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cmbbt", description="Exact eigensolver for corner-modified banded "
                     "block-Toeplitz matrices.")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for independent evaluations (default 1)")
    parser.add_argument("--compact", action="store_true", help="print JSON on one line")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    k = sub.add_parser("kernel", help="kernel of C - epsilon")
    k.add_argument("file", help="problem document ('-' for stdin)")
    k.add_argument("--epsilon", type=_parse_complex, default=0j, help="'re,im' (default 0)")
    k.add_argument("--tol", type=float, default=DEFAULT_KERNEL_TOL,
                   help="threshold on normalized singular values of B (default 1e-8)")
    k.add_argument("--dump-dense", action="store_true", help="include reconstructed vectors")
    k.add_argument("--dump-boundary", action="store_true", help="include the boundary matrix")

    s = sub.add_parser("spectrum", help="eigenvalues and multiplicities")
    s.add_argument("file")
    s.add_argument("--region", type=_parse_region, help="search disk 'cx,cy,r'")
    s.add_argument("--interval", type=_parse_pair, help="real interval 'lo,hi' for the real scan")
    s.add_argument("--real-scan", action="store_true", help="force the Hermitian real-line scan")
    s.add_argument("--max-roots", type=int)
    s.add_argument("--grid", type=int, help="initial grid size")
    s.add_argument("--oracle-check", action="store_true",
                   help="compare with a dense eigensolver (small problems only)")
    s.add_argument("--jordan", action="store_true",
                   help="compute algebraic multiplicities at every eigenvalue")

    g = sub.add_parser("geneig", help="generalized eigenvectors at one eigenvalue")
    g.add_argument("file")
    g.add_argument("--epsilon", type=_parse_complex, required=True)
    g.add_argument("--max-kappa", type=int)
    g.add_argument("--dump-dense", action="store_true")

    kt = sub.add_parser("kitaev", help="Kitaev chain: spectrum, kernel or half-line bound states")
    kt.add_argument("--mu", type=float, required=True)
    kt.add_argument("--t", type=float, required=True)
    kt.add_argument("--delta", type=float, required=True)
    kt.add_argument("--N", type=int, default=10)
    kt.add_argument("--epsilon", type=_parse_complex,
                    help="compute the kernel at this value instead of the spectrum")
    kt.add_argument("--semi", action="store_true", help="half-line bound states")
    kt.add_argument("--sites", type=int, default=0, help="with --semi: dump sites 1..SITES")
    kt.add_argument("--dump-dense", action="store_true")
    kt.add_argument("--oracle-check", action="store_true")
    kt.add_argument("--emit-problem", action="store_true", help="print the problem document")

    sm = sub.add_parser("semi", help="square-summable kernel on the half line")
    sm.add_argument("file")
    sm.add_argument("--epsilon", type=_parse_complex, default=0j)
    sm.add_argument("--tol", type=float, default=DEFAULT_KERNEL_TOL)
    sm.add_argument("--sites", type=int, default=0, help="dump sites 1..SITES of each state")
    return parser


def _dispatch(args) -> dict:
    if args.command == "kitaev":
        return run_kitaev(args)
    spec = _read_problem(args.file)
    if args.command == "kernel":
        return run_kernel(spec, args.epsilon, args.tol, args.dump_dense, args.dump_boundary)
    if args.command == "semi":
        if not isinstance(spec, SemiInfiniteSpec):
            spec = SemiInfiniteSpec(spec.symbol, bandwidth=(spec.p, spec.q))
        return run_semi(spec, args.epsilon, args.tol, args.sites)
    if isinstance(spec, SemiInfiniteSpec):
        raise ProblemFormatError(f"'{args.command}' needs a finite problem (mode 'finite')", "$.mode")
    if args.command == "spectrum":
        cfg = SearchConfig(max_roots=args.max_roots, oracle_check=args.oracle_check,
                           threads=args.threads, grid=args.grid, jordan=args.jordan)
        if args.real_scan:
            cfg.hermitian = True
        if args.region:
            cfg.center, cfg.radius = args.region
        if args.interval:
            cfg.interval = args.interval
            cfg.hermitian = True if cfg.hermitian is None else cfg.hermitian
        return run_spectrum(spec, cfg)
    return run_geneig(spec, args.epsilon, args.dump_dense, args.max_kappa)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        out = _dispatch(args)
    except ProblemFormatError as exc:
        _emit_error("ProblemFormatError", str(exc), path=exc.path)
        return EXIT_USAGE
    except SingularSymbol as exc:
        eps = None if exc.epsilon is None else complex_pair(exc.epsilon)
        _emit_error("SingularSymbol", str(exc), epsilon=eps)
        return EXIT_SINGULAR
    except NTooSmall as exc:
        _emit_error("NTooSmall", str(exc))
        return EXIT_N_TOO_SMALL
    except SearchIncomplete as exc:
        _emit_error("SearchIncomplete", str(exc))
        return EXIT_INCOMPLETE
    except (OracleCapExceeded, ValueError) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return EXIT_USAGE
    print(dumps(out, indent=None if args.compact else 2))
    if out.get("command") == "spectrum" and out.get("complete") is False:
        _emit_error("SearchIncomplete",
                    f"found multiplicity {out['multiplicity_total']} of {out['size']}")
        return EXIT_INCOMPLETE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
