"""Command-line front end.

Exit codes: 0 success, 1 failed verification, 2 usage or parameter error,
3 numeric failure or non-convergence.  Output never contains timings, so
repeated runs with the same flags are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import frequencies, onedim, verify
from .errors import LekError, NumericError, ParameterError, ResourceError
from .geometry import load_domain, rasterize
from .pde import GridFunction, SolveOptions, solve_lane_emden

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_SEED = 0
VERIFY_CHECKS = ("comparison", "pointwise", "linfty", "localization", "hersch-protter",
                 "hidden-convexity", "gaps")


@dataclass
class CliConfig:
    command: str
    domain: str | None = None
    p: float = 2.0
    q: float = 1.0
    alpha: float = 1.0
    h: float | None = None
    tol: float | None = None
    out: str | None = None
    seed: int = DEFAULT_SEED
    json: bool = False

    @classmethod
    def from_args(cls, args):
        return cls(args.command, getattr(args, "domain", None), args.p, args.q, args.alpha,
                   getattr(args, "h", None), args.tol, args.out, args.seed, args.json)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _common(sp, domain=True, h=True):
    if domain:
        sp.add_argument("--domain", required=True, help="domain JSON file")
    sp.add_argument("--p", type=float, default=2.0, help="gradient exponent, p > 1 (default 2)")
    sp.add_argument("--q", type=float, default=1.0, help="source exponent, 1 <= q < p (default 1)")
    sp.add_argument("--alpha", type=float, default=1.0, help="source strength (default 1)")
    if h:
        sp.add_argument("--h", type=float, default=None,
                        help="grid spacing (default: inradius/32)")
    sp.add_argument("--tol", type=float, default=None,
                    help="solver residual tolerance (default 1e-8 in 1D, 1e-6 in 2D)")
    sp.add_argument("--max-iter", type=int, default=None,
                    help="solver iteration budget (default 200000)")
    sp.add_argument("--out", default=None, help="output file (CSV)")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for sampling (default 0)")
    sp.add_argument("--json", action="store_true", help="machine-readable report on stdout")


def build_parser():
    ap = _Parser(prog="lek", description="Sub-homogeneous p-Laplacian Lane-Emden toolkit.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver diagnostics")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("constants", help="one-dimensional constants and profiles")
    sp.add_argument("--N", type=int, default=2, help="dimension for the ball constants (default 2)")
    _common(sp, domain=False, h=False)

    sp = sub.add_parser("solve", help="positive solution on a grid, written as CSV")
    _common(sp)

    sp = sub.add_parser("lambda", help="generalized principal frequency")
    _common(sp)

    sp = sub.add_parser("verify", help="run one inequality check")
    sp.add_argument("check", choices=VERIFY_CHECKS)
    sp.add_argument("--domain", default=None, help="domain JSON file (inner domain for comparison)")
    sp.add_argument("--outer", default=None, help="outer domain JSON file for comparison")
    sp.add_argument("--r", type=float, default=None, help="interpolation exponent (default q)")
    sp.add_argument("--samples", type=int, default=1000, help="random trials (default 1000)")
    _common(sp, domain=False)

    sp = sub.add_parser("slab", help="growing rectangles against the 1D profile")
    sp.add_argument("--L", type=float, nargs="+", default=[2.0, 4.0, 8.0, 16.0],
                    help="rectangle lengths (default 2 4 8 16)")
    _common(sp, domain=False)

    sp = sub.add_parser("scan", help="frequencies over a list of q values")
    sp.add_argument("--q-list", type=float, nargs="+", required=True, help="increasing q values")
    _common(sp)
    return ap


def _threads():
    raw = os.environ.get("LEK_THREADS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ParameterError(f"LEK_THREADS must be an integer, got {raw!r}") from None


def _default_h(domain, h):
    return h if h is not None else domain.metrics().inradius / 32.0


def _options(args):
    if args.tol is None and args.max_iter is None:
        return None
    kw = {} if args.max_iter is None else {"max_iter": args.max_iter}
    return SolveOptions(tol=args.tol, **kw)


def _emit(payload, args, text):
    if args.json:
        print(json.dumps(payload))
    else:
        print(text)


def _report_dict(check, passed, worst, tol, h, args, domain, **extra):
    out = {"check": check, "pass": bool(passed), "worst": worst, "tol": tol, "h": h,
           "p": args.p, "q": args.q, "alpha": args.alpha, "domain": domain}
    out.update(extra)
    return out


def cmd_constants(args):
    p, q, n = args.p, args.q, args.N
    onedim.check_exponents(p, q)
    if n < 1:
        raise ParameterError("N must be at least 1")
    vals = {
        "p": p, "q": q, "N": n,
        "pi_pq": onedim.pi_pq(p, q),
        "wI_center": onedim.wI_center(p, q),
        "wI_mass": onedim.wI_mass(p, q),
        "wB1_center": onedim.radial_center(p, q, n),
        "localization_constant": onedim.localization_constant(n, p, q),
        "lambda_interval": onedim.lambda_pq_interval(p, q),
    }
    print(json.dumps(vals))
    return EXIT_OK


def cmd_solve(args):
    dom = load_domain(args.domain)
    h = _default_h(dom, args.h)
    w, rep = solve_lane_emden(dom, onedim.PQParams(args.p, args.q, args.alpha), h, _options(args))
    if args.out:
        w.to_csv(args.out)
    payload = _report_dict("solve", rep.converged, rep.target - rep.residual, 0.0, h, args, dom.ident,
                           iterations=rep.iterations, energy=rep.energy, residual=rep.residual,
                           max=w.sup(), nodes=w.grid.n_interior)
    _emit(payload, args, f"max {w.sup():.10g}  energy {rep.energy:.10g}  residual {rep.residual:.3e}"
                         f"  iterations {rep.iterations}  converged {rep.converged}")
    return EXIT_OK if rep.converged else EXIT_NUMERIC


def cmd_lambda(args):
    dom = load_domain(args.domain)
    h = _default_h(dom, args.h)
    res = frequencies.lambda_pq(dom, args.p, args.q, h, _options(args))
    payload = _report_dict("lambda", res.converged, res.normalized_gap, res.eps_h, h, args, dom.ident,
                           **{k: v for k, v in res.to_dict().items() if k not in ("h", "converged")})
    _emit(payload, args, f"lambda {res.lam:.10g}  mass {res.mass:.10g}"
                         f"  hersch-protter ratio {res.normalized_gap + 1:.6f}")
    return EXIT_OK if res.converged else EXIT_NUMERIC


def _random_pairs(grid, n, seed):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        v, w = GridFunction.zeros(grid), GridFunction.zeros(grid)
        v.values[grid.mask] = rng.uniform(0.0, 1.0, grid.n_interior)
        w.values[grid.mask] = rng.uniform(0.0, 1.0, grid.n_interior)
        yield v, w, float(rng.uniform())


def _worst_of(reports, name):
    worst = min(reports, key=lambda r: r.worst + r.tol)
    worst.check = name
    return worst


def cmd_verify(args):
    check = args.check
    need_domain = check not in ("gaps",)
    if need_domain and not args.domain:
        raise ParameterError(f"verify {check} needs --domain")
    dom = load_domain(args.domain) if args.domain else None
    opts = _options(args)
    if check == "comparison":
        if not args.outer:
            raise ParameterError("verify comparison needs --outer")
        rep = verify.check_comparison(dom, load_domain(args.outer), args.p, args.q,
                                      _default_h(dom, args.h), args.alpha, opts)
    elif check == "pointwise":
        rep = verify.check_pointwise_bounds(dom, args.p, args.q, args.alpha, _default_h(dom, args.h), opts)
    elif check == "linfty":
        rep = verify.check_linfty(dom, args.p, args.q, args.alpha, _default_h(dom, args.h), opts)
    elif check == "localization":
        rep = verify.check_localization(dom, args.p, args.q, args.alpha, _default_h(dom, args.h), opts)
    elif check == "hersch-protter":
        rep = verify.check_hersch_protter(dom, args.p, args.q, _default_h(dom, args.h), opts)
    elif check == "hidden-convexity":
        r = args.r if args.r is not None else args.q
        grid = rasterize(dom, _default_h(dom, args.h))
        reps = [verify.check_hidden_convexity(v, w, t, r, args.p)
                for v, w, t in _random_pairs(grid, args.samples, args.seed)]
        rep = _worst_of(reps, "hidden_convexity")
    else:
        r = args.r if args.r is not None else 2.0
        z, w, t = verify.sample_pairs(args.samples, 2, args.seed)
        f = verify.quantified_gap_r_ge2 if r >= 2 else verify.quantified_gap_r_lt2
        inf = float(np.min(f(z, w, t, r)))
        rep = verify.VerifyReport.make("gaps", inf, 0.0, p=None, q=None, alpha=None,
                                       details={"r": r, "samples": args.samples, "seed": args.seed})
    payload = rep.to_dict()
    extra = {k: v for k, v in rep.details.items() if isinstance(v, (int, float, str, bool))}
    payload.update({k: v for k, v in extra.items() if k not in payload})
    text = f"{rep.check}: {'pass' if rep.passed else 'FAIL'}  worst {rep.worst:.6g}  tol {rep.tol:.3g}"
    if "ratio" in rep.details:
        text += f"  ratio {rep.details['ratio']:.6f}"
    _emit(payload, args, text)
    if rep.details.get("converged") is False:
        return EXIT_NUMERIC
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_slab(args):
    h = args.h if args.h is not None else 2.0**-4
    rep = verify.check_slab_asymptotics(args.p, args.q, args.L, h, args.alpha, _options(args))
    payload = rep.to_dict()
    payload.update(errors=rep.details["errors"], L=rep.details["L"], rel_error=rep.details["rel_error"])
    _emit(payload, args, f"slab: {'pass' if rep.passed else 'FAIL'}  errors "
                         + " ".join(f"{e:.3e}" for e in rep.details["errors"]))
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_scan(args):
    dom = load_domain(args.domain)
    h = _default_h(dom, args.h)
    res = frequencies.continuity_scan(dom, args.p, args.q_list, h, _options(args), workers=_threads())
    text = res.to_csv(args.out)
    worst = min(min(r.lam / r.hp_lower - (1 - res.eps_h), (1 + res.eps_h) - r.lam / r.perim_upper)
                for r in res.rows)
    payload = _report_dict("scan", res.ok, worst, 0.0, h, args, dom.ident, modulus=res.modulus,
                           rows=[{"q": r.q, "lambda": r.lam, "hp_lower": r.hp_lower,
                                  "perim_upper": r.perim_upper, "ratio": r.ratio} for r in res.rows])
    payload["q"] = None
    _emit(payload, args, text.rstrip("\n"))
    return EXIT_OK if res.ok else EXIT_FAIL


COMMANDS = {"constants": cmd_constants, "solve": cmd_solve, "lambda": cmd_lambda,
            "verify": cmd_verify, "slab": cmd_slab, "scan": cmd_scan}


def run(argv=None):
    """Parse ``argv`` and dispatch; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger(__name__).debug("config %s", CliConfig.from_args(args))
    for name in ("p", "q", "alpha", "h", "tol"):
        val = getattr(args, name, None)
        if val is not None and not math.isfinite(val):
            print(f"lek: error: --{name} must be finite", file=sys.stderr)
            return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (ParameterError, ResourceError, FileNotFoundError) as exc:
        print(f"lek: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"lek: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LekError as exc:
        print(f"lek: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main():
    sys.exit(run())
