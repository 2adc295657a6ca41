"""Generalized principal frequencies from the positive solution's mass.

With ``w`` the positive solution for ``alpha = 1``, optimality gives
``sum |grad w|^p = sum w^q`` and the frequency is ``(h^N sum w^q)^{-(p-q)/q}``.
The Hersch-Protter ratio normalizes it by the inradius bound, so convex
domains should give values ``>= 1`` up to the discretization margin.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError
from .geometry import ConvexDomain
from .onedim import PQParams, check_exponents, pi_pq
from .pde import GridFunction, SolveOptions, forward_gradient, solve_lane_emden

# frequency solves run tighter than the default so the optimality identity
# holds well below the acceptance margins
FREQUENCY_TOL = 1e-10


@dataclass
class FrequencyResult:
    lam: float
    mass: float
    normalized_gap: float
    eps_h: float
    h: float
    converged: bool = True

    def to_dict(self):
        return {
            "lambda": self.lam, "mass": self.mass, "normalized_gap": self.normalized_gap,
            "eps_h": self.eps_h, "h": self.h, "converged": self.converged,
        }


def discretization_margin(h):
    """Pass margin for normalized inequality checks at spacing ``h``."""
    return max(0.02, 10.0 * h)


def _solve(domain, p, q, h, options):
    opts = options or SolveOptions()
    if opts.tol is None:
        opts = replace(opts, tol=FREQUENCY_TOL)
    return solve_lane_emden(domain, PQParams(p, q, 1.0), h, opts)


def hp_lower_bound(domain: ConvexDomain, p, q):
    """Continuum lower bound ``(pi_pq / 2)^p r^{-p} |Omega|^{-(p-q)/q}``."""
    check_exponents(p, q)
    m = domain.metrics()
    return (pi_pq(p, q) / 2.0) ** p / (m.inradius**p * m.area ** ((p - q) / q))


def _hp_factor(domain, p, q):
    m = domain.metrics()
    return m.area ** ((p - q) / q) * m.inradius**p * (2.0 / pi_pq(p, q)) ** p


def frequency_from_solution(w: GridFunction, p, q):
    """Frequency and mass of an already computed ``alpha = 1`` solution."""
    hn = w.grid.h**w.grid.dim
    mass = hn * float(np.sum(np.abs(w.interior) ** q))
    if not mass > 0:
        raise ParameterError("solution has zero mass")
    return mass ** (-(p - q) / q), mass


def lambda_pq(domain: ConvexDomain, p, q, h, options: SolveOptions | None = None) -> FrequencyResult:
    check_exponents(p, q)
    w, rep = _solve(domain, p, q, h, options)
    lam, mass = frequency_from_solution(w, p, q)
    gap = lam * _hp_factor(domain, p, q) - 1.0
    return FrequencyResult(lam, mass, gap, discretization_margin(h), h, rep.converged)


def rayleigh_quotient(f: GridFunction, p, q):
    """``h^N sum |grad_h f|^p / (h^N sum |f|^q)^{p/q}`` (0-homogeneous)."""
    check_exponents(p, q)
    hn = f.grid.h**f.grid.dim
    comps = forward_gradient(f.values, f.grid.h)
    num = hn * float(np.sum(np.sqrt(sum(c * c for c in comps)) ** p))
    den = hn * float(np.sum(np.abs(f.values) ** q))
    if not den > 0:
        raise ParameterError("Rayleigh quotient of the zero function")
    return num / den ** (p / q)


def hersch_protter_ratio(domain: ConvexDomain, p, q, h, options=None):
    """``lambda |Omega|^{(p-q)/q} r^p (2/pi_pq)^p``; at least 1 for convex sets."""
    return lambda_pq(domain, p, q, h, options).normalized_gap + 1.0


def perimeter_upper_bound(domain: ConvexDomain, p, q):
    """``(pi_pq/2)^p (P / |Omega|^{1 - 1/p + 1/q})^p``."""
    check_exponents(p, q)
    m = domain.metrics()
    return (pi_pq(p, q) / 2.0) ** p * (m.perimeter / m.area ** (1.0 - 1.0 / p + 1.0 / q)) ** p


def ratio_upper_bound(domain: ConvexDomain, p):
    """Upper bound ``r^p (P/|Omega|)^p`` on the Hersch-Protter ratio."""
    m = domain.metrics()
    return (m.inradius * m.perimeter / m.area) ** p


@dataclass
class ScanRow:
    q: float
    lam: float
    hp_lower: float
    perim_upper: float
    ratio: float
    normalized: float
    in_bracket: bool


@dataclass
class ScanResult:
    rows: list
    eps_h: float
    modulus: float

    @property
    def ok(self):
        return all(r.in_bracket and math.isfinite(r.lam) and r.lam > 0 for r in self.rows)

    def to_csv(self, path=None):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["q", "lambda", "hp_lower", "perim_upper", "ratio"])
        for r in self.rows:
            wr.writerow([repr(r.q), f"{r.lam:.12g}", f"{r.hp_lower:.12g}",
                         f"{r.perim_upper:.12g}", f"{r.ratio:.12g}"])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def continuity_scan(domain: ConvexDomain, p, q_list, h, options=None, workers=1) -> ScanResult:
    """Frequencies over increasing ``q`` with the two-sided bracket.

    ``modulus`` is the largest difference quotient of the normalized values
    ``lambda |Omega|^{(p-q)/q}`` between neighbouring ``q``.  Each ``q`` is an
    independent solve; ``workers > 1`` runs them in a thread pool (rows keep
    the input order).
    """
    qs = [float(q) for q in q_list]
    if not qs:
        raise ParameterError("empty q list")
    if any(b <= a for a, b in zip(qs, qs[1:])):
        raise ParameterError("q list must be strictly increasing")
    for q in qs:
        check_exponents(p, q)
    area = domain.metrics().area
    eps_h = discretization_margin(h)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda q: lambda_pq(domain, p, q, h, options), qs))
    else:
        results = [lambda_pq(domain, p, q, h, options) for q in qs]
    rows = []
    for q, res in zip(qs, results):
        lo, hi = hp_lower_bound(domain, p, q), perimeter_upper_bound(domain, p, q)
        ok = lo * (1 - eps_h) <= res.lam <= hi * (1 + eps_h)
        rows.append(ScanRow(q, res.lam, lo, hi, res.normalized_gap + 1.0,
                            res.lam * area ** ((p - q) / q), ok))
    modulus = max((abs(b.normalized - a.normalized) / (b.q - a.q) for a, b in zip(rows, rows[1:])),
                  default=0.0)
    return ScanResult(rows, eps_h, modulus)
