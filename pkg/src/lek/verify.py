"""Numerical certificates for the estimates satisfied by positive solutions.

Every check returns a :class:`VerifyReport` whose ``worst`` field is the
smallest signed margin over everything inspected (negative means the
inequality is violated) and whose pass flag is exactly ``worst >= -tol``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, UndefinedRatioError
from .frequencies import discretization_margin, lambda_pq, ratio_upper_bound
from .geometry import Box, ConvexDomain, Disk, Interval, Polygon, contains
from .onedim import (
    PQParams,
    localization_constant,
    radial_center,
    wB1_profile,
    wI_center,
    wI_profile,
)
from .pde import GridFunction, SolveOptions, dirichlet, solve_lane_emden

# relative roundoff allowance for inequalities that hold exactly
EXACT_RTOL = 1e-12


@dataclass
class VerifyReport:
    check: str
    passed: bool
    worst: float
    tol: float
    h: float | None = None
    p: float | None = None
    q: float | None = None
    alpha: float | None = None
    domain: str | None = None
    details: dict = field(default_factory=dict)

    @classmethod
    def make(cls, check, worst, tol, **kw):
        worst, tol = float(worst), float(tol)
        return cls(check, bool(worst >= -tol), worst, tol, **kw)

    def to_dict(self, details=False):
        out = {
            "check": self.check, "pass": self.passed, "worst": self.worst, "tol": self.tol,
            "h": self.h, "p": self.p, "q": self.q, "alpha": self.alpha, "domain": self.domain,
        }
        if details:
            out["details"] = self.details
        return out

    def to_json(self, details=False):
        return json.dumps(self.to_dict(details), sort_keys=False)


def _meta(domain, params, h):
    return dict(h=h, p=params.p, q=params.q, alpha=params.alpha,
                domain=None if domain is None else domain.ident)


def _solve(domain, params, h, options):
    w, rep = solve_lane_emden(domain, params, h, options)
    return w, rep


def _solver_sup_tol(options, dim, sup):
    """Sup-norm tolerance matched to the solver residual tolerance."""
    tol = (options or SolveOptions()).tolerance(dim)
    return 10.0 * tol * max(sup, 1.0)


def pointwise_tol(h, sup_w, inradius):
    """``10 h sup(w) / r``: the first-order interpolation margin."""
    return 10.0 * h * sup_w / inradius


def _amp(params):
    return params.alpha ** (1.0 / (params.p - params.q))


def common_values(small: GridFunction, big: GridFunction):
    """Values of both functions at the interior nodes of ``small``.

    Both grids must live on the same lattice ``h Z^N``.
    """
    gs, gb = small.grid, big.grid
    if not math.isclose(gs.h, gb.h, rel_tol=1e-12) or gs.dim != gb.dim:
        raise ParameterError("grids do not share a lattice")
    idx = np.nonzero(gs.mask)
    shifted = tuple(i + s - b for i, s, b in zip(idx, gs.start, gb.start))
    for i, n in zip(shifted, gb.shape):
        if i.size and (i.min() < 0 or i.max() >= n):
            raise ParameterError("inner grid is not covered by the outer grid")
    return small.values[idx], big.values[shifted]


# ---------------------------------------------------------------------------
# comparison and a-priori bounds


def check_comparison(inner: ConvexDomain, outer: ConvexDomain, p, q, h, alpha=1.0,
                     options: SolveOptions | None = None) -> VerifyReport:
    """Solution on ``inner`` lies below the solution on ``outer``."""
    if not contains(outer, inner):
        raise ParameterError(f"{inner.ident} is not contained in {outer.ident}")
    params = PQParams(p, q, alpha)
    w_in, r_in = _solve(inner, params, h, options)
    w_out, r_out = _solve(outer, params, h, options)
    a, b = common_values(w_in, w_out)
    worst = float(np.min(b - a)) if a.size else 0.0
    tol = _solver_sup_tol(options, inner.dim, w_out.sup())
    return VerifyReport.make(
        "comparison", worst, tol, **_meta(inner, params, h),
        details={"outer": outer.ident, "sup_inner": w_in.sup(), "sup_outer": w_out.sup(),
                 "converged": r_in.converged and r_out.converged},
    )


def _bounds(domain, params, grid):
    """Ball lower bound and distance-profile upper bound at every node."""
    p, q = params.p, params.q
    m = domain.metrics()
    r, x0 = m.inradius, np.asarray(m.incenter)
    expo = p / (p - q)
    amp = _amp(params) * r**expo
    pts = grid.points(interior_only=True)
    rho = np.linalg.norm(pts - x0, axis=1) / r
    lower = amp * wB1_profile(p, q, grid.dim)(rho)
    d = np.asarray(domain.distance(pts))
    upper = amp * wI_profile(p, q)(d / r - 1.0)
    return lower, upper


def check_pointwise_bounds(domain: ConvexDomain, p, q, alpha=1.0, h=None,
                           options: SolveOptions | None = None, solution=None) -> VerifyReport:
    """Ball profile below ``w`` and the distance profile above it.

    ``details`` carries the separate lower and upper margins, the constant
    ``C`` in ``tol = C h`` and the largest gap to the lower bound.
    """
    params = PQParams(p, q, alpha)
    w = solution if solution is not None else _solve(domain, params, h, options)[0]
    h = w.grid.h
    lower, upper = _bounds(domain, params, w.grid)
    x = w.interior
    r = domain.metrics().inradius
    tol = pointwise_tol(h, w.sup(), r)
    lo_margin = float(np.min(x - lower))
    up_margin = float(np.min(upper - x))
    return VerifyReport.make(
        "pointwise", min(lo_margin, up_margin), tol, **_meta(domain, params, h),
        details={"lower_margin": lo_margin, "upper_margin": up_margin, "C": tol / h,
                 "lower_gap": float(np.max(np.abs(x - lower)))},
    )


def linfty_bounds(p, q, alpha=1.0, N=2):
    """Bracket for ``r^{-p/(p-q)} sup w`` over convex domains in ``R^N``."""
    amp = alpha ** (1.0 / (p - q))
    return amp * radial_center(p, q, N), amp * wI_center(p, q)


def check_linfty(domain: ConvexDomain, p, q, alpha=1.0, h=None,
                 options: SolveOptions | None = None, solution=None) -> VerifyReport:
    """Normalized maximum between the ball and slab values."""
    params = PQParams(p, q, alpha)
    w = solution if solution is not None else _solve(domain, params, h, options)[0]
    h = w.grid.h
    r = domain.metrics().inradius
    lo, hi = linfty_bounds(p, q, alpha, w.grid.dim)
    val = w.sup() / r ** (p / (p - q))
    tol = pointwise_tol(h, w.sup(), r)
    return VerifyReport.make(
        "linfty", min(val - lo, hi - val), tol, **_meta(domain, params, h),
        details={"normalized_sup": val, "lower": lo, "upper": hi,
                 "upper_rel_gap": (hi - val) / hi},
    )


def check_localization(domain: ConvexDomain, p, q, alpha=1.0, h=None,
                       options: SolveOptions | None = None, solution=None) -> VerifyReport:
    """Near-maximum nodes keep distance ``>= C r - h`` from the boundary."""
    params = PQParams(p, q, alpha)
    w = solution if solution is not None else _solve(domain, params, h, options)[0]
    h = w.grid.h
    m = domain.metrics()
    c = localization_constant(w.grid.dim, p, q)
    x = w.interior
    top = float(x.max())
    near = x >= top - _solver_sup_tol(options, w.grid.dim, top)
    d = np.asarray(domain.distance(w.grid.points(True)[near]))
    worst = float(np.min(d - (c * m.inradius - h)))
    return VerifyReport.make(
        "localization", worst, EXACT_RTOL * m.inradius, **_meta(domain, params, h),
        details={"C": c, "n_max_nodes": int(near.sum()), "min_distance": float(d.min())},
    )


def check_hersch_protter(domain: ConvexDomain, p, q, h,
                         options: SolveOptions | None = None) -> VerifyReport:
    """Inradius lower bound on the frequency: normalized ratio at least 1."""
    res = lambda_pq(domain, p, q, h, options)
    ratio = res.normalized_gap + 1.0
    return VerifyReport.make(
        "hersch-protter", res.normalized_gap, discretization_margin(h),
        h=h, p=p, q=q, alpha=1.0, domain=domain.ident,
        details={"ratio": ratio, "lambda": res.lam, "mass": res.mass,
                 "ratio_upper": ratio_upper_bound(domain, p), "converged": res.converged},
    )


def random_hexagon(rng, scale=1.0):
    """Convex hexagon: sorted angles on a circle, then an anisotropic stretch."""
    while True:
        ang = np.sort(rng.uniform(0.0, 2 * math.pi, 6))
        gaps = np.diff(np.append(ang, ang[0] + 2 * math.pi))
        if gaps.min() > 0.35 and gaps.max() < math.pi * 0.8:
            break
    sx, sy = rng.uniform(0.8, 1.4, 2) * scale
    verts = [(sx * math.cos(a), sy * math.sin(a)) for a in ang]
    return Polygon(verts)


def standard_corpus(seed=2024):
    """Twelve convex test domains: boxes, disks, triangles and hexagons."""
    rng = np.random.default_rng(seed)
    return [
        Box((-1.0, -1.0), (1.0, 1.0)),
        Box((0.0, 0.0), (3.0, 1.5)),
        Box((-2.0, -0.75), (2.0, 0.75)),
        Disk((0.0, 0.0), 1.0),
        Disk((0.5, -0.3), 1.3),
        Disk((0.0, 0.0), 0.8),
        Polygon([(0.0, 0.0), (2.0, 0.0), (1.0, math.sqrt(3.0))]),
        Polygon([(0.0, 0.0), (2.0, 0.0), (0.0, 2.0)]),
        Polygon([(0.0, 0.0), (3.0, 0.0), (0.5, 1.2)]),
        random_hexagon(rng),
        random_hexagon(rng),
        random_hexagon(rng, 1.5),
    ]


def slab(L):
    """The rectangle ``(-L/2, L/2) x (-1, 1)``."""
    return Box((-L / 2.0, -1.0), (L / 2.0, 1.0))


def check_slab_asymptotics(p, q, L_list, h, alpha=1.0,
                           options: SolveOptions | None = None) -> VerifyReport:
    """Growing rectangles: monotone in ``L`` and converging to the 1D profile.

    ``details["errors"]`` lists the central-quarter sup errors against the
    interval profile and ``details["rel_error"]`` the last one relative to
    its maximum.
    """
    Ls = [float(L) for L in L_list]
    if len(Ls) < 2:
        raise ParameterError("need at least two lengths")
    if any(b < a for a, b in zip(Ls, Ls[1:])):
        raise ParameterError("lengths must be nondecreasing")
    params = PQParams(p, q, alpha)
    amp = _amp(params)
    prof = wI_profile(p, q)
    top = amp * wI_center(p, q)
    sols, errors = [], []
    for L in Ls:
        w, _ = _solve(slab(L), params, h, options)
        pts = w.grid.points(True)
        central = np.abs(pts[:, 0]) <= L / 8.0
        errors.append(float(np.max(np.abs(w.interior[central] - amp * prof(pts[central, 1])))))
        sols.append(w)
    # the 1D discrete profile differs from the continuum one at O(h) for p != 2
    w1, _ = _solve(Interval(-1.0, 1.0), params, h, options)
    x1 = w1.grid.points(True)[:, 0]
    disc = float(np.max(np.abs(w1.interior - amp * prof(x1))))
    tol = _solver_sup_tol(options, 2, top) + disc
    mono = min(float(np.min(b - a)) for a, b in
               (common_values(s1, s2) for s1, s2 in zip(sols, sols[1:])))
    decr = min(e1 - e2 for e1, e2 in zip(errors, errors[1:]))
    bound = min(top - w.sup() for w in sols)
    return VerifyReport.make(
        "slab", min(mono, decr, bound), tol, h=h, p=p, q=q, alpha=alpha, domain="slab",
        details={"L": Ls, "errors": errors, "rel_error": errors[-1] / top,
                 "monotone_margin": mono, "decrease_margin": decr, "bound_margin": bound,
                 "profile_discretization": disc},
    )


# ---------------------------------------------------------------------------
# hidden convexity


def _check_pair(v, w, t, r):
    if v.grid is not w.grid and (v.grid.shape != w.grid.shape or v.grid.h != w.grid.h):
        raise ParameterError("v and w must live on the same grid")
    if np.any(v.values < 0) or np.any(w.values < 0):
        raise ParameterError("hidden convexity needs nonnegative functions")
    if not 0.0 <= t <= 1.0:
        raise ParameterError("t must lie in [0, 1]")
    if not r >= 1.0:
        raise ParameterError("r must be at least 1")


def interpolate_r(v: GridFunction, w: GridFunction, t, r):
    """``((1-t) v^r + t w^r)^{1/r}`` nodewise, on every node."""
    vals = ((1.0 - t) * v.values**r + t * w.values**r) ** (1.0 / r)
    return GridFunction(v.grid, vals)


def convexity_gap(v, w, t, r, p):
    """``(1-t) D(v) + t D(w) - D(sigma_t)`` and the right-hand side."""
    h = v.grid.h
    rhs = (1.0 - t) * dirichlet(v.values, h, p) + t * dirichlet(w.values, h, p)
    lhs = dirichlet(interpolate_r(v, w, t, r).values, h, p)
    return rhs - lhs, rhs


def hidden_convexity_slack(dim, r, h, rhs):
    """Zero where the discrete inequality is exact, else ``h * rhs``."""
    if dim == 1 or r <= 2.0:
        return 0.0
    return h * rhs


def check_hidden_convexity(v: GridFunction, w: GridFunction, t, r, p) -> VerifyReport:
    """Discrete Dirichlet energy is convex along the ``r``-interpolation.

    Requires ``1 <= r <= p``.  On 1D grids, and on 2D grids with ``r <= 2``,
    the inequality holds exactly and only roundoff is tolerated.
    """
    _check_pair(v, w, t, r)
    if not p > 1:
        raise ParameterError("need p > 1")
    if r > p:
        raise ParameterError(f"r = {r} exceeds p = {p}")
    gap, rhs = convexity_gap(v, w, t, r, p)
    slack = hidden_convexity_slack(v.grid.dim, r, v.grid.h, rhs)
    tol = slack + EXACT_RTOL * max(rhs, 1e-300)
    return VerifyReport.make(
        "hidden_convexity", gap, tol, h=v.grid.h, p=p, q=None, alpha=None,
        domain=None if v.grid.domain is None else v.grid.domain.ident,
        details={"t": t, "r": r, "slack": slack, "rhs": rhs},
    )


def _proportional(v, w):
    a, b = v.values.ravel(), w.values.ravel()
    nb = float(b @ b)
    if nb == 0:
        return False
    c = float(a @ b) / nb
    return c > 0 and float(np.abs(a - c * b).max()) <= EXACT_RTOL * max(float(np.abs(a).max()), 1e-300)


def _shifted(v, w):
    diff = v.values - w.values
    return float(np.ptp(diff)) <= EXACT_RTOL * max(float(np.abs(v.values).max()), 1e-300)


def check_equality_cases(v: GridFunction, w: GridFunction, t, r, p) -> VerifyReport:
    """Equality for ``v = C w`` (``r = p``) or ``v = w + C`` (``r = 1``), strict otherwise.

    Values on every node count, so the shift case needs the shift on the
    exterior layer too.
    """
    _check_pair(v, w, t, r)
    if not 1.0 <= r <= p:
        raise ParameterError("need 1 <= r <= p")
    gap, rhs = convexity_gap(v, w, t, r, p)
    scale = max(rhs, 1e-300)
    equal = (r == p and _proportional(v, w)) or (r == 1.0 and _shifted(v, w))
    if equal:
        name, worst, tol = "equality", -abs(gap) / scale, 1e-10
    else:
        # strict: the gap must clear roundoff
        name, worst, tol = "strict", gap / scale - EXACT_RTOL, 0.0
    return VerifyReport.make(
        name, worst, tol, h=v.grid.h, p=p, alpha=None,
        domain=None if v.grid.domain is None else v.grid.domain.ident,
        details={"t": t, "r": r, "gap": gap, "rhs": rhs},
    )


# ---------------------------------------------------------------------------
# vector inequalities behind the quantified convexity


def _vec_args(z, w, t):
    z, w = np.asarray(z, dtype=float), np.asarray(w, dtype=float)
    if z.shape != w.shape:
        raise ParameterError("z and w must have the same shape")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t >= 1):
        raise ParameterError("t must lie in (0, 1)")
    if z.ndim == 0:
        z, w = z[None], w[None]
    return z, w, t


def _power_excess(rho, k):
    """``(1 + rho)^k - 1 - k rho`` without cancellation for small ``rho``."""
    rho = np.asarray(rho, dtype=float)
    small = np.abs(rho) < 1e-3
    with np.errstate(invalid="ignore"):
        direct = np.expm1(k * np.log1p(rho)) - k * rho
    series = np.zeros_like(rho)
    coef, term = k, rho.copy()
    for n in range(2, 10):
        coef *= (k - n + 1) / n
        term = term * rho
        series += coef * term
    return np.where(small, series, direct)


def _bregman(x, m, r):
    """``|x|^r - |m|^r - r |m|^{r-2} m.(x-m)``, stable when ``x`` is near ``m``."""
    e = x - m
    s = np.einsum("...i,...i", m, m)
    ee = np.einsum("...i,...i", e, e)
    me = np.einsum("...i,...i", m, e)
    k = r / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = (2.0 * me + ee) / s
        near = s ** k * (_power_excess(rho, k) + k * ee / s)
        far = np.einsum("...i,...i", x, x) ** k - s**k - r * s ** (k - 1.0) * me
    far = np.where(s > 0, far, ee**k)
    return np.where((s > 0) & (np.abs(rho) < 0.5), near, far)


def _gap_numerator(z, w, t, r):
    """``t|z|^r + (1-t)|w|^r - |tz+(1-t)w|^r`` and the two norms.

    The linear terms of the Bregman divergences about ``m = tz + (1-t)w``
    cancel, so the gap is ``t B(z, m) + (1-t) B(w, m)``; the differences
    ``z - m = (1-t)(z-w)`` and ``w - m = -t(z-w)`` are formed directly.
    """
    tt = t[..., None] if t.ndim else t
    d = z - w
    m = w + tt * d
    gap = t * _bregman(m + (1 - tt) * d, m, r) + (1 - t) * _bregman(m - tt * d, m, r)
    return gap, np.linalg.norm(z, axis=-1), np.linalg.norm(w, axis=-1)


def quantified_gap_r_ge2(z, w, t, r):
    """Convexity gap of ``|.|^r`` over ``t(1-t)|z-w|^r``, for ``r >= 2``.

    Accepts single vectors or stacks of shape ``(..., d)``.
    """
    if not r >= 2:
        raise ParameterError("need r >= 2")
    z, w, t = _vec_args(z, w, t)
    num, _, _ = _gap_numerator(z, w, t, r)
    den = t * (1 - t) * np.linalg.norm(z - w, axis=-1) ** r
    if np.any(den == 0):
        raise UndefinedRatioError("z = w makes the ratio undefined")
    out = num / den
    return float(out) if np.ndim(out) == 0 else out


def quantified_gap_r_lt2(z, w, t, r):
    """Gap over ``t(1-t)(|z|^2+|w|^2)^{(r-2)/2}|z-w|^2``, for ``1 < r < 2``."""
    if not 1 < r < 2:
        raise ParameterError("need 1 < r < 2")
    z, w, t = _vec_args(z, w, t)
    num, nz, nw = _gap_numerator(z, w, t, r)
    s = nz**2 + nw**2
    dist = np.linalg.norm(z - w, axis=-1)
    if np.any(s == 0) or np.any(dist == 0):
        raise UndefinedRatioError("degenerate pair makes the ratio undefined")
    out = num / (t * (1 - t) * s ** ((r - 2) / 2) * dist**2)
    return float(out) if np.ndim(out) == 0 else out


def sample_pairs(n, dim=2, seed=0):
    """Seeded standard-normal pairs and uniform weights in (0, 1)."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, dim))
    w = rng.standard_normal((n, dim))
    t = rng.uniform(0.0, 1.0, n)
    t = np.clip(t, 1e-12, 1 - 1e-12)
    return z, w, t


def empirical_infimum(r, n=100_000, dim=2, seed=0):
    """Smallest sampled ratio; descriptive only, not a proved constant."""
    z, w, t = sample_pairs(n, dim, seed)
    f = quantified_gap_r_ge2 if r >= 2 else quantified_gap_r_lt2
    return float(np.min(f(z, w, t, r)))
