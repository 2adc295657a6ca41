"""Discrete Lane-Emden energy on lattice grids and its two solvers.

The discrete energy of a nodal function ``f`` is

    F(f) = h^N sum_cells (1/p) |grad_h f|^p  -  alpha h^N sum_interior (1/q) |f|^q

where ``grad_h`` is the forward-difference gradient: a cell is any node that
has a forward neighbour along every axis of the (padded) array.  Nodes outside
the mask carry the Dirichlet datum and are never updated.

``solve_lane_emden`` minimizes ``F`` over nonnegative interior values by a
projected, preconditioned Barzilai-Borwein descent with Armijo backtracking.
``fixed_point_solve`` is an independent route: it iterates convex
p-Poisson solves (damped Newton) on ``u -> alpha u^{q-1}``.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NumericError, ParameterError
from .geometry import Grid, rasterize
from .onedim import PQParams, wI_center, wI_profile

log = logging.getLogger(__name__)


@dataclass
class GridFunction:
    """Nodal values on every node of ``grid`` (exterior nodes hold the datum)."""

    grid: Grid
    values: np.ndarray

    @classmethod
    def zeros(cls, grid, datum=None):
        f = cls(grid, np.zeros(grid.shape))
        if datum is not None:
            f.values[~grid.mask] = _datum_array(grid, datum)[~grid.mask]
        return f

    @property
    def interior(self):
        return self.values[self.grid.mask]

    def copy(self):
        return GridFunction(self.grid, self.values.copy())

    def with_interior(self, x):
        g = self.copy()
        g.values[self.grid.mask] = x
        return g

    def sup(self):
        return float(np.abs(self.interior).max()) if self.grid.n_interior else 0.0

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def to_csv(self, path):
        """Interior nodes in row-major order: ``x[,y],value``."""
        header = ["x", "y"][: self.grid.dim] + ["value"]
        pts = self.grid.points()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for pt, v in zip(pts, self.interior):
                w.writerow([repr(float(c)) for c in pt] + [repr(float(v))])


def _datum_array(grid, datum):
    if callable(datum):
        vals = np.asarray(datum(grid.points(interior_only=False)), dtype=float)
        arr = vals.reshape(grid.shape)
    else:
        arr = np.broadcast_to(np.asarray(datum, dtype=float), grid.shape).copy()
    if np.any(arr[~grid.mask] < 0):
        raise ParameterError("boundary datum must be nonnegative")
    return arr


@dataclass
class SolveReport:
    iterations: int
    energy: float
    projected_gradient: float
    residual: float
    wall_time: float
    converged: bool
    target: float = math.nan
    factorizations: int = 0
    energy_history: list = field(default_factory=list, repr=False)


@dataclass
class SolveOptions:
    """Knobs shared by the solvers.

    ``init``: ``"barrier"`` (the distance-profile supersolution), ``"constant"``
    (``init_value`` on every interior node), ``"torsion"`` (rescaled Poisson
    solution) or an array of interior values.
    ``eps``: gradient regularization for ``p < 2``; ``None`` picks
    ``1e-10`` times the a-priori gradient scale.
    """

    tol: float | None = None
    max_iter: int = 200_000
    init: object = "barrier"
    init_value: float = 0.01
    datum: object = None
    eps: float | None = None
    refresh: int = 10
    record_energy: bool = False
    node_budget: int | None = None

    def tolerance(self, dim):
        if self.tol is not None:
            return self.tol
        return 1e-8 if dim == 1 else 1e-6


# ---------------------------------------------------------------------------
# discrete operators


def forward_gradient(values, h):
    """Forward differences on all cells, one array per axis."""
    n = values.ndim
    cells = tuple(slice(0, s - 1) for s in values.shape)
    out = []
    for k in range(n):
        plus = tuple(slice(1, s) if j == k else slice(0, s - 1) for j, s in enumerate(values.shape))
        out.append((values[plus] - values[cells]) / h)
    return out


def _norm(comps, eps):
    sq = sum(c * c for c in comps)
    if eps:
        sq = sq + eps * eps
    return np.sqrt(sq)


def dirichlet(values, h, p, eps=0.0):
    """``h^N sum_cells (1/p) |grad_h f|^p``."""
    comps = forward_gradient(values, h)
    return h**values.ndim * float(np.sum(_norm(comps, eps) ** p)) / p


def dirichlet_gradient(values, h, p, eps=0.0):
    """Gradient of :func:`dirichlet` with respect to every nodal value."""
    n = values.ndim
    comps = forward_gradient(values, h)
    a = _norm(comps, eps)
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(a > 0, a ** (p - 2.0), 0.0) if p < 2 and not eps else a ** (p - 2.0)
    out = np.zeros_like(values)
    cells = tuple(slice(0, s - 1) for s in values.shape)
    scale = h ** (n - 1)
    for k, c in enumerate(comps):
        flux = weight * c * scale
        plus = tuple(slice(1, s) if j == k else slice(0, s - 1) for j, s in enumerate(values.shape))
        out[plus] += flux
        out[cells] -= flux
    return out


def _source(x, q):
    """``|x|^{q-2} x`` with the convention ``x^0 = 1`` for q = 1."""
    if q == 1:
        return np.where(x < 0, -1.0, 1.0)
    return np.sign(x) * np.abs(x) ** (q - 1.0)


def energy(f: GridFunction, params: PQParams, eps=0.0):
    h, n = f.grid.h, f.grid.dim
    lower = float(np.sum(np.abs(f.interior) ** params.q)) / params.q
    return dirichlet(f.values, h, params.p, eps) - params.alpha * h**n * lower


def energy_gradient(f: GridFunction, params: PQParams, eps=0.0) -> GridFunction:
    """Exact gradient with respect to interior values; zero on exterior nodes."""
    h, n, m = f.grid.h, f.grid.dim, f.grid.mask
    g = dirichlet_gradient(f.values, h, params.p, eps)
    g[m] -= params.alpha * h**n * _source(f.values[m], params.q)
    g[~m] = 0.0
    return GridFunction(f.grid, g)


def residual(f: GridFunction, params: PQParams, eps=0.0):
    """Sup over interior nodes of ``|-Delta_{p,h} f - alpha f^{q-1}|``."""
    g = energy_gradient(f, params, eps)
    if not f.grid.n_interior:
        return 0.0
    return float(np.abs(g.interior).max()) / f.grid.h**f.grid.dim


def difference_matrices(grid: Grid):
    """Sparse forward-difference maps from interior unknowns to cells."""
    shape, h = grid.shape, grid.h
    idx = -np.ones(shape, dtype=np.int64)
    idx[grid.mask] = np.arange(grid.n_interior)
    cells = tuple(slice(0, s - 1) for s in shape)
    n_cells = math.prod(s - 1 for s in shape)
    rows = np.arange(n_cells)
    ops = []
    for k in range(grid.dim):
        plus = tuple(slice(1, s) if j == k else slice(0, s - 1) for j, s in enumerate(shape))
        a, b = idx[plus].ravel(), idx[cells].ravel()
        r = np.concatenate([rows[a >= 0], rows[b >= 0]])
        c = np.concatenate([a[a >= 0], b[b >= 0]])
        vals = np.concatenate([np.ones(int((a >= 0).sum())), -np.ones(int((b >= 0).sum()))]) / h
        ops.append(sp.csr_matrix((vals, (r, c)), shape=(n_cells, grid.n_interior)))
    return ops


def dirichlet_hessian(values, mask, h, p, ops, eps=0.0, floor_rel=1e-6):
    """Hessian of :func:`dirichlet` with respect to the interior unknowns.

    Cell gradient norms are floored at ``floor_rel`` times their maximum so
    that the matrix stays positive definite where ``p > 2`` degenerates; for
    ``p < 2`` the regularization ``eps`` already bounds the weights.
    """
    comps = [c.ravel() for c in forward_gradient(values, h)]
    a = _norm(comps, eps)
    top = float(a.max())
    if p > 2 or not eps:
        a = np.maximum(a, floor_rel * top if top > 0 else 1.0)
    w = a ** (p - 2.0)
    w4 = (p - 2.0) * a ** (p - 4.0)
    hmat = None
    for i, di in enumerate(ops):
        for j, dj in enumerate(ops):
            diag = w4 * comps[i] * comps[j]
            if i == j:
                diag = diag + w
            term = di.T @ sp.diags(diag) @ dj
            hmat = term if hmat is None else hmat + term
    return (hmat * h ** values.ndim).tocsc()


# ---------------------------------------------------------------------------
# helpers shared by the solvers


def _scales(domain, params):
    """A-priori sup and gradient scales from the L-infinity upper bound."""
    r = domain.metrics().inradius
    p, q = params.p, params.q
    sup = params.alpha ** (1.0 / (p - q)) * r ** (p / (p - q)) * wI_center(p, q)
    return sup, sup / r


def _eps(options, p, grad_scale):
    if p >= 2:
        return 0.0
    return options.eps if options.eps is not None else 1e-10 * grad_scale


def barrier_seed(grid: Grid, params: PQParams):
    """``alpha^{1/(p-q)} r^{p/(p-q)} w_I(d/r - 1)``: a supersolution on convex sets."""
    p, q = params.p, params.q
    r = grid.domain.metrics().inradius
    prof = wI_profile(p, q, 513)
    d = grid.distance()[grid.mask]
    return params.alpha ** (1.0 / (p - q)) * r ** (p / (p - q)) * prof(d / r - 1.0)


def _initial(grid, params, options):
    init = options.init
    if isinstance(init, str):
        if init == "barrier":
            return barrier_seed(grid, params)
        if init == "constant":
            return np.full(grid.n_interior, float(options.init_value))
        if init == "torsion":
            rhs = np.full(grid.n_interior, params.alpha)
            return _poisson_start(grid, params.p, rhs, options.datum)
        raise ParameterError(f"unknown init {init!r}")
    if isinstance(init, GridFunction):
        init = init.interior
    x = np.asarray(init, dtype=float)
    if x.shape != (grid.n_interior,):
        raise ParameterError("initial guess must give one value per interior node")
    return x.copy()


def _grid_for(domain, h, options):
    if isinstance(domain, Grid):
        return domain
    kw = {} if options.node_budget is None else {"node_budget": options.node_budget}
    return rasterize(domain, h, **kw)


# ---------------------------------------------------------------------------
# energy minimization


_ROUNDOFF = 64 * np.finfo(float).eps


def _ray_optimal(grid, params, x, datum):
    """Rescale ``x`` to the energy minimizer along its ray ``t x``.

    Along the ray ``E(t x) = t^p D - alpha t^q S / q``, minimized at
    ``t = (alpha S / (p D))^{1/(p-q)}`` with negative energy.  Starting below
    zero keeps monotone descent away from the critical point ``0``.
    """
    if datum is not None or not np.any(x):
        return x
    f = GridFunction.zeros(grid)
    f.values[grid.mask] = x
    d = dirichlet(f.values, grid.h, params.p)
    s = grid.h**grid.dim * float(np.sum(x**params.q))
    if not (d > 0 and s > 0):
        return x
    return x * (params.alpha * s / (params.p * d)) ** (1.0 / (params.p - params.q))


def solve_lane_emden(domain, params: PQParams, h=None, options: SolveOptions | None = None):
    """Nonnegative minimizer of the discrete energy (the positive solution).

    ``domain`` may be a :class:`ConvexDomain` (rasterized with spacing ``h``)
    or a ready :class:`Grid`.  Returns ``(GridFunction, SolveReport)``; a
    report with ``converged=False`` means the iteration budget ran out.
    """
    options = options or SolveOptions()
    t0 = time.perf_counter()
    grid = _grid_for(domain, h, options)
    dom = grid.domain
    p, q, alpha = params.p, params.q, params.alpha
    n, hn, m = grid.dim, grid.h**grid.dim, grid.mask
    tol = options.tolerance(n)
    _, gscale = _scales(dom, params)
    eps = _eps(options, p, gscale)
    f = GridFunction.zeros(grid, options.datum)
    ops = difference_matrices(grid)

    def evaluate(x):
        f.values[m] = x
        e = energy(f, params, eps)
        g = energy_gradient(f, params, eps).values[m]
        if not (math.isfinite(e) and np.all(np.isfinite(g))):
            raise NumericError("non-finite energy or gradient during descent")
        return e, g

    def metric(x):
        f.values[m] = x
        k = dirichlet_hessian(f.values, m, grid.h, p, ops, eps)
        return k, spla.splu(k)

    def floor(x, k):
        # residual change caused by a few ulps at the stiffest node
        return _ROUNDOFF * float(np.max(np.abs(k.diagonal()) * np.abs(x), initial=0.0)) / hn

    def target(x):
        return max(tol * alpha * max(float(x.max()), 1e-300) ** (q - 1.0), res_floor)

    x = _ray_optimal(grid, params, np.maximum(_initial(grid, params, options), 0.0), options.datum)
    e, g = evaluate(x)
    k_mat, lu = metric(x if x.any() else np.ones_like(x))
    res_floor = floor(x, k_mat)
    n_fact = 1
    history = [e] if options.record_energy else []
    step = 1.0
    it = 0
    res = float(np.abs(g).max()) / hn if x.size else 0.0
    # for q > 1 the zero function is a spurious critical point
    trivial = q > 1 and not np.any(x)
    converged = res <= target(x) and not trivial
    fine = False  # energy differences have dropped below roundoff
    while not converged and it < options.max_iter:
        it += 1
        d = np.maximum(x - (1.0 if fine else step) * lu.solve(g), 0.0) - x
        slope = float(g @ d)
        if not slope < 0:
            # preconditioned direction unusable after projection: plain gradient
            scale = max(float(x.max()), 1e-3 * gscale * grid.h) / max(float(np.abs(g).max()), 1e-300)
            d = np.maximum(x - scale * g, 0.0) - x
            slope = float(g @ d)
            if not slope < 0:
                break
        # below this size a predicted decrease is invisible in the energy
        noise = _ROUNDOFF * max(abs(e), float(np.abs(g) @ np.abs(x)))
        gmax = float(np.abs(g).max())
        lam = 1.0
        while True:
            e_new, g_new = evaluate(x + lam * d)
            if q > 1 and not np.any(x + lam * d):
                pass  # zero is a critical point, never the positive minimizer
            elif abs(lam * slope) <= noise:
                fine = True
                # energy is flat to roundoff: judge the step by the residual
                if float(np.abs(g_new).max()) < gmax and e_new <= e + noise:
                    break
            elif e_new <= e + 1e-4 * lam * slope:
                break
            lam *= 0.5
            if lam < 1e-16:
                log.warning("line search stalled at iteration %d", it)
                e_new = None
                break
        if e_new is None:
            break
        s = lam * d
        y = g_new - g
        x, e, g = x + s, e_new, g_new
        if options.record_energy:
            history.append(e)
        res = float(np.abs(g).max()) / hn
        converged = res <= target(x)
        if converged:
            break
        if p != 2 and (fine or it % options.refresh == 0):
            k_mat, lu = metric(x)
            res_floor = floor(x, k_mat)
            n_fact += 1
        sy = float(s @ y)
        # Barzilai-Borwein step measured in the preconditioner metric
        step = float(s @ (k_mat @ s)) / sy if sy > 0 else 1.0
    f.values[m] = x
    pg = float(np.abs(np.maximum(x - g / hn, 0.0) - x).max()) if x.size else 0.0
    report = SolveReport(
        iterations=it, energy=e, projected_gradient=pg, residual=res,
        wall_time=time.perf_counter() - t0, converged=converged, target=target(x),
        factorizations=n_fact, energy_history=history,
    )
    if not converged:
        if trivial:
            log.warning("solve_lane_emden started at the zero critical point")
        else:
            log.warning("solve_lane_emden did not converge: residual %.3e > %.3e", res, report.target)
    return f, report


# ---------------------------------------------------------------------------
# convex inner problem and the fixed-point oracle


def _newton_plaplace(grid, p, rhs_int, datum, x0, tol, max_iter, eps):
    """Damped Newton for ``min (1/p) sum |grad u|^p - sum rhs u`` (scaled by h^N)."""
    hn, m = grid.h**grid.dim, grid.mask
    ops = difference_matrices(grid)
    f = GridFunction.zeros(grid, datum)

    def value_grad(x):
        f.values[m] = x
        e = dirichlet(f.values, grid.h, p, eps) - hn * float(rhs_int @ x)
        g = dirichlet_gradient(f.values, grid.h, p, eps)[m] - hn * rhs_int
        return e, g

    def hessian(x):
        f.values[m] = x
        return dirichlet_hessian(f.values, m, grid.h, p, ops, eps)

    scale = max(float(np.abs(rhs_int).max()), 1e-300)
    x = x0.copy()
    e, g = value_grad(x)
    for it in range(1, max_iter + 1):
        k = hessian(x)
        gmax = float(np.abs(g).max())
        goal = max(tol * scale, _ROUNDOFF * float(np.max(np.abs(k.diagonal() * x), initial=0.0)) / hn)
        if gmax / hn <= goal:
            return x, it - 1, True
        d = -spla.spsolve(k, g)
        slope = float(g @ d)
        if not slope < 0:
            d, slope = -g, -float(g @ g)
        noise = _ROUNDOFF * max(abs(e), float(np.abs(g) @ np.abs(x)))
        lam = 1.0
        while True:
            e_new, g_new = value_grad(x + lam * d)
            if abs(lam * slope) <= noise:
                if float(np.abs(g_new).max()) < gmax and e_new <= e + noise:
                    break
            elif e_new <= e + 1e-4 * lam * slope:
                break
            lam *= 0.5
            if lam < 1e-16:
                return x, it, False
        x, e, g = x + lam * d, e_new, g_new
    return x, max_iter, False


def _poisson_start(grid, p, rhs_int, datum):
    """p = 2 solution rescaled by the optimal homogeneity factor for ``p``."""
    hn, m = grid.h**grid.dim, grid.mask
    ops = difference_matrices(grid)
    k = (sum(d.T @ d for d in ops) * hn).tocsc()
    f = GridFunction.zeros(grid, datum)
    lift = dirichlet_gradient(f.values, grid.h, 2.0)[m]
    x = spla.spsolve(k, hn * rhs_int - lift)
    if datum is None and np.any(rhs_int):
        f.values[m] = x
        a = dirichlet(f.values, grid.h, p) * p
        b = hn * float(rhs_int @ x)
        if a > 0 and b > 0:
            x = x * (b / a) ** (1.0 / (p - 1.0))
    return x


def solve_plaplace_fixed_rhs(domain, p, rhs, h=None, options: SolveOptions | None = None,
                             x0=None):
    """Minimizer of ``(1/p) sum |grad_h u|^p - sum rhs u`` over the datum class.

    ``rhs`` is a GridFunction, an interior array, or a scalar.
    """
    options = options or SolveOptions()
    if not p > 1:
        raise ParameterError("need p > 1")
    grid = _grid_for(domain, h, options)
    if isinstance(rhs, GridFunction):
        rhs_int = rhs.interior
    else:
        rhs_int = np.broadcast_to(np.asarray(rhs, dtype=float), (grid.n_interior,)).copy()
    if np.any(rhs_int < 0):
        raise ParameterError("rhs must be nonnegative")
    tol = options.tolerance(grid.dim)
    eps = 0.0
    if p < 2:
        base = max(float(np.abs(rhs_int).max()), 1e-300)
        eps = options.eps if options.eps is not None else 1e-10 * base ** (1 / (p - 1))
    if not np.any(rhs_int) and options.datum is None:
        return GridFunction.zeros(grid)
    if x0 is None:
        x0 = _poisson_start(grid, p, rhs_int, options.datum)
    x, _, ok = _newton_plaplace(grid, p, rhs_int, options.datum, x0, tol, options.max_iter, eps)
    if not ok:
        log.warning("p-Poisson Newton solve did not reach tolerance")
    f = GridFunction.zeros(grid, options.datum)
    f.values[grid.mask] = x
    return f


def fixed_point_solve(domain, params: PQParams, h=None, options: SolveOptions | None = None,
                      max_outer=500):
    """Positive solution as the limit of ``u_{k+1} = S(alpha u_k^{q-1})``.

    ``S`` is the p-Poisson solution operator; sub-homogeneity (q < p) makes
    the map a contraction in the Hilbert metric of the positive cone.
    """
    options = options or SolveOptions()
    t0 = time.perf_counter()
    grid = _grid_for(domain, h, options)
    p, q, alpha = params.p, params.q, params.alpha
    tol = options.tolerance(grid.dim)
    inner = SolveOptions(tol=tol * 1e-2, max_iter=200, datum=options.datum, eps=options.eps)
    u = solve_plaplace_fixed_rhs(grid, p, alpha, options=inner)
    it = 0
    diff = math.inf
    while it < max_outer:
        it += 1
        rhs = alpha * _source(np.maximum(u.interior, 0.0), q)
        u_new = solve_plaplace_fixed_rhs(grid, p, rhs, options=inner, x0=u.interior)
        diff = float(np.abs(u_new.interior - u.interior).max())
        u = u_new
        if diff <= tol:
            break
    _, gscale = _scales(grid.domain, params)
    eps = _eps(options, p, gscale)
    report = SolveReport(
        iterations=it, energy=energy(u, params, eps), projected_gradient=diff,
        residual=residual(u, params, eps), wall_time=time.perf_counter() - t0,
        converged=diff <= tol, target=tol,
    )
    return u, report
