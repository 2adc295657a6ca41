"""Convex domains, boundary distance, inradius and lattice rasterization.

Four domain kinds are supported: intervals, boxes, disks and convex polygons.
All grids live on the lattice ``h * Z^N`` so that grids built with the same
spacing on nested domains share their nodes exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from .errors import InvalidDomainError, ParameterError, ResourceError

DEFAULT_NODE_BUDGET = 4_000_000

# Relative threshold below which a node is considered to sit on the boundary.
_ON_BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class DomainMetrics:
    area: float
    perimeter: float
    inradius: float
    incenter: tuple


class ConvexDomain:
    """Common interface; use :class:`Interval`, :class:`Box`, :class:`Disk`
    or :class:`Polygon`."""

    kind = "abstract"
    dim = 0

    def distance(self, x):
        raise NotImplementedError

    def metrics(self) -> DomainMetrics:
        raise NotImplementedError

    def bounds(self):
        """Axis-aligned bounding box as ``(lo, hi)`` arrays."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def vertices(self):
        """Points whose membership certifies containment (None for disks)."""
        return None

    @property
    def scale(self) -> float:
        lo, hi = self.bounds()
        return float(np.max(hi - lo))

    @property
    def ident(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


def _points(x, dim):
    """Coerce ``x`` to an array of shape (M, dim); also report if scalar-like."""
    a = np.asarray(x, dtype=float)
    if dim == 1 and (a.ndim == 0 or a.shape[-1] != 1):
        single = a.ndim == 0
        return a.reshape(-1, 1), single, a.shape
    single = a.ndim == 1
    if a.shape[-1] != dim:
        raise ParameterError(f"expected points with {dim} coordinates, got shape {a.shape}")
    return a.reshape(-1, dim), single, a.shape[:-1]


def _reshape_out(d, single, shape):
    if single:
        return float(d[0])
    return d.reshape(shape)


@dataclass(frozen=True, repr=False)
class Box(ConvexDomain):
    lo: tuple
    hi: tuple
    kind = "box"

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not lo:
            raise InvalidDomainError("box corners must have the same, nonzero length")
        if any(not (a < b) for a, b in zip(lo, hi)):
            raise InvalidDomainError(f"box needs min < max componentwise, got {lo}, {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return len(self.lo)

    def bounds(self):
        return np.array(self.lo), np.array(self.hi)

    def distance(self, x):
        pts, single, shape = _points(x, self.dim)
        lo, hi = self.bounds()
        d = np.minimum(pts - lo, hi - pts).min(axis=1)
        return _reshape_out(d, single, shape)

    def metrics(self):
        lo, hi = self.bounds()
        sides = hi - lo
        area = float(np.prod(sides))
        if self.dim == 1:
            perimeter = 2.0
        else:
            perimeter = float(sum(area / s for s in sides) * 2.0)
        r = float(sides.min() / 2.0)
        # lexicographically smallest Chebyshev center
        center = tuple(float(v) for v in lo + r)
        return DomainMetrics(area, perimeter, r, center)

    def vertices(self):
        lo, hi = self.bounds()
        grids = np.meshgrid(*[(a, b) for a, b in zip(lo, hi)], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def to_dict(self):
        return {"type": "box", "min": list(self.lo), "max": list(self.hi)}


@dataclass(frozen=True, repr=False)
class Interval(Box):
    """One-dimensional box ``(a, b)``."""

    kind = "interval"

    def __init__(self, a, b):
        super().__init__((a,), (b,))

    @property
    def a(self):
        return self.lo[0]

    @property
    def b(self):
        return self.hi[0]

    def to_dict(self):
        return {"type": "interval", "a": self.a, "b": self.b}


@dataclass(frozen=True, repr=False)
class Disk(ConvexDomain):
    center: tuple
    radius: float
    kind = "disk"

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.center))
        if not c:
            raise InvalidDomainError("disk center must be a point")
        if not self.radius > 0:
            raise InvalidDomainError(f"disk radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return len(self.center)

    def bounds(self):
        c = np.array(self.center)
        return c - self.radius, c + self.radius

    def distance(self, x):
        pts, single, shape = _points(x, self.dim)
        d = self.radius - np.linalg.norm(pts - np.array(self.center), axis=1)
        return _reshape_out(d, single, shape)

    def metrics(self):
        n, r = self.dim, self.radius
        # volume and surface of the N-ball
        omega = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
        return DomainMetrics(omega * r**n, n * omega * r ** (n - 1), r, self.center)

    def to_dict(self):
        return {"type": "disk", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True, repr=False)
class Polygon(ConvexDomain):
    """Strictly convex polygon with counterclockwise vertices."""

    verts: tuple
    kind = "polygon"
    dim = 2
    _normals: np.ndarray = field(init=False, compare=False)
    _offsets: np.ndarray = field(init=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.verts, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise InvalidDomainError("polygon needs at least 3 planar vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidDomainError("polygon vertices must be finite")
        e = np.roll(v, -1, axis=0) - v
        lengths = np.hypot(e[:, 0], e[:, 1])
        scale = float(np.ptp(v, axis=0).max())
        if scale <= 0 or np.any(lengths <= 1e-12 * scale):
            raise InvalidDomainError("polygon has repeated vertices")
        cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        if np.any(cross <= 1e-12 * scale**2):
            raise InvalidDomainError(
                "polygon must be strictly convex and counterclockwise (no collinear vertices)"
            )
        # inward unit normals: interior lies to the left of each CCW edge
        normals = np.stack([-e[:, 1], e[:, 0]], axis=1) / lengths[:, None]
        offsets = -np.einsum("ij,ij->i", normals, v)
        object.__setattr__(self, "verts", tuple(map(tuple, v.tolist())))
        object.__setattr__(self, "_normals", normals)
        object.__setattr__(self, "_offsets", offsets)

    def bounds(self):
        v = np.asarray(self.verts)
        return v.min(axis=0), v.max(axis=0)

    def distance(self, x):
        pts, single, shape = _points(x, 2)
        d = (pts @ self._normals.T + self._offsets).min(axis=1)
        return _reshape_out(d, single, shape)

    def metrics(self):
        v = np.asarray(self.verts)
        w = np.roll(v, -1, axis=0)
        area = 0.5 * float(np.sum(v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]))
        perimeter = float(np.sum(np.hypot(*(w - v).T)))
        r, center = _chebyshev_center(self._normals, self._offsets)
        return DomainMetrics(area, perimeter, r, center)

    def vertices(self):
        return np.asarray(self.verts)

    def to_dict(self):
        return {"type": "polygon", "vertices": [list(p) for p in self.verts]}


def _chebyshev_center(normals, offsets):
    """Solve max r s.t. n_i.x + b_i >= r, then break ties lexicographically."""
    m = len(offsets)
    # variables (x, y, r)
    a_ub = np.hstack([-normals, np.ones((m, 1))])
    opts = dict(method="highs", bounds=[(None, None)] * 3)
    res = linprog([0.0, 0.0, -1.0], A_ub=a_ub, b_ub=offsets, **opts)
    if not res.success or res.x[2] <= 0:
        raise InvalidDomainError(f"inradius LP failed: {res.message}")
    r = float(res.x[2])
    slack = 1e-12 * max(1.0, r)
    a2 = -normals
    b2 = offsets - (r - slack)
    pt = res.x[:2]
    res = linprog([1.0, 0.0], A_ub=a2, b_ub=b2, method="highs", bounds=[(None, None)] * 2)
    if res.success:
        xmin = float(res.x[0])
        a3 = np.vstack([a2, [1.0, 0.0]])
        b3 = np.append(b2, xmin + slack)
        res = linprog([0.0, 1.0], A_ub=a3, b_ub=b3, method="highs", bounds=[(None, None)] * 2)
        if res.success:
            pt = res.x
    # report the depth actually achieved at the returned point
    depth = float((normals @ pt + offsets).min())
    return max(depth, r - slack), (float(pt[0]), float(pt[1]))


def distance_to_boundary(domain: ConvexDomain, x):
    """Signed distance to the boundary: positive inside, <= 0 outside."""
    return domain.distance(x)


def metrics(domain: ConvexDomain) -> DomainMetrics:
    return domain.metrics()


def domain_from_dict(d: dict) -> ConvexDomain:
    try:
        kind = d["type"]
        if kind == "interval":
            return Interval(d["a"], d["b"])
        if kind == "box":
            return Box(tuple(d["min"]), tuple(d["max"]))
        if kind == "disk":
            return Disk(tuple(d["center"]), d["radius"])
        if kind == "polygon":
            return Polygon(tuple(map(tuple, d["vertices"])))
    except (KeyError, TypeError) as exc:
        raise InvalidDomainError(f"malformed domain description: {d!r}") from exc
    raise InvalidDomainError(f"unknown domain type {d.get('type')!r}")


def load_domain(path) -> ConvexDomain:
    with open(Path(path)) as fh:
        return domain_from_dict(json.load(fh))


def contains(outer: ConvexDomain, inner: ConvexDomain, tol=1e-12) -> bool:
    """Containment of closures, certified by vertices (or by disk geometry)."""
    if outer.dim != inner.dim:
        return False
    verts = inner.vertices()
    if verts is not None:
        return bool(np.all(np.atleast_1d(outer.distance(verts)) >= -tol * outer.scale))
    # inner is a disk: its closure lies in a convex outer iff depth(center) >= radius
    # for boxes/polygons (half-plane intersections) and by |c1-c2|+r1 <= r2 for disks
    if isinstance(outer, Disk):
        gap = np.linalg.norm(np.subtract(outer.center, inner.center))
        return bool(gap + inner.radius <= outer.radius * (1 + tol))
    return bool(outer.distance(np.asarray(inner.center)) >= inner.radius * (1 - tol))


# ---------------------------------------------------------------------------
# lattice grids


@dataclass
class Grid:
    """Node set ``(start + i) * h`` of a lattice box covering a domain.

    ``mask`` flags nodes strictly inside the domain; every array on this grid
    contains at least one layer of exterior nodes around the mask.
    """

    h: float
    start: tuple
    mask: np.ndarray
    domain: ConvexDomain | None = None

    @property
    def dim(self):
        return self.mask.ndim

    @property
    def shape(self):
        return self.mask.shape

    @property
    def origin(self):
        return tuple(s * self.h for s in self.start)

    @property
    def n_interior(self):
        return int(self.mask.sum())

    def axes(self):
        return [(s + np.arange(n)) * self.h for s, n in zip(self.start, self.shape)]

    def coords(self):
        """Coordinate arrays (``indexing='ij'``), one per axis."""
        return np.meshgrid(*self.axes(), indexing="ij")

    def points(self, interior_only=True):
        """Node coordinates as an (M, N) array in row-major order."""
        pts = np.stack([c.ravel() for c in self.coords()], axis=1)
        if interior_only:
            pts = pts[self.mask.ravel()]
        return pts

    def distance(self):
        """Boundary distance at every node (requires ``domain``)."""
        d = self.domain.distance(self.points(interior_only=False))
        return np.asarray(d).reshape(self.shape)

    def zeros(self):
        return np.zeros(self.shape)


def lattice_range(lo, hi, h):
    """Integer index range covering ``[lo, hi]`` plus one exterior node."""
    i0 = math.floor(lo / h + 1e-9) - 1
    i1 = math.ceil(hi / h - 1e-9) + 1
    return i0, i1


def rasterize(domain: ConvexDomain, h: float, node_budget: int = DEFAULT_NODE_BUDGET) -> Grid:
    """Lattice grid whose mask holds the nodes with positive boundary distance."""
    if domain.dim not in (1, 2):
        raise ParameterError("grids are available for N = 1 and N = 2 only")
    if not h > 0:
        raise ParameterError(f"grid spacing must be positive, got {h}")
    r = domain.metrics().inradius
    if h > r / 4 * (1 + 1e-12):
        raise ParameterError(f"grid spacing {h} exceeds inradius/4 = {r / 4}")
    lo, hi = domain.bounds()
    ranges = [lattice_range(a, b, h) for a, b in zip(lo, hi)]
    shape = tuple(i1 - i0 + 1 for i0, i1 in ranges)
    if math.prod(shape) > node_budget:
        raise ResourceError(f"grid of shape {shape} exceeds node budget {node_budget}")
    grid = Grid(h, tuple(i0 for i0, _ in ranges), np.zeros(shape, dtype=bool), domain)
    d = grid.distance()
    grid.mask = d > _ON_BOUNDARY_RTOL * domain.scale
    return grid
