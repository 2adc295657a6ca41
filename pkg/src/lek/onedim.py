"""Closed-form constants and one-dimensional / radial profiles.

Notation: ``W = w_I(0)`` is the peak of the positive solution of
``-(|u'|^{p-2} u')' = u^{q-1}`` on ``(-1, 1)`` with zero boundary values,
``c = (q (p-1) / p)^{1/p}``, and the half profile on ``[-1, 0]`` is the
inverse of

    t(w) = -1 + c * int_0^w (W^q - tau^q)^{-1/p} dtau.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq
from scipy.special import betaln

from .errors import NumericError, ParameterError


@dataclass(frozen=True)
class PQParams:
    p: float
    q: float
    alpha: float = 1.0

    def __post_init__(self):
        check_exponents(self.p, self.q)
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ParameterError(f"alpha must be positive and finite, got {self.alpha}")


def check_exponents(p, q, allow_q_eq_p=False):
    if not (math.isfinite(p) and math.isfinite(q)):
        raise ParameterError("exponents must be finite")
    if not p > 1:
        raise ParameterError(f"need p > 1, got p={p}")
    if not q >= 1:
        raise ParameterError(f"need q >= 1, got q={q}")
    if q > p or (q == p and not allow_q_eq_p):
        raise ParameterError(f"need q < p, got p={p}, q={q}")


@dataclass(frozen=True)
class Profile1D:
    """Sampled monotone profile.

    ``kind == "interval"``: half profile of ``w_I`` on ``[-1, 0]``.
    ``kind == "radial"``: ``w_{B_1}`` as a function of ``|x|`` on ``[0, 1]``.
    ``slopes`` holds exact derivatives at the samples and drives Hermite
    evaluation between them.
    """

    abscissae: np.ndarray
    values: np.ndarray
    kind: str
    slopes: np.ndarray | None = None

    def __call__(self, x):
        """Evaluate the profile; interval profiles are extended evenly to
        ``[-1, 1]`` and both kinds by zero outside their support."""
        x = np.asarray(x, dtype=float)
        if self.kind == "interval":
            s = -np.abs(x)
            inside = s > -1.0
        else:
            s = np.abs(x)
            inside = s < 1.0
        out = np.zeros_like(s)
        if self.slopes is not None:
            f = CubicHermiteSpline(self.abscissae, self.values, self.slopes)
            out[inside] = f(s[inside])
        else:
            out[inside] = np.interp(s[inside], self.abscissae, self.values)
        return np.maximum(out, 0.0)

    def derivative(self, x):
        """Derivative of the Hermite interpolant in the profile's own variable
        (``t`` on ``[-1, 0]`` or ``r`` on ``[0, 1]``)."""
        if self.slopes is None:
            raise ParameterError("profile has no slope data")
        f = CubicHermiteSpline(self.abscissae, self.values, self.slopes)
        return f(np.asarray(x, dtype=float), 1)

    def to_csv(self, path):
        name = "t" if self.kind == "interval" else "r"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([name, "value"])
            for a, v in zip(self.abscissae, self.values):
                w.writerow([repr(float(a)), repr(float(v))])


# ---------------------------------------------------------------------------
# constants


def pi_pq(p, q):
    """Sharp constant of ``||u'||_p >= pi_pq ||u||_q`` on ``(0, 1)``.

    Evaluated through the Beta function (log-Gamma form)."""
    if not (math.isfinite(p) and math.isfinite(q)) or not p > 1 or not q >= 1:
        raise ParameterError(f"pi_pq needs 1 < p, 1 <= q, both finite; got p={p}, q={q}")
    pc = p / (p - 1.0)
    log_val = (
        math.log(2.0 / q)
        + math.log1p(q / pc) / q
        - math.log1p(pc / q) / p
        + betaln(1.0 / q, 1.0 / pc)
    )
    return math.exp(log_val)


def lambda_pq_interval(p, q, half_length=1.0):
    """Generalized principal frequency of ``(-L, L)``."""
    check_exponents(p, q, allow_q_eq_p=True)
    if not half_length > 0:
        raise ParameterError("half_length must be positive")
    base = 2.0 ** ((q - p) / q) * (pi_pq(p, q) / 2.0) ** p
    return base * half_length ** (-p - (p - q) / q)


def wI_center(p, q):
    """Peak value ``w_I(0)`` of the interval solution."""
    check_exponents(p, q)
    return ((q * p - q + p) / p) ** (1.0 / q) * (2.0 / pi_pq(p, q)) ** (p / (p - q))


def wI_mass(p, q):
    """``int_{-1}^0 w_I^q dt``."""
    check_exponents(p, q)
    return (2.0 / pi_pq(p, q)) ** (p * q / (p - q))


def _c_const(p, q):
    return (q * (p - 1.0) / p) ** (1.0 / p)


def wB1_q1_exact(p, N, x_norm):
    """Torsion-type solution (q = 1) of the unit ball in N dimensions."""
    if not p > 1 or N < 1:
        raise ParameterError("need p > 1 and N >= 1")
    x = np.asarray(x_norm, dtype=float)
    if np.any(x < 0) or np.any(x > 1):
        raise ParameterError("x_norm must lie in [0, 1]")
    val = (p - 1.0) / p * N ** (-1.0 / (p - 1.0)) * (1.0 - x ** (p / (p - 1.0)))
    return float(val) if val.ndim == 0 else val


def localization_constant_q1(N, p):
    """Closed form of the localization constant for q = 1."""
    return 1.0 - (1.0 - N ** (-1.0 / (p - 1.0))) ** ((p - 1.0) / p)


def scale_solution_alpha(values, p, q, alpha):
    """Map an ``alpha = 1`` solution to multiplier ``alpha``."""
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    return np.asarray(values) * alpha ** (1.0 / (p - q))


# ---------------------------------------------------------------------------
# the inverse-profile integral
#
# With tau = W (1 - y^k), k = p/(p-1), the integrand becomes
#   k W^{1-q/p} (D(y) / y^k)^{-1/p},  D(y) = 1 - (1 - y^k)^q,
# which is bounded on [0, 1]: the endpoint singularity at tau = W is removed.


def _g_subst(y, p, q, W):
    y = np.asarray(y, dtype=float)
    k = p / (p - 1.0)
    s = y**k
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(s > 0, -np.expm1(q * np.log1p(-np.minimum(s, 1.0))) / s, q)
    return k * W ** (1.0 - q / p) * ratio ** (-1.0 / p)


def _quad(f, a, b, what, epsabs=1e-14, epsrel=1e-13, **kw):
    val, err, info = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=500,
                                    full_output=1, **kw)[:3]
    if err > 1e-9 * max(1.0, abs(val)):
        raise NumericError(f"quadrature for {what} did not converge", achieved=err)
    return val


def profile_integral(p, q, upper, method="substitution"):
    """``c * int_0^upper (W^q - tau^q)^{-1/p} dtau`` for ``0 <= upper <= W``.

    Equals ``1 + w_I^{-1}(upper)``; at ``upper = W`` it is identically 1.
    ``method="algebraic"`` integrates in the original variable with an
    algebraic endpoint weight (only for ``upper = W``), giving a route
    independent of the change of variables.
    """
    check_exponents(p, q)
    W = wI_center(p, q)
    c = _c_const(p, q)
    if not 0 <= upper <= W * (1 + 1e-12):
        raise ParameterError(f"upper limit must lie in [0, w_I(0)={W}], got {upper}")
    upper = min(upper, W)
    if method == "algebraic":
        if upper != W:
            raise ParameterError("algebraic method integrates up to w_I(0) only")

        def f(tau):
            e = (W - tau) / W
            num = -np.expm1(q * np.log1p(-e)) * W**q
            return (num / (W - tau)) ** (-1.0 / p) if e > 0 else (q * W ** (q - 1)) ** (-1.0 / p)

        val = _quad(f, 0.0, W, "profile integral", weight="alg", wvar=(0.0, -1.0 / p))
        return c * val
    if method != "substitution":
        raise ParameterError(f"unknown method {method!r}")
    k = p / (p - 1.0)
    y_lo = (1.0 - upper / W) ** (1.0 / k) if upper < W else 0.0
    val = _quad(lambda y: _g_subst(y, p, q, W), y_lo, 1.0, "profile integral")
    return c * val


def consistency_integral(p, q, method="substitution"):
    """Must equal 1; checks the closed forms of ``W`` against the first integral."""
    return profile_integral(p, q, wI_center(p, q), method=method)


def wI_inverse(p, q, w):
    """``t`` in ``[-1, 0]`` with ``w_I(t) = w``."""
    return profile_integral(p, q, w) - 1.0


def _fc_limit(x, y, m):
    """Fritsch-Carlson limiting of Hermite slopes (keeps the cubic monotone)."""
    m = m.copy()
    delta = np.diff(y) / np.diff(x)
    for i, d in enumerate(delta):
        if d == 0:
            m[i] = m[i + 1] = 0.0
            continue
        a, b = m[i] / d, m[i + 1] / d
        s = a * a + b * b
        if s > 9.0:
            tau = 3.0 / math.sqrt(s)
            m[i], m[i + 1] = tau * a * d, tau * b * d
    return m


def wI_slope(p, q, w):
    """``w_I'`` on ``[-1, 0]`` as a function of the value ``w``."""
    W = wI_center(p, q)
    w = np.clip(np.asarray(w, dtype=float), 0.0, W)
    return (p / (q * (p - 1.0)) * (W**q - w**q)) ** (1.0 / p)


def wI_profile(p, q, n_samples=257, n_nodes=None):
    """Half profile ``w_I`` on ``[-1, 0]`` sampled at ``n_samples`` uniform points."""
    check_exponents(p, q)
    if n_samples < 16:
        raise ParameterError("n_samples must be at least 16")
    W = wI_center(p, q)
    c = _c_const(p, q)
    m = n_nodes or max(4 * n_samples, 1024)
    # nodes graded towards y = 0 (the peak), where w_I is least regular
    y = (np.arange(m + 1) / m) ** 2
    k = p / (p - 1.0)
    gl_x, gl_w = np.polynomial.legendre.leggauss(16)
    a, b = y[1:-1], y[2:]
    mid, half = (a + b) / 2, (b - a) / 2
    pieces = (_g_subst(mid[:, None] + half[:, None] * gl_x, p, q, W) * gl_w).sum(axis=1) * half
    first = _quad(lambda s: _g_subst(s, p, q, W), 0.0, y[1], "profile integral")
    cum = c * np.concatenate([[0.0, first], first + np.cumsum(pieces)])
    # cum[j] = c int_0^{y_j} g = -t(y_j)
    total = cum[-1]
    if abs(total - 1.0) > 1e-8:
        raise NumericError("profile quadrature inconsistent with w_I(0)", achieved=abs(total - 1))
    t_nodes = -cum[::-1]
    w_nodes = W * (1.0 - y[::-1] ** k)
    t_nodes[0], w_nodes[0] = -1.0, 0.0
    slopes = _fc_limit(t_nodes, w_nodes, wI_slope(p, q, w_nodes))
    spline = CubicHermiteSpline(t_nodes, w_nodes, slopes)
    t = np.linspace(-1.0, 0.0, n_samples)
    vals = spline(t)
    vals[0], vals[-1] = 0.0, W
    return Profile1D(t, vals, "interval", wI_slope(p, q, vals))


# ---------------------------------------------------------------------------
# radial profile by shooting


def _radial_rhs(p, q, N):
    def rhs(r, z):
        u, mflux = z
        # flux |u'|^{p-2} u' = -M / r^{N-1}
        du = -(max(mflux, 0.0) / r ** (N - 1)) ** (1.0 / (p - 1.0))
        src = 1.0 if q == 1 else max(u, 0.0) ** (q - 1.0)
        return [du, r ** (N - 1) * src]

    return rhs


def _radial_start(a, p, q, N, r0):
    src = 1.0 if q == 1 else a ** (q - 1.0)
    u0 = a - (p - 1.0) / p * (src / N) ** (1.0 / (p - 1.0)) * r0 ** (p / (p - 1.0))
    return [u0, src * r0**N / N]


_R0 = 1e-9


def _shoot(a, p, q, N, r_max, dense=False):
    """Integrate from the center with u(0) = a; return the first zero of u."""

    def hit(r, z):
        return z[0]

    hit.terminal = True
    hit.direction = -1
    sol = integrate.solve_ivp(
        _radial_rhs(p, q, N), (_R0, r_max), _radial_start(a, p, q, N, _R0),
        method="DOP853", rtol=1e-13, atol=1e-15 * min(1.0, a), events=hit, dense_output=dense,
    )
    if sol.status == -1:
        raise NumericError(f"radial ODE integration failed: {sol.message}")
    zero = sol.t_events[0][0] if len(sol.t_events[0]) else math.inf
    return zero, sol


def radial_center(p, q, N):
    """``w_{B_1}(0)`` by bisection on the shooting parameter."""
    check_exponents(p, q)
    if int(N) != N or N < 1:
        raise ParameterError("N must be a positive integer")
    top = wI_center(p, q)
    lo, hi = top / 10.0, top * (1.0 + 1e-9)

    def miss(a):
        zero, _ = _shoot(a, p, q, N, 4.0)
        return min(zero, 4.0) - 1.0

    f_lo, f_hi = miss(lo), miss(hi)
    if f_lo * f_hi > 0:
        # widen once by a factor 10 on the lower side
        lo = lo / 10.0
        f_lo = miss(lo)
    if f_lo * f_hi > 0:
        # q close to p: the root sits far below w_I(0); bracket it with the
        # scaling law u_a(r) = a u_1(a^{(q-p)/p} r)
        zero, _ = _shoot(1.0, p, q, N, 1e6)
        if not math.isfinite(zero):
            raise NumericError("shooting parameter not bracketed")
        guess = zero ** (-p / (p - q))
        lo, hi = guess * 0.9, min(guess * 1.1, hi)
        f_lo, f_hi = miss(lo), miss(hi)
        if f_lo * f_hi > 0:
            raise NumericError("shooting parameter not bracketed")
    return brentq(miss, lo, hi, xtol=1e-15 * hi, rtol=1e-15, maxiter=200)


def wB1_profile(p, q, N, n_samples=257):
    """Radial profile of the positive solution in the unit ball of R^N."""
    if n_samples < 2:
        raise ParameterError("n_samples must be at least 2")
    a = radial_center(p, q, N)
    zero, sol = _shoot(a, p, q, N, 1.0 + 1e-6, dense=True)
    r = np.linspace(0.0, 1.0, n_samples)
    z = sol.sol(np.clip(r, _R0, sol.t[-1]))
    u = np.maximum(z[0], 0.0)
    u[0] = a
    u[-1] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        du = -(np.maximum(z[1], 0.0) / np.maximum(r, _R0) ** (N - 1)) ** (1.0 / (p - 1.0))
    du[0] = 0.0
    return Profile1D(r, u, "radial", du)


def localization_constant(N, p, q):
    """Lower bound for ``d(x_max) / r_Omega`` at maximum points, in (0, 1]."""
    check_exponents(p, q)
    if N == 1:
        # the one-dimensional ball is the interval itself
        return 1.0
    upper = radial_center(p, q, N)
    val = profile_integral(p, q, upper)
    return float(min(max(val, np.nextafter(0.0, 1.0)), 1.0))
