import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lek.errors import ParameterError
from lek.geometry import Box, Disk, rasterize
from lek.onedim import PQParams, pi_pq
from lek.pde import GridFunction, SolveOptions, dirichlet, solve_lane_emden
from lek.frequencies import (
    FREQUENCY_TOL,
    continuity_scan,
    discretization_margin,
    frequency_from_solution,
    hersch_protter_ratio,
    hp_lower_bound,
    lambda_pq,
    perimeter_upper_bound,
    rayleigh_quotient,
    ratio_upper_bound,
)
from lek.verify import slab, standard_corpus

# 1 / (torsion mass of the unit square), from an independent five-point Poisson solve
UNIT_SQUARE_LAMBDA = 1 / 0.0351438178


def test_interval_frequency(interval):
    res = lambda_pq(interval, 2, 1, 2**-8)
    assert res.lam == pytest.approx(1.5, rel=1e-2)
    assert res.mass == pytest.approx(2 / 3, rel=1e-2)
    assert res.converged and res.lam > 0


def test_disk_frequency(unit_disk):
    res = lambda_pq(unit_disk, 2, 1, 2**-8)
    assert res.lam == pytest.approx(8 / math.pi, rel=1e-2)


def test_unit_square_frequency():
    res = lambda_pq(Box((0.0, 0.0), (1.0, 1.0)), 2, 1, 2**-7)
    assert res.lam == pytest.approx(UNIT_SQUARE_LAMBDA, rel=2e-2)


@pytest.mark.parametrize("p,q", [(2, 1), (3, 2), (1.5, 1.2), (4, 2.5)])
def test_optimality_identity(p, q, square):
    w, _ = solve_lane_emden(square, PQParams(p, q), 2**-4, SolveOptions(tol=FREQUENCY_TOL))
    hn = w.grid.h**2
    grad = p * dirichlet(w.values, w.grid.h, p)
    mass = hn * float(np.sum(w.interior**q))
    assert abs(grad - mass) / mass <= 1e-6
    lam, m = frequency_from_solution(w, p, q)
    assert m == pytest.approx(mass, rel=1e-15)
    assert rayleigh_quotient(w, p, q) == pytest.approx(lam, rel=1e-8)


def test_rayleigh_zero_homogeneous(square, rng):
    g = rasterize(square, 0.125)
    f = GridFunction.zeros(g)
    f.values[g.mask] = rng.uniform(0, 1, g.n_interior)
    base = rayleigh_quotient(f, 3, 2)
    for c in (1e-3, 0.5, 2.0, 1e4):
        assert rayleigh_quotient(f * c, 3, 2) == pytest.approx(base, rel=1e-12)


def test_rayleigh_bounded_below_by_lambda(square, rng):
    h = 2**-4
    lam = lambda_pq(square, 3, 2, h).lam
    g = rasterize(square, h)
    for _ in range(5):
        f = GridFunction.zeros(g)
        f.values[g.mask] = rng.uniform(0, 1, g.n_interior)
        assert rayleigh_quotient(f, 3, 2) >= lam * (1 - discretization_margin(h))
    # the barrier-shaped function is close to optimal but still above
    d = g.distance()
    f = GridFunction(g, np.where(g.mask, d, 0.0))
    assert rayleigh_quotient(f, 3, 2) >= lam


def test_rayleigh_zero_function(square):
    with pytest.raises(ParameterError):
        rayleigh_quotient(GridFunction.zeros(rasterize(square, 0.25)), 2, 1)


def test_hersch_protter_examples(interval, unit_disk):
    assert hersch_protter_ratio(interval, 2, 1, 2**-8) == pytest.approx(1.0, rel=1e-2)
    assert hersch_protter_ratio(unit_disk, 2, 1, 2**-7) == pytest.approx(8 / 3, rel=2e-2)


def test_hp_lower_bound_formula(square):
    expected = (pi_pq(2, 1) / 2) ** 2 / 4
    assert hp_lower_bound(square, 2, 1) == pytest.approx(expected, rel=1e-14)


def test_slab_ratios_decrease_and_are_bracketed():
    ratios = []
    for L in (4, 8, 16):
        dom = slab(L)
        r = hersch_protter_ratio(dom, 2, 1, 2**-4)
        assert 1.0 < r <= ratio_upper_bound(dom, 2)
        ratios.append(r)
    assert ratios[0] > ratios[1] > ratios[2]


def test_ratio_upper_bound_rectangle():
    dom = Box((-5.0, -1.0), (5.0, 1.0))
    assert ratio_upper_bound(dom, 2) == pytest.approx(1.44, rel=1e-14)
    assert hersch_protter_ratio(dom, 2, 1, 2**-4) <= 1.44


def test_perimeter_upper_bound(interval, square):
    for dom, h in [(interval, 2**-6), (square, 2**-4)]:
        for p, q in [(2, 1), (3, 2)]:
            res = lambda_pq(dom, p, q, h)
            # the interval attains the bound, so the discrete value may sit O(h^2) above
            assert perimeter_upper_bound(dom, p, q) * (1 + res.eps_h) >= res.lam
    # square: (sqrt3)^2 (8 / 4^{3/2})^2
    assert perimeter_upper_bound(square, 2, 1) == pytest.approx(3.0, rel=1e-14)
    assert perimeter_upper_bound(square, 2, 1) >= lambda_pq(square, 2, 1, 2**-4).lam


def test_corpus_ratio_at_least_one():
    for dom in standard_corpus():
        h = dom.metrics().inradius / 16
        for p, q in [(2, 1), (3, 2)]:
            assert hersch_protter_ratio(dom, p, q, h) >= 0.98


def test_ratio_gap_shrinks_under_refinement():
    # the ratio tends to 1 on the slab family; refinement should not move it away
    dom = slab(16)
    coarse = hersch_protter_ratio(dom, 2, 1, 2**-3)
    fine = hersch_protter_ratio(dom, 2, 1, 2**-4)
    assert fine >= 1 - discretization_margin(2**-4)
    assert abs(fine - coarse) <= 0.05


def test_scan_interval_approaches_eigenvalue(interval):
    qs = [1.0, 1.5, 1.9, 1.99]
    res = continuity_scan(interval, 2, qs, 2**-7)
    assert res.ok
    lams = [r.lam for r in res.rows]
    assert all(b > a for a, b in zip(lams, lams[1:]))
    assert lams[-1] == pytest.approx((math.pi / 2) ** 2, rel=2e-2)
    assert math.isfinite(res.modulus) and res.modulus > 0


def test_scan_square_bracket(square):
    res = continuity_scan(square, 3, [1, 1.5, 2, 2.5], 2**-4)
    assert res.ok
    for row in res.rows:
        assert row.lam > 0 and math.isfinite(row.lam)
        assert row.hp_lower * (1 - res.eps_h) <= row.lam <= row.perim_upper * (1 + res.eps_h)


def test_scan_csv_and_threads(tmp_path, square):
    a = continuity_scan(square, 2, [1, 1.5], 2**-3)
    b = continuity_scan(square, 2, [1, 1.5], 2**-3, workers=2)
    assert a.to_csv() == b.to_csv()
    path = tmp_path / "scan.csv"
    a.to_csv(path)
    rows = list(csv.reader(io.StringIO(path.read_text())))
    assert rows[0] == ["q", "lambda", "hp_lower", "perim_upper", "ratio"]
    assert len(rows) == 3


def test_scan_rejects_bad_lists(square):
    for qs in ([], [1.5, 1.2], [1, 2]):
        with pytest.raises(ParameterError):
            continuity_scan(square, 2, qs, 0.25)


def test_frequency_result_dict(interval):
    d = lambda_pq(interval, 2, 1, 2**-4).to_dict()
    assert set(d) == {"lambda", "mass", "normalized_gap", "eps_h", "h", "converged"}


def test_discretization_margin():
    assert discretization_margin(2**-10) == 0.02
    assert discretization_margin(2**-8) == pytest.approx(0.0390625)
    assert discretization_margin(0.01) == pytest.approx(0.1)


@settings(max_examples=10)
@given(st.floats(0.5, 3.0))
def test_frequency_scaling_with_domain(radius):
    # lambda_{p,q}(t B) = t^{-p - N(p-q)/q} lambda_{p,q}(B); the lattice follows h = t/16
    p, q = 3.0, 2.0
    base = lambda_pq(Disk((0.0, 0.0), 1.0), p, q, 1 / 16).lam
    lam = lambda_pq(Disk((0.0, 0.0), radius), p, q, radius / 16).lam
    assert lam == pytest.approx(base * radius ** (-p - 2 * (p - q) / q), rel=1e-6)
