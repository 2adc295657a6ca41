import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from lek.errors import ParameterError
from lek.onedim import (
    PQParams,
    consistency_integral,
    lambda_pq_interval,
    localization_constant,
    localization_constant_q1,
    pi_pq,
    profile_integral,
    radial_center,
    scale_solution_alpha,
    wB1_profile,
    wB1_q1_exact,
    wI_center,
    wI_inverse,
    wI_mass,
    wI_profile,
)

# Beta-formula values cross-checked by fine-grid Rayleigh minimization on (0, 1)
PI_GOLDEN = {
    (2, 2): 3.1415926535897936,
    (2, 1): 3.464101615137754,
    (4, 2): 3.3346132004709474,
    (3, 1): 3.684031498640387,
    (2, 1.5): 3.27937083840469,
}
PAIRS = [(2, 1), (2, 1.5), (3, 1), (3, 2), (4, 2.5), (1.5, 1.2), (1.3, 1)]


@pytest.mark.parametrize("pq,value", PI_GOLDEN.items())
def test_pi_pq_golden(pq, value):
    assert pi_pq(*pq) == pytest.approx(value, rel=1e-12)


def test_pi_pq_closed_forms():
    assert pi_pq(2, 2) == pytest.approx(math.pi, abs=1e-12)
    assert pi_pq(2, 1) == pytest.approx(2 * math.sqrt(3), abs=1e-12)


@pytest.mark.parametrize("p,q", [(1.0, 1.0), (2.0, 0.5), (math.inf, 1.0), (2.0, math.nan)])
def test_pi_pq_rejects(p, q):
    with pytest.raises(ParameterError):
        pi_pq(p, q)


def test_params_validation():
    PQParams(2, 1)
    for bad in [(1, 1), (2, 2), (2, 3), (2, 0.9)]:
        with pytest.raises(ParameterError):
            PQParams(*bad)
    with pytest.raises(ParameterError):
        PQParams(2, 1, alpha=0.0)


def test_lambda_interval_examples():
    assert lambda_pq_interval(2, 1) == pytest.approx(1.5, rel=1e-12)
    assert lambda_pq_interval(2, 2) == pytest.approx((math.pi / 2) ** 2, rel=1e-12)
    assert lambda_pq_interval(2, 1, 0.5) == pytest.approx(12.0, rel=1e-12)


def test_wI_center_and_mass():
    assert wI_center(2, 1) == pytest.approx(0.5, abs=1e-12)
    assert wI_mass(2, 1) == pytest.approx(1 / 3, abs=1e-12)
    assert 2 * wI_mass(2, 1) == pytest.approx(2 / 3, abs=1e-12)


@pytest.mark.parametrize("p,q", [(3, 1), (2, 1.5), (4, 2.5)])
def test_wI_center_against_shooting(p, q):
    # the one-dimensional ball is the interval, so shooting is an independent route
    assert radial_center(p, q, 1) == pytest.approx(wI_center(p, q), rel=1e-9)


@pytest.mark.parametrize("p,q", PAIRS)
def test_consistency_identity(p, q):
    assert consistency_integral(p, q) == pytest.approx(1.0, abs=1e-8)
    assert consistency_integral(p, q, method="algebraic") == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("p,q", PAIRS)
def test_profile_mass_matches_closed_form(p, q):
    prof = wI_profile(p, q, 1025)
    t = np.linspace(-1.0, 0.0, 20001)
    mass = integrate.simpson(prof(t) ** q, x=t)
    assert mass == pytest.approx(wI_mass(p, q), abs=1e-6)


def test_profile_torsion_closed_form():
    prof = wI_profile(2, 1)
    t = np.linspace(-1, 1, 1001)
    assert np.max(np.abs(prof(t) - (1 - t**2) / 2)) <= 1e-8
    assert prof(-0.5) == pytest.approx(0.375, abs=1e-12)


@pytest.mark.parametrize("p,q", PAIRS)
def test_profile_shape(p, q):
    prof = wI_profile(p, q)
    assert prof.values[0] == 0.0
    assert prof(-1.0) == 0.0
    assert np.all(np.diff(prof.values) > 0)
    assert prof.slopes[-1] == pytest.approx(0.0, abs=1e-6)
    # even extension, zero outside
    assert prof(0.3) == pytest.approx(prof(-0.3))
    assert prof(1.5) == 0.0


def test_inverse_profile_roundtrip():
    for p, q in [(3, 2), (1.5, 1.2)]:
        prof = wI_profile(p, q)
        for t in (-0.9, -0.5, -0.1):
            assert wI_inverse(p, q, float(prof(t))) == pytest.approx(t, abs=1e-8)


def test_profile_csv(tmp_path):
    path = tmp_path / "w.csv"
    wI_profile(2, 1, 17).to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "value"] and len(rows) == 18
    wB1_profile(2, 1, 2, 9).to_csv(path)
    assert next(csv.reader(open(path))) == ["r", "value"]


def test_profile_integral_range():
    with pytest.raises(ParameterError):
        profile_integral(2, 1, 0.7)
    with pytest.raises(ParameterError):
        wI_profile(2, 1, 8)


def test_radial_examples():
    assert radial_center(2, 1, 2) == pytest.approx(0.25, abs=1e-9)
    assert radial_center(2, 1, 1) == pytest.approx(0.5, abs=1e-9)
    assert radial_center(3, 1, 2) == pytest.approx(2 / 3 * 2**-0.5, abs=1e-9)
    assert radial_center(3, 2, 1) == pytest.approx(0.346502831926, abs=1e-9)


@pytest.mark.parametrize("p,N", [(2, 2), (3, 2), (1.5, 3), (4, 1)])
def test_radial_q1_profile_closed_form(p, N):
    prof = wB1_profile(p, 1, N)
    assert np.max(np.abs(prof.values - wB1_q1_exact(p, N, prof.abscissae))) <= 1e-8
    # between samples the Hermite interpolant meets the r^{p/(p-1)} cusp at the center
    r = np.linspace(0, 1, 101)
    assert np.max(np.abs(prof(r) - wB1_q1_exact(p, N, r))) <= 1e-7


def test_wB1_q1_exact_examples():
    assert wB1_q1_exact(2, 1, 0.0) == 0.5
    assert wB1_q1_exact(2, 2, 1.0) == 0.0
    assert wB1_q1_exact(2, 2, 0.0) == 0.25
    with pytest.raises(ParameterError):
        wB1_q1_exact(2, 2, 1.5)


@pytest.mark.parametrize("p,q,N", [(3, 1.5, 2), (3, 1.5, 3), (4, 2.5, 2), (1.5, 1.2, 2)])
def test_radial_profile_shape_and_ode_residual(p, q, N):
    prof = wB1_profile(p, q, N, 2001)
    assert prof.values[-1] == 0.0
    assert np.all(np.diff(prof.values) <= 0)
    assert prof.values[0] <= wI_center(p, q)
    # finite-difference radial operator -(r^{N-1} |u'|^{p-2} u')' / r^{N-1} = u^{q-1}
    r, hh = np.linspace(0.1, 0.9, 41), 1e-4
    flux = lambda s: s ** (N - 1) * np.abs(prof.derivative(s)) ** (p - 1)  # noqa: E731
    lhs = (flux(r + hh) - flux(r - hh)) / (2 * hh) / r ** (N - 1)
    rhs = prof(r) ** (q - 1)
    assert np.max(np.abs(lhs - rhs)) <= 1e-6


def test_radial_center_by_dimension():
    golden = {1: 0.53363, 2: 0.32007, 3: 0.23645}
    for N, v in golden.items():
        assert radial_center(3, 1.5, N) == pytest.approx(v, abs=1e-5)
    assert radial_center(3, 1.5, 1) == pytest.approx(wI_center(3, 1.5), rel=1e-9)


def test_localization_examples():
    assert localization_constant(1, 3, 2) == 1.0
    assert localization_constant(2, 2, 1) == pytest.approx(1 - math.sqrt(0.5), abs=1e-6)
    assert localization_constant_q1(2, 2) == pytest.approx(1 - math.sqrt(0.5), abs=1e-15)
    assert localization_constant(3, 3, 1) == pytest.approx(1 - (1 - 3**-0.5) ** (2 / 3), abs=1e-6)
    assert localization_constant(3, 3, 1) == pytest.approx(0.43681156, abs=1e-8)


@pytest.mark.parametrize("N,p,q,v", [(2, 3, 2, 0.33842), (2, 4, 2.5, 0.47055), (2, 2, 1.5, 0.12820)])
def test_localization_golden(N, p, q, v):
    assert localization_constant(N, p, q) == pytest.approx(v, abs=1e-5)


@given(st.floats(1.2, 5.0), st.integers(2, 4))
def test_localization_q1_closed_form(p, N):
    c = localization_constant(N, p, 1)
    assert 0 < c <= 1
    assert c == pytest.approx(localization_constant_q1(N, p), abs=1e-6)


def test_scale_solution_alpha():
    v = np.array([0.1, 0.2])
    assert np.array_equal(scale_solution_alpha(v, 2, 1, 1.0), v)
    assert np.allclose(scale_solution_alpha(v, 2, 1, 4.0), 4 * v)
    assert np.allclose(scale_solution_alpha(v, 3, 1, 8.0), math.sqrt(8) * v)


@given(st.floats(1.2, 5.0), st.floats(0.0, 0.95))
def test_pi_pq_positive_and_center_bounded(p, frac):
    q = 1 + frac * (p - 1)
    assert pi_pq(p, q) > 0
    assert radial_center(p, q, 2) <= wI_center(p, q) * (1 + 1e-12)
