import math

import numpy as np
import pytest
import scipy.special as sp

from spurfilter.bessel import bessel, j1_over_j0
from spurfilter.errors import DomainError


def test_values_at_zero():
    assert bessel(0, "J", 0.0) == 1.0
    assert bessel(1, "J", 0.0) == 0.0


def test_first_zero_of_j0():
    assert abs(bessel(0, "J", 2.404825557695773)) < 1e-14


def reference_series_j0(x, terms=40):
    # independent plain-float ascending series
    return sum((-1) ** k * (x / 2) ** (2 * k) / math.factorial(k) ** 2 for k in range(terms))


@pytest.mark.parametrize("x", [0.1, 1.0, 2.404826, 5.0, 8.0])
def test_j0_against_series(x):
    assert bessel(0, "J", x) == pytest.approx(reference_series_j0(x), rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("x", [0.5, 5.0, 50.0])
def test_wronskian(x):
    w = bessel(0, "J", x) * bessel(1, "Y", x) - bessel(1, "J", x) * bessel(0, "Y", x)
    assert w == pytest.approx(-2 / (math.pi * x), rel=1e-9)


def test_wronskian_across_switchover():
    x = np.linspace(10.0, 14.0, 401)
    w = bessel(0, "J", x) * bessel(1, "Y", x) - bessel(1, "J", x) * bessel(0, "Y", x)
    np.testing.assert_allclose(w, -2 / (np.pi * x), rtol=1e-10)


@pytest.mark.parametrize("order, kind, ref", [(0, "J", sp.j0), (1, "J", sp.j1), (0, "Y", sp.y0), (1, "Y", sp.y1)])
def test_real_argument_against_scipy(order, kind, ref):
    x = np.concatenate([np.geomspace(1e-3, 1.0, 50), np.linspace(1.0, 60.0, 600), [200.0, 1e3]])
    got = bessel(order, kind, x)
    want = ref(x)
    # relative far from zeros, absolute near them
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-11 * np.maximum(1.0, np.abs(want)).max())


@pytest.mark.parametrize("order", [0, 1])
def test_complex_argument_against_scipy(order):
    s = np.linspace(0.05, 40.0, 300)
    z = s * np.exp(-0.25j * np.pi)
    np.testing.assert_allclose(bessel(order, "J", z), sp.jv(order, z), rtol=1e-10)


def test_ratio_stays_finite_for_large_arguments():
    z = 5e3 * np.exp(-0.25j * np.pi)
    r = j1_over_j0(z)
    assert np.isfinite(r)
    # J1/J0 -> -j as Im z -> -inf
    assert r == pytest.approx(-1j, abs=2e-4)
    small = 8.0 * np.exp(-0.25j * np.pi)
    assert j1_over_j0(small) == pytest.approx(sp.jv(1, small) / sp.jv(0, small), rel=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_y_domain(x):
    with pytest.raises(DomainError):
        bessel(0, "Y", x)


def test_y_rejects_complex():
    with pytest.raises(DomainError):
        bessel(1, "Y", 1.0 + 1.0j)


def test_bad_order_and_kind():
    with pytest.raises(DomainError):
        bessel(2, "J", 1.0)
    with pytest.raises(DomainError):
        bessel(0, "K", 1.0)
