"""Engine checks for the adaptive panel integrator.

The integrator is the independent reference for every closed form in the
package, so its own checks lean on analytically known integrals only.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nldiff.quadrature import (
    DecayCertificate,
    PowerDecayCertificate,
    QuadratureError,
    adaptive_quad,
    default_tolerance,
)


def test_polynomial():
    r = adaptive_quad(lambda x: x * x, 0.0, 1.0, 1e-12)
    assert abs(r.value - 1.0 / 3.0) <= 1e-12
    assert r.converged
    assert r.abs_error_estimate <= 1e-12


def test_exponential_tail():
    cert = DecayCertificate(rate=1.0, constant=1.0)
    r = adaptive_quad(lambda y: np.exp(-y), 0.0, math.inf, 1e-10, decay=cert)
    assert abs(r.value - 1.0) <= 1e-10


def test_power_tail():
    cert = PowerDecayCertificate(degree=3.0, constant=1.0)
    r = adaptive_quad(lambda y: y ** -3.0, 1.0, math.inf, 1e-11, decay=cert)
    assert abs(r.value - 0.5) <= 1e-10


def test_two_sided_infinite():
    # |exp(-y^2)| <= e * exp(-2|y|) everywhere
    cert = DecayCertificate(rate=2.0, constant=math.e)
    r = adaptive_quad(lambda y: np.exp(-(y ** 2)), -math.inf, math.inf, 1e-11, decay=cert)
    assert abs(r.value - math.sqrt(math.pi)) <= 1e-9


def test_breakpoint_resolves_kink():
    r = adaptive_quad(
        lambda y: np.exp(-np.abs(y)), -1.0, 1.0, 1e-13, breakpoints=(0.0,)
    )
    assert abs(r.value - 2.0 * (1.0 - math.exp(-1.0))) <= 1e-13


def test_zero_tolerance_means_machine_best():
    r = adaptive_quad(np.sin, 0.0, math.pi, 0.0)
    assert r.converged
    assert abs(r.value - 2.0) <= 1e-14


class TestHatExample:
    """The first off-center weight of the exponential kernel at h = 1/2.

    The closed form -F'(x1) + (F(x2) - F(x1))/h covers the hat's outer
    half y in [h, 2h] only; the inner half is the job of the second moment
    coefficient, not of any hat integral.  Both halves are pinned here
    (outer from the closed form, totals cross-checked with scipy offline).
    """

    H = 0.5
    OUTER = 0.064614111315125622
    FULL = 0.15481812174617549

    @staticmethod
    def _integrand(y):
        hat = np.maximum(0.0, 1.0 - np.abs(y - 0.5) / 0.5)
        return hat * 0.5 * np.exp(-np.abs(y))

    def test_outer_half_matches_closed_form(self):
        r = adaptive_quad(self._integrand, self.H, 2.0 * self.H, 1e-13)
        closed = 0.5 * math.exp(-0.5) + 2.0 * (
            0.5 * math.exp(-1.0) - 0.5 * math.exp(-0.5)
        )
        assert abs(r.value - closed) <= 1e-13
        assert abs(r.value - self.OUTER) <= 1e-13

    def test_full_hat_value(self):
        r = adaptive_quad(self._integrand, 0.0, 2.0 * self.H, 1e-13)
        assert abs(r.value - self.FULL) <= 1e-13

    def test_halves_sum_to_full(self):
        inner = adaptive_quad(self._integrand, 0.0, self.H, 1e-13).value
        assert abs(inner + self.OUTER - self.FULL) <= 1e-12


def test_order_preserving():
    f = lambda x: np.sin(x) ** 2
    g = lambda x: np.sin(x) ** 2 + 0.01
    tol = 1e-10
    vf = adaptive_quad(f, 0.0, 3.0, tol).value
    vg = adaptive_quad(g, 0.0, 3.0, tol).value
    assert vf <= vg + 2.0 * tol


def test_infinite_bound_requires_certificate():
    with pytest.raises(ValueError):
        adaptive_quad(lambda y: np.exp(-y), 0.0, math.inf, 1e-10)


def test_non_convergence_carries_best_estimate():
    with pytest.raises(QuadratureError) as info:
        adaptive_quad(
            lambda x: np.cos(1000.0 * x), 0.0, 300.0, 1e-14, max_rounds=2
        )
    best = info.value.result
    assert not best.converged
    assert best.abs_error_estimate > 1e-14
    assert best.evaluations > 0


def test_default_tolerance_env_override(monkeypatch):
    monkeypatch.setenv("NLDIFF_QUAD_TOL", "1e-6")
    assert default_tolerance() == 1e-6
    monkeypatch.delenv("NLDIFF_QUAD_TOL")
    assert default_tolerance() == 1e-10


def test_certificate_tail_bounds():
    cert = DecayCertificate(rate=2.0, constant=3.0)
    # integral of 3 e^(-2y) from 5 on
    assert abs(cert.tail_bound(5.0) - 1.5 * math.exp(-10.0)) <= 1e-18
    point = cert.truncation_point(1e-12)
    assert cert.tail_bound(point) <= 1e-12 * (1.0 + 1e-12)

    pcert = PowerDecayCertificate(degree=4.0, constant=2.0)
    assert abs(pcert.tail_bound(10.0) - 2.0 / 3.0 * 10.0 ** -3.0) <= 1e-18


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.2, max_value=4.0), st.floats(min_value=0.1, max_value=2.0))
def test_exponential_integral_identity(a, b):
    # int_0^b e^(-a y) dy has an elementary antiderivative
    r = adaptive_quad(lambda y: np.exp(-a * y), 0.0, b, 1e-12)
    assert abs(r.value - (1.0 - math.exp(-a * b)) / a) <= 1e-11
