"""Closed-form real cubic roots against numpy and random polynomials."""

import numpy as np
import pytest

from fedcost.cardano import real_cubic_roots


def numpy_real_roots(a, b, c, d, tol=1e-7):
    roots = np.roots([a, b, c, d])
    return sorted(float(r.real) for r in roots if abs(r.imag) < tol)


def test_linear_fallback():
    assert real_cubic_roots(0.0, 0.0, 2.0, -6.0) == [pytest.approx(3.0)]
    assert real_cubic_roots(0.0, 0.0, 0.0, 1.0) == []


def test_quadratic_fallback():
    roots = real_cubic_roots(0.0, 1.0, -5.0, 6.0)
    assert roots == [pytest.approx(2.0), pytest.approx(3.0)]
    assert real_cubic_roots(0.0, 1.0, 0.0, 1.0) == []  # x^2 + 1
    # double root
    roots = real_cubic_roots(0.0, 1.0, -4.0, 4.0)
    assert all(r == pytest.approx(2.0) for r in roots)


def test_known_factorizations():
    # (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
    roots = real_cubic_roots(1.0, -6.0, 11.0, -6.0)
    np.testing.assert_allclose(roots, [1.0, 2.0, 3.0], atol=1e-9)
    # (x+1)(x^2+1): single real root
    roots = real_cubic_roots(1.0, 1.0, 1.0, 1.0)
    np.testing.assert_allclose(roots, [-1.0], atol=1e-12)
    # x^3 - 3x = x(x^2-3)
    roots = real_cubic_roots(1.0, 0.0, -3.0, 0.0)
    np.testing.assert_allclose(roots, [-np.sqrt(3), 0.0, np.sqrt(3)], atol=1e-12)


def test_triple_root():
    # (x-2)^3 = x^3 - 6x^2 + 12x - 8
    roots = real_cubic_roots(1.0, -6.0, 12.0, -8.0)
    assert len(roots) >= 1
    for r in roots:
        assert r == pytest.approx(2.0, abs=1e-6)


def test_random_cubics_match_numpy():
    rng = np.random.default_rng(123)
    for _ in range(500):
        a = float(rng.uniform(0.1, 5.0)) * float(rng.choice([-1, 1]))
        b, c, d = rng.uniform(-10, 10, size=3)
        got = real_cubic_roots(a, float(b), float(c), float(d))
        want = numpy_real_roots(a, float(b), float(c), float(d))
        assert len(got) in (1, 2, 3)
        # same real-root count up to numerical borderline cases
        scale = max(1.0, abs(a), abs(b), abs(c), abs(d))
        for r in got:
            val = ((a * r + b) * r + c) * r + d
            assert abs(val) < 1e-7 * scale
        if len(got) == len(want):
            np.testing.assert_allclose(got, want, atol=1e-6, rtol=1e-6)


def test_roots_satisfy_polynomial_at_extreme_scales():
    for scale in (1e-6, 1e6):
        a, b, c, d = scale, -6 * scale, 11 * scale, -6 * scale
        roots = real_cubic_roots(a, b, c, d)
        np.testing.assert_allclose(roots, [1.0, 2.0, 3.0], rtol=1e-8)


def test_returns_sorted():
    rng = np.random.default_rng(7)
    for _ in range(50):
        coeffs = rng.uniform(-3, 3, size=4)
        coeffs[0] = coeffs[0] if abs(coeffs[0]) > 0.1 else 1.0
        roots = real_cubic_roots(*map(float, coeffs))
        assert roots == sorted(roots)
