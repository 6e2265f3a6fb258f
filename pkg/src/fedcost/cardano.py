"""Closed-form real roots of quadratic and cubic polynomials.

The optimizer's inner step reduces to one cubic in the local-iteration
count, so a dependable real-root solver is load bearing.  The cubic path
depresses the polynomial, branches on the discriminant (hyperbolic
one-real-root case via signed cube roots, three-real-root case via the
trigonometric identity), and finishes every root with two Newton steps to
pull the closed-form result down to machine precision.
"""

from __future__ import annotations

import math

__all__ = ["real_cubic_roots"]

_TWO_PI = 2.0 * math.pi


def _cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def _real_quadratic_roots(b: float, c: float, d: float) -> list[float]:
    # b x^2 + c x + d = 0, numerically stable variant
    if b == 0.0:
        if c == 0.0:
            if d == 0.0:
                raise ValueError("all polynomial coefficients are zero")
            return []
        return [-d / c]
    disc = c * c - 4.0 * b * d
    if disc < 0.0:
        return []
    s = math.sqrt(disc)
    q = -0.5 * (c + math.copysign(s, c)) if c != 0.0 else 0.5 * s
    if q == 0.0:
        return [0.0]
    roots = {q / b, d / q}
    return sorted(roots)


def real_cubic_roots(a: float, b: float, c: float, d: float) -> list[float]:
    """All real roots of a x^3 + b x^2 + c x + d, ascending.

    Degrades gracefully to the quadratic/linear cases when leading
    coefficients vanish.  Roots from the closed-form branches are polished
    with two Newton iterations.
    """
    if a == 0.0:
        return _real_quadratic_roots(b, c, d)

    # depress: x = t - b / (3a)  =>  t^3 + p t + q = 0
    shift = b / (3.0 * a)
    p = (3.0 * a * c - b * b) / (3.0 * a * a)
    q = (2.0 * b ** 3 - 9.0 * a * b * c + 27.0 * a * a * d) / (27.0 * a ** 3)

    disc = 0.25 * q * q + p ** 3 / 27.0
    if disc > 0.0:
        s = math.sqrt(disc)
        t_roots = [_cbrt(-0.5 * q + s) + _cbrt(-0.5 * q - s)]
    elif p == 0.0:
        # disc <= 0 with p = 0 forces q = 0: triple root
        t_roots = [0.0]
    else:
        # three real roots (possibly repeated): trigonometric form
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        theta = math.acos(min(1.0, max(-1.0, arg)))
        t_roots = [m * math.cos((theta - _TWO_PI * j) / 3.0) for j in range(3)]

    roots = []
    for t in t_roots:
        x = t - shift
        for _ in range(2):  # Newton polish
            f = ((a * x + b) * x + c) * x + d
            fp = (3.0 * a * x + 2.0 * b) * x + c
            if fp == 0.0:
                break
            step = f / fp
            if not math.isfinite(step):
                break
            x -= step
        roots.append(x)
    return sorted(roots)
