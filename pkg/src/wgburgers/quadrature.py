"""Legendre polynomials and Gauss-Legendre quadrature on the reference interval [-1, 1]."""

from dataclasses import dataclass

import numpy as np

MAX_QUAD_POINTS = 64
_NEWTON_TOL = 1e-15
_NEWTON_MAX_ITERS = 100


def legendre_eval(degree: int, t):
    """Evaluate the Legendre polynomial of the given degree at t.

    Uses the three-term recurrence (j+1) P_{j+1} = (2j+1) t P_j - j P_{j-1}.
    t may be a scalar or an array; the result has the same shape.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    scalar = np.isscalar(t) or np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    p_prev = np.ones_like(t)
    if degree == 0:
        return float(p_prev) if scalar else p_prev
    p = t.copy()
    for j in range(1, degree):
        p, p_prev = ((2 * j + 1) * t * p - j * p_prev) / (j + 1), p
    return float(p) if scalar else p


def legendre_deriv(degree: int, t):
    """Derivative of the Legendre polynomial, via P'_{j+1} = P'_{j-1} + (2j+1) P_j."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    scalar = np.isscalar(t) or np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    p_prev, p = np.ones_like(t), t.copy()
    d_prev, d = np.zeros_like(t), np.ones_like(t)
    if degree == 0:
        return float(d_prev) if scalar else d_prev
    for j in range(1, degree):
        p_next = ((2 * j + 1) * t * p - j * p_prev) / (j + 1)
        d_next = d_prev + (2 * j + 1) * p
        p_prev, p = p, p_next
        d_prev, d = d, d_next
    return float(d) if scalar else d


def legendre_table(max_degree: int, t):
    """Values of P_0 .. P_max_degree at the points t, shape (max_degree + 1, len(t))."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    table = np.empty((max_degree + 1, t.size))
    table[0] = 1.0
    if max_degree >= 1:
        table[1] = t
    for j in range(1, max_degree):
        table[j + 1] = ((2 * j + 1) * t * table[j] - j * table[j - 1]) / (j + 1)
    return table


class RefPoly:
    """Polynomial on [-1, 1] stored by coefficients in the Legendre basis P_0 .. P_d."""

    def __init__(self, coeffs):
        coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float)).copy()
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValueError("coeffs must be a non-empty 1-d sequence")
        coeffs.setflags(write=False)
        self.coeffs = coeffs

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, t):
        scalar = np.isscalar(t) or np.ndim(t) == 0
        values = self.coeffs @ legendre_table(self.degree, t)
        return float(values[0]) if scalar else values

    def __repr__(self):
        return f"RefPoly({np.array2string(self.coeffs, precision=6)})"


@dataclass(frozen=True)
class QuadratureRule:
    """Abscissae/weights on [-1, 1], exact for polynomials up to exact_degree."""

    points: np.ndarray
    weights: np.ndarray
    exact_degree: int

    def integrate(self, f) -> float:
        """Integrate a vectorized callable over [-1, 1]."""
        return float(self.weights @ np.asarray(f(self.points), dtype=float))

    def integrate_on(self, f, a: float, b: float) -> float:
        """Integrate a vectorized callable over [a, b] via the affine map."""
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        return half * float(self.weights @ np.asarray(f(mid + half * self.points), dtype=float))


def gauss_rule(n_points: int) -> QuadratureRule:
    """Gauss-Legendre rule with n_points abscissae, exact through degree 2n - 1.

    Roots of P_n are found by Newton iteration from the Chebyshev-like
    asymptotic guesses cos(pi (i - 1/4) / (n + 1/2)); weights follow from
    w = 2 / ((1 - x^2) P_n'(x)^2).
    """
    if not 1 <= n_points <= MAX_QUAD_POINTS:
        raise ValueError(f"n_points must be in [1, {MAX_QUAD_POINTS}], got {n_points}")
    n = int(n_points)
    if n == 1:
        points = np.array([0.0])
        weights = np.array([2.0])
    else:
        m = (n + 1) // 2
        x = np.cos(np.pi * (np.arange(1, m + 1) - 0.25) / (n + 0.5))
        for _ in range(_NEWTON_MAX_ITERS):
            dx = -legendre_eval(n, x) / legendre_deriv(n, x)
            x += dx
            if np.max(np.abs(dx)) < _NEWTON_TOL:
                break
        else:
            raise RuntimeError("Newton iteration for Gauss nodes did not converge")
        w_half = 2.0 / ((1.0 - x * x) * legendre_deriv(n, x) ** 2)
        points = np.concatenate([x, -x[: n - m][::-1]])
        weights = np.concatenate([w_half, w_half[: n - m][::-1]])
        order = np.argsort(points)
        points = points[order]
        weights = weights[order]
        if n % 2 == 1:
            points[m - 1] = 0.0  # odd rules always contain the origin
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points=points, weights=weights, exact_degree=2 * n - 1)
