"""Closed-form reference solutions of the viscous Burgers equation on (0, 1).

Two solutions with homogeneous Dirichlet data:

* a Fourier series (Hopf/Cole form) for the initial profile sin(pi x), whose
  coefficients are integrals of exp(-(1 - cos(pi x)) / (2 pi nu));
* a rational closed form with a free parameter sigma > 1, obtained from a
  single-mode heat kernel.

A finite-difference residual check is included so both forms can be validated
against the PDE itself rather than against each other.
"""

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import gauss_rule

_EXP_UNDERFLOW = -745.0  # log of the smallest positive double, roughly
_TAIL_BOUND = 1e-14
_MIN_TERMS = 20
_MAX_TERMS = 2000
_DENOMINATOR_FLOOR = 1e-12
_MAX_PANEL_DEPTH = 48

_PANEL_RULE = gauss_rule(15)


class UnsupportedViscosityError(ValueError):
    """The coefficient integrals underflow at this viscosity; the series is unusable."""


def _cos_moment(z2: float, n: int, tol: float) -> float:
    """Adaptive panel quadrature of exp(-(1 - cos(pi x)) z2) cos(n pi x) over [0, 1].

    The exponent is decreasing in x, so each panel factors out its value at the
    left edge; the scaled integrand then stays within [-1, 1] and panels whose
    scale underflows contribute exactly zero.
    """
    pts, wts = _PANEL_RULE.points, _PANEL_RULE.weights

    def estimate(a: float, b: float) -> float:
        s = -(1.0 - math.cos(math.pi * a)) * z2
        if s < _EXP_UNDERFLOW:
            return 0.0
        half = 0.5 * (b - a)
        x = 0.5 * (a + b) + half * pts
        g = np.exp(-(1.0 - np.cos(np.pi * x)) * z2 - s) * np.cos(n * np.pi * x)
        return math.exp(s) * half * float(wts @ g)

    n_panels = max(8, (n + 1) // 2)
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    stack = [(edges[i], edges[i + 1], estimate(edges[i], edges[i + 1]), 0) for i in range(n_panels)]
    total = 0.0
    while stack:
        a, b, coarse, depth = stack.pop()
        mid = 0.5 * (a + b)
        left = estimate(a, mid)
        right = estimate(mid, b)
        err = abs(left + right - coarse)
        if err <= tol * (b - a) or err <= 5e-16 * (abs(left) + abs(right)):
            total += left + right
        elif depth >= _MAX_PANEL_DEPTH:
            raise RuntimeError("coefficient quadrature failed to converge")
        else:
            stack.append((a, mid, left, depth + 1))
            stack.append((mid, b, right, depth + 1))
    return total


@dataclass(frozen=True)
class FourierSolution:
    """Series solution for the initial profile sin(pi x) at viscosity nu.

    a0 and an hold the coefficient integrals; evaluation truncates both the
    numerator and denominator series after len(an) terms.
    """

    nu: float
    a0: float
    an: np.ndarray
    tol: float

    @property
    def n_terms(self) -> int:
        return self.an.size

    def tail_bound(self, t: float) -> float:
        """Crude bound on the dropped numerator terms at time t."""
        n = self.n_terms
        return 2.0 * math.pi * self.nu * n * abs(float(self.an[-1])) * math.exp(
            -(n * math.pi) ** 2 * self.nu * t
        )

    def initial(self, x):
        return np.sin(np.pi * np.asarray(x, dtype=float))

    def __call__(self, x, t: float):
        """Value at (x, t); t must be positive, where the series converges fast."""
        if t <= 0.0:
            raise ValueError("the series solution requires t > 0")
        scalar = np.isscalar(x) or np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.size and (x.min() < 0.0 or x.max() > 1.0):
            raise ValueError("x must lie in [0, 1]")
        n = np.arange(1, self.n_terms + 1)
        decayed = self.an * np.exp(-(n * math.pi) ** 2 * self.nu * t)
        phase = np.outer(n, np.pi * x)
        numerator = 2.0 * math.pi * self.nu * ((decayed * n) @ np.sin(phase))
        denominator = self.a0 + decayed @ np.cos(phase)
        if denominator.min() < _DENOMINATOR_FLOOR * self.a0:
            raise RuntimeError("series denominator vanished; solution not evaluable here")
        values = numerator / denominator
        return float(values[0]) if scalar else values


def fourier_coefficients(nu: float, n_terms: int, tol: float = 1e-13) -> FourierSolution:
    """Coefficients a_0 .. a_{n_terms} of the series solution, to absolute tolerance tol."""
    if nu <= 0.0:
        raise ValueError("viscosity must be positive")
    if n_terms < 1:
        raise ValueError("n_terms must be at least 1")
    z2 = 1.0 / (2.0 * math.pi * nu)
    if not math.isfinite(z2):
        raise UnsupportedViscosityError(f"viscosity {nu} underflows the coefficient integrand")
    a0 = _cos_moment(z2, 0, tol)
    if a0 <= tol:
        raise UnsupportedViscosityError(
            f"leading coefficient {a0:.3e} is below the quadrature tolerance at nu={nu}"
        )
    an = np.array([2.0 * _cos_moment(z2, n, tol) for n in range(1, n_terms + 1)])
    an.setflags(write=False)
    return FourierSolution(nu=nu, a0=a0, an=an, tol=tol)


def fourier_solution_for(nu: float, t_min: float, tol: float = 1e-13) -> FourierSolution:
    """Series solution with enough terms that the tail is negligible for t >= t_min."""
    if t_min <= 0.0:
        raise ValueError("t_min must be positive")
    n_terms = _MIN_TERMS
    while True:
        sol = fourier_coefficients(nu, n_terms, tol)
        if sol.tail_bound(t_min) < _TAIL_BOUND:
            return sol
        if n_terms >= _MAX_TERMS:
            raise UnsupportedViscosityError(
                f"series truncation does not certify convergence at nu={nu}, t_min={t_min}"
            )
        n_terms += 10


@dataclass(frozen=True)
class WoodSolution:
    """Closed-form solution u = 2 nu pi E sin(pi x) / (sigma + E cos(pi x)), E = exp(-pi^2 nu t)."""

    nu: float
    sigma: float = 2.0

    def __post_init__(self):
        if self.nu <= 0.0:
            raise ValueError("viscosity must be positive")
        if self.sigma <= 1.0:
            raise ValueError("sigma must exceed 1 so the denominator stays positive")

    def __call__(self, x, t: float):
        if t < 0.0:
            raise ValueError("t must be non-negative")
        x = np.asarray(x, dtype=float)
        decay = math.exp(-math.pi**2 * self.nu * t)
        return (
            2.0 * self.nu * math.pi * decay * np.sin(np.pi * x)
            / (self.sigma + decay * np.cos(np.pi * x))
        )

    def dx(self, x, t: float):
        """Spatial derivative, used by the discrete H1 error."""
        if t < 0.0:
            raise ValueError("t must be non-negative")
        x = np.asarray(x, dtype=float)
        decay = math.exp(-math.pi**2 * self.nu * t)
        denominator = self.sigma + decay * np.cos(np.pi * x)
        return (
            2.0 * self.nu * math.pi**2 * decay
            * (np.cos(np.pi * x) * denominator + decay * np.sin(np.pi * x) ** 2)
            / denominator**2
        )

    def initial(self, x):
        return self(x, 0.0)


def wood_eval(sol: WoodSolution, x, t: float):
    return sol(x, t)


def fourier_eval(sol: FourierSolution, x, t: float):
    return sol(x, t)


def pde_residual(u, nu: float, x_samples, t_samples, delta: float = 1e-4) -> float:
    """Largest |u_t + u u_x - nu u_xx| over the sample grid, by central differences.

    u must be callable as u(x_array, t) and the samples must keep a margin of
    delta inside the space-time domain.  For a true solution the result decays
    like delta squared.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    xs = np.atleast_1d(np.asarray(x_samples, dtype=float))
    ts = np.atleast_1d(np.asarray(t_samples, dtype=float))
    if xs.min() - delta <= 0.0 or xs.max() + delta >= 1.0:
        raise ValueError("x samples must keep a margin of delta inside (0, 1)")
    if ts.min() - delta <= 0.0:
        raise ValueError("t samples must keep a margin of delta above 0")
    worst = 0.0
    for t in ts:
        center = np.asarray(u(xs, t), dtype=float)
        right = np.asarray(u(xs + delta, t), dtype=float)
        left = np.asarray(u(xs - delta, t), dtype=float)
        later = np.asarray(u(xs, t + delta), dtype=float)
        earlier = np.asarray(u(xs, t - delta), dtype=float)
        u_t = (later - earlier) / (2.0 * delta)
        u_x = (right - left) / (2.0 * delta)
        u_xx = (right - 2.0 * center + left) / delta**2
        worst = max(worst, float(np.max(np.abs(u_t + center * u_x - nu * u_xx))))
    return worst
