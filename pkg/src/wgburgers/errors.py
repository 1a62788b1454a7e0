"""Discrete error norms against a reference solution and convergence-rate fitting."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .quadrature import QuadratureRule, gauss_rule, legendre_table
from .solver import SolverConfig, solve_trajectory
from .weakspace import WeakDerivative, WeakFunction

RATE_TAU_CAP = 1e-4


def _quad_grid(mesh, rule):
    mids = 0.5 * (mesh.nodes[:-1] + mesh.nodes[1:])
    return mids[:, None] + 0.5 * mesh.element_sizes[:, None] * rule.points[None, :]


def discrete_l2_error(exact, state: WeakFunction, t: float, rule: QuadratureRule | None = None) -> float:
    """|| u(., t) - U^0 ||_h by element-wise quadrature of the interior mismatch."""
    if rule is None:
        rule = gauss_rule(state.k + 6)
    x = _quad_grid(state.mesh, rule)
    reference = np.asarray(exact(x.ravel(), t), dtype=float).reshape(x.shape)
    mismatch = reference - state.interior_at(rule.points)
    weighted = (mismatch**2 * rule.weights) @ np.ones(rule.points.size)
    return math.sqrt(float(np.sum(0.5 * state.mesh.element_sizes * weighted)))


def discrete_h1_error(
    exact_dx, state: WeakFunction, t: float, rule: QuadratureRule | None = None
) -> float:
    """|| u_x(., t) - d_w U ||_h, with the discrete derivative from the element operators."""
    if rule is None:
        rule = gauss_rule(state.k + 6)
    x = _quad_grid(state.mesh, rule)
    reference = np.asarray(exact_dx(x.ravel(), t), dtype=float).reshape(x.shape)
    deriv = WeakDerivative(state.mesh, state.k)
    derivative_values = deriv.apply(state) @ legendre_table(state.k + 1, rule.points)
    mismatch = reference - derivative_values
    weighted = (mismatch**2 * rule.weights) @ np.ones(rule.points.size)
    return math.sqrt(float(np.sum(0.5 * state.mesh.element_sizes * weighted)))


@dataclass(frozen=True)
class ErrorReport:
    """Both discrete error norms of one state, with the run parameters echoed."""

    l2_error: float
    h1_error: float
    k: int
    n_elements: int
    nu: float
    tau: float
    t: float


def error_report(
    problem, state: WeakFunction, config: SolverConfig, t: float, rule: QuadratureRule | None = None
) -> ErrorReport:
    """Measure both norms of state against problem at time t."""
    if rule is None:
        rule = gauss_rule(config.error_rule_points)
    return ErrorReport(
        l2_error=discrete_l2_error(problem, state, t, rule),
        h1_error=discrete_h1_error(problem.dx, state, t, rule),
        k=config.k,
        n_elements=config.n_elements,
        nu=config.nu,
        tau=config.tau,
        t=t,
    )


@dataclass(frozen=True)
class ConvergenceTable:
    """Errors over a mesh chain with pairwise rates and least-squares slopes.

    Pairwise rates are defined only between exact mesh halvings; other entries
    are NaN.  Slopes are NaN when fewer than two meshes produced positive
    errors.
    """

    n_elements: tuple
    h: np.ndarray
    l2_errors: np.ndarray
    h1_errors: np.ndarray
    l2_rates: np.ndarray
    h1_rates: np.ndarray
    l2_slope: float
    h1_slope: float
    reports: tuple


def rate_study_tau(h: float, k: int, t_final: float, cap: float = RATE_TAU_CAP) -> float:
    """Time step for rate studies: min(cap, h^(k+1) / 20), snapped to divide t_final."""
    raw = min(cap, h ** (k + 1) / 20.0)
    steps = max(1, math.ceil(t_final / raw - 1e-9))
    return t_final / steps


def _pairwise_rates(n_elements, errors):
    rates = np.full(max(len(n_elements) - 1, 0), np.nan)
    for i in range(1, len(n_elements)):
        if n_elements[i] == 2 * n_elements[i - 1] and errors[i - 1] > 0 and errors[i] > 0:
            rates[i - 1] = math.log2(errors[i - 1] / errors[i])
    return rates


def _slope(h, errors):
    mask = errors > 0
    if mask.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(h[mask]), np.log(errors[mask]), 1)[0])


def convergence_study(
    problem,
    k: int,
    nu: float,
    t_final: float,
    mesh_sizes,
    tau: float | None = None,
    picard_tol: float = 1e-12,
    picard_max: int = 50,
    threads: int = 1,
    on_trajectory=None,
) -> ConvergenceTable:
    """Solve on each mesh of an increasing chain and fit the error decay.

    problem must provide __call__(x, t), dx(x, t), and initial(x), all
    vectorized in x.  tau=None picks the per-mesh rate-study step; an explicit
    tau is used for every mesh.  Mesh sizes run independently, optionally on a
    thread pool.  on_trajectory, if given, receives (n_elements, trajectory)
    after each run, e.g. to audit the per-step energy diagnostics.
    """
    mesh_sizes = [int(n) for n in mesh_sizes]
    if not mesh_sizes or any(n < 2 for n in mesh_sizes):
        raise ValueError("mesh_sizes must be a non-empty chain of sizes >= 2")
    if any(b <= a for a, b in zip(mesh_sizes, mesh_sizes[1:])):
        raise ValueError("mesh_sizes must increase (coarse to fine)")

    def run_one(n: int) -> ErrorReport:
        h = 1.0 / n
        step_tau = rate_study_tau(h, k, t_final) if tau is None else tau
        config = SolverConfig(
            k=k,
            n_elements=n,
            nu=nu,
            tau=step_tau,
            t_final=t_final,
            picard_tol=picard_tol,
            picard_max=picard_max,
        )
        trajectory = solve_trajectory(problem.initial, config, store="final")
        if on_trajectory is not None:
            on_trajectory(n, trajectory)
        return error_report(problem, trajectory.states[-1], config, t_final)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(run_one, mesh_sizes))
    else:
        reports = [run_one(n) for n in mesh_sizes]

    h = np.array([1.0 / n for n in mesh_sizes])
    l2 = np.array([r.l2_error for r in reports])
    h1 = np.array([r.h1_error for r in reports])
    return ConvergenceTable(
        n_elements=tuple(mesh_sizes),
        h=h,
        l2_errors=l2,
        h1_errors=h1,
        l2_rates=_pairwise_rates(mesh_sizes, l2),
        h1_rates=_pairwise_rates(mesh_sizes, h1),
        l2_slope=_slope(h, l2),
        h1_slope=_slope(h, h1),
        reports=tuple(reports),
    )
