"""Backward-difference time stepping with fixed-point resolution of the convection term.

Each step solves the nonlinear discrete system by the iteration
U^(m) = F(U^(m-1)), where F freezes the convection coefficient at the previous
iterate and solves the resulting linear banded system.  The skew form of the
convection term makes every iterate satisfy the discrete energy inequality

    ||U_n^0||_h^2 + 2 tau nu ||d_w U_n||_h^2 <= ||U_{n-1}^0||_h^2

unconditionally, which is also what the per-step diagnostics record.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import FormAssembler, factor_banded, solve_factored
from .mesh import Mesh, build_uniform_mesh
from .quadrature import gauss_rule
from .weakspace import WeakFunction, qh_project, same_mesh

_STEP_COUNT_TOL = 1e-9
_BOUNDARY_TOL = 1e-12


class PicardNonconvergenceError(RuntimeError):
    """The fixed-point iteration exhausted picard_max without meeting the tolerance."""

    def __init__(self, increment: float, iterations: int, step_index=None):
        self.increment = float(increment)
        self.iterations = int(iterations)
        self.step_index = step_index
        where = "" if step_index is None else f" at step {step_index}"
        super().__init__(
            f"fixed-point iteration did not converge{where}: "
            f"last increment {self.increment:.3e} after {self.iterations} iterations "
            "(time step likely too large for this viscosity)"
        )


@dataclass(frozen=True)
class SolverConfig:
    """Discretization parameters for one run."""

    k: int
    n_elements: int
    nu: float
    tau: float
    t_final: float
    picard_tol: float = 1e-12
    picard_max: int = 50
    quad_assembly: int | None = None
    quad_error: int | None = None

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if self.n_elements < 2:
            raise ValueError("n_elements must be at least 2")
        if self.nu <= 0.0:
            raise ValueError("viscosity nu must be positive")
        if self.tau <= 0.0 or self.t_final <= 0.0:
            raise ValueError("tau and t_final must be positive")
        if self.picard_tol <= 0.0 or self.picard_max < 1:
            raise ValueError("picard_tol must be positive and picard_max at least 1")
        steps = self.t_final / self.tau
        if abs(steps - round(steps)) > _STEP_COUNT_TOL:
            raise ValueError(
                f"t_final / tau = {steps!r} is not an integer number of steps"
            )
        if self.quad_assembly is not None and 2 * self.quad_assembly - 1 < 3 * self.k + 1:
            raise ValueError("quad_assembly too small for the convection integrand")
        if self.quad_error is not None and self.quad_error < 1:
            raise ValueError("quad_error must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.tau))

    @property
    def error_rule_points(self) -> int:
        return self.quad_error if self.quad_error is not None else self.k + 6


@dataclass
class Trajectory:
    """States and per-step diagnostics of one run.

    states holds every step for store="all" and only the initial and final
    states for store="final".  interior_energy[n] is ||U_n^0||_h^2 and
    deriv_energy[n] is ||d_w U_n||_h^2.
    """

    config: SolverConfig
    times: np.ndarray
    states: list
    picard_iters: np.ndarray
    interior_energy: np.ndarray
    deriv_energy: np.ndarray
    store: str = "all"

    def state_at(self, t: float) -> WeakFunction:
        """Stored state at time t; requires store="all" for interior times."""
        index = int(round(t / self.config.tau))
        if abs(t - index * self.config.tau) > _STEP_COUNT_TOL or not 0 <= index <= self.config.n_steps:
            raise ValueError(f"time {t} is not on the step grid")
        if self.store == "all":
            return self.states[index]
        if index == 0:
            return self.states[0]
        if index == self.config.n_steps:
            return self.states[-1]
        raise ValueError("interior states were not stored; rerun with store='all'")


class TimeStepper:
    """Precomputed machinery for advancing one configuration step by step."""

    def __init__(self, config: SolverConfig, mesh: Mesh | None = None):
        if mesh is None:
            mesh = build_uniform_mesh(config.n_elements)
        elif mesh.n_elements != config.n_elements:
            raise ValueError("mesh does not match config.n_elements")
        self.config = config
        self.mesh = mesh
        self.assembler = FormAssembler(mesh, config.k, config.quad_assembly)
        dm = self.assembler.dofmap
        self.dofmap = dm
        self._bandwidth = dm.bandwidth
        template = self.assembler.dofmap.scatter_band(self.assembler.diffusion_blocks())
        template *= config.nu
        template[2 * dm.bandwidth, :] += dm.to_band(self.assembler.mass_diag) / config.tau
        self._template = np.asfortranarray(template)
        self._mass_diag = self.assembler.mass_diag
        self._weights = self.assembler.increment_weights
        self._n_interior = dm.n_interior
        self._n_el = mesh.n_elements

    def _increment_norm(self, vec: np.ndarray) -> float:
        return math.sqrt(float(self._weights @ (vec * vec)))

    def energies(self, vec: np.ndarray):
        """(||u0||_h^2, ||d_w u||_h^2) for a flat DOF vector."""
        interior = float(self._mass_diag @ (vec * vec))
        data = self.dofmap.gather_element_data(vec)
        dcoef = np.einsum("imc,ic->im", self.assembler.deriv.ops, data)
        return interior, float(np.sum(self.assembler.gram_deriv * dcoef * dcoef))

    def step_vector(self, u: np.ndarray):
        """One backward step from the flat vector u; returns (next, picard_iterations)."""
        cfg = self.config
        rhs_band = self.dofmap.to_band(self._mass_diag * u / cfg.tau)
        iterate = u
        k = cfg.k
        increment = math.inf
        for m in range(1, cfg.picard_max + 1):
            w_int = iterate[: self._n_interior].reshape(self._n_el, k + 1)
            blocks = self.assembler.convection_blocks(w_int)
            work = self._template + self.dofmap.scatter_band(blocks)
            lu, ipiv = factor_banded(np.asfortranarray(work), self._bandwidth)
            new = self.dofmap.to_flat(
                solve_factored(lu, ipiv, self._bandwidth, rhs_band)
            )
            increment = self._increment_norm(new - iterate)
            iterate = new
            if increment <= cfg.picard_tol * max(1.0, self._increment_norm(new)):
                return iterate, m
        raise PicardNonconvergenceError(increment, cfg.picard_max)

    def step(self, prev: WeakFunction):
        """One backward step from a weak function; returns (next, picard_iterations)."""
        if not same_mesh(prev.mesh, self.mesh) or prev.k != self.config.k:
            raise ValueError("state does not live on this stepper's space")
        if not prev.has_zero_boundary():
            raise ValueError("state must have zero boundary values")
        vec, iters = self.step_vector(prev.dof_vector())
        return WeakFunction.from_dof_vector(self.mesh, self.config.k, vec), iters


def initial_state(g, config: SolverConfig, mesh: Mesh | None = None) -> WeakFunction:
    """Projection of the initial datum onto the discrete space.

    g must vanish at both endpoints (homogeneous Dirichlet data) and accept
    numpy arrays.
    """
    if mesh is None:
        mesh = build_uniform_mesh(config.n_elements)
    boundary = np.asarray(g(np.array([0.0, 1.0])), dtype=float)
    if np.max(np.abs(boundary)) > _BOUNDARY_TOL:
        raise ValueError("initial datum must vanish at x = 0 and x = 1")
    projected = qh_project(g, mesh, config.k, gauss_rule(config.error_rule_points))
    # pin the (already tiny) boundary values so the state sits exactly in the space
    return WeakFunction.from_dof_vector(mesh, config.k, projected.dof_vector())


def step(prev: WeakFunction, config: SolverConfig):
    """One backward step of the scheme; returns (next_state, picard_iterations)."""
    return TimeStepper(config, prev.mesh).step(prev)


def solve_trajectory(g, config: SolverConfig, store: str = "all") -> Trajectory:
    """March the scheme from the projected initial datum to t_final.

    store="all" keeps every state; store="final" keeps only the first and last
    to bound memory.  Per-step fixed-point iteration counts and the two energy
    diagnostics are always recorded.
    """
    if store not in ("all", "final"):
        raise ValueError("store must be 'all' or 'final'")
    stepper = TimeStepper(config)
    mesh = stepper.mesh
    n_steps = config.n_steps
    times = np.arange(n_steps + 1) * config.tau

    state0 = initial_state(g, config, mesh)
    vec = state0.dof_vector()
    picard = np.zeros(n_steps, dtype=int)
    interior_energy = np.empty(n_steps + 1)
    deriv_energy = np.empty(n_steps + 1)
    interior_energy[0], deriv_energy[0] = stepper.energies(vec)

    states = [state0]
    for n in range(1, n_steps + 1):
        try:
            vec, iters = stepper.step_vector(vec)
        except PicardNonconvergenceError as err:
            raise PicardNonconvergenceError(err.increment, err.iterations, step_index=n) from None
        picard[n - 1] = iters
        interior_energy[n], deriv_energy[n] = stepper.energies(vec)
        if store == "all":
            states.append(WeakFunction.from_dof_vector(mesh, config.k, vec))
    if store == "final":
        states.append(WeakFunction.from_dof_vector(mesh, config.k, vec))

    return Trajectory(
        config=config,
        times=times,
        states=states,
        picard_iters=picard,
        interior_energy=interior_energy,
        deriv_energy=deriv_energy,
        store=store,
    )
