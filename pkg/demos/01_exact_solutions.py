"""Reference solutions of the viscous Burgers equation.

Two closed forms with homogeneous Dirichlet data on (0, 1) ship with the
library: a Fourier series for the initial profile sin(pi x), and a rational
closed form with a free parameter sigma > 1.  This script evaluates both,
prints sample profiles, and validates each against the PDE itself with the
finite-difference residual check.
"""

import numpy as np

from wgburgers import WoodSolution, fourier_solution_for, pde_residual

# --- series solution -------------------------------------------------------
nu = 0.1
series = fourier_solution_for(nu, t_min=0.1)
print(f"series solution at nu={nu}: {series.n_terms} terms, a0 = {series.a0:.12f}")

xs = np.round(np.arange(1, 10) * 0.1, 1)
print("\nprofile at t = 0.1:")
for x, u in zip(xs, series(xs, 0.1)):
    print(f"  u({x:.1f}) = {u:.5f}")

# --- rational closed form ----------------------------------------------------
wood = WoodSolution(nu=0.1, sigma=2.0)
print("\nclosed form at sigma=2, nu=0.1:")
for t in (0.0, 0.5, 1.0):
    mid = wood(0.5, t)
    print(f"  u(0.5, {t:.1f}) = {mid:.6f}")

# --- cross-validation against the PDE ---------------------------------------
x_grid = np.linspace(0.05, 0.95, 19)
t_grid = np.linspace(0.1, 1.0, 10)
print("\nmax |u_t + u u_x - nu u_xx| by central differences (delta = 1e-4):")
print(f"  closed form: {pde_residual(wood, 0.1, x_grid, t_grid):.2e}")
print(f"  series:      {pde_residual(series, 0.1, x_grid, t_grid):.2e}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    fine = np.linspace(0, 1, 201)
    for t in (0.1, 0.5, 1.0, 2.0):
        ax.plot(fine, series(fine, t), label=f"t = {t}")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.set_title(f"series solution, nu = {nu}")
    ax.legend()
    fig.tight_layout()
    fig.savefig("exact_solutions.png", dpi=120)
    print("\nwrote exact_solutions.png")
except ImportError:
    print("\nmatplotlib not available; skipping the plot")
