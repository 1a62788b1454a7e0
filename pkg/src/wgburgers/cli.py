"""Batch experiment runner: ad-hoc solves, solver-vs-reference tables, rate studies.

Subcommands:

* ``solve``    -- run one configuration from a flat key = value config file.
* ``table``    -- built-in comparison tables of node samples against the
                  series reference solution (``--which 1`` sweeps the space
                  parameters, ``--which 2`` sweeps viscosity and time).
* ``converge`` -- mesh-refinement study against the closed-form solution.

Outputs are CSV (``#``-prefixed header comments, 17-significant-digit floats,
LF line endings) or JSON lines with the same header as a first object.
Sampled solution values use the stored node value when the sample point lies
on a mesh node (within 1e-12) and the interior polynomial otherwise; the
choice is recorded in every output header.
"""

import argparse
import io
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .exact import WoodSolution, fourier_solution_for
from .errors import convergence_study, rate_study_tau
from .mesh import Mesh
from .solver import PicardNonconvergenceError, SolverConfig, solve_trajectory
from .weakspace import NODE_MATCH_TOL, WeakFunction

SAMPLING_POLICY = "node value on mesh nodes (tol 1e-12), interior polynomial elsewhere"

TABLE_SPACE_SWEEP = {
    "combos": ((0, 80), (0, 128), (1, 80), (1, 128)),  # (k, n_elements)
    "nu": 0.1,
    "tau": 1e-4,
    "t": 0.1,
    "x": tuple(round(0.1 * j, 1) for j in range(1, 10)),
}
TABLE_VISCOSITY_SWEEP = {
    "k": 1,
    "n_elements": 80,
    "nus": (0.1, 0.01),
    "tau": 1e-4,
    "times": (0.4, 0.6, 0.8, 1.0),
    "x": (0.25, 0.5, 0.75),
}


class ConfigError(ValueError):
    """Malformed config file or inconsistent option values."""


@dataclass
class RunConfig:
    """Parsed form of a solve run: discretization plus problem selection and output."""

    problem: str = "example1"
    g: str | None = None
    k: int = 1
    n_elements: int = 80
    nu: float = 0.1
    tau: float = 1e-4
    t_final: float = 0.1
    sigma: float = 2.0
    picard_tol: float = 1e-12
    picard_max: int = 50
    quad_assembly: int | None = None
    quad_error: int | None = None
    sample_points: tuple = ()
    dump: str = "none"
    seed: int | None = None
    out: str | None = None
    format: str = "csv"

    def solver_config(self) -> SolverConfig:
        try:
            return SolverConfig(
                k=self.k,
                n_elements=self.n_elements,
                nu=self.nu,
                tau=self.tau,
                t_final=self.t_final,
                picard_tol=self.picard_tol,
                picard_max=self.picard_max,
                quad_assembly=self.quad_assembly,
                quad_error=self.quad_error,
            )
        except ValueError as err:
            raise ConfigError(str(err)) from None

    def initial_datum(self):
        if self.problem == "example1":
            return lambda x: np.sin(np.pi * np.asarray(x, dtype=float))
        if self.problem == "example2":
            return WoodSolution(nu=self.nu, sigma=self.sigma).initial
        if self.problem == "custom":
            if not self.g:
                raise ConfigError("problem = custom requires a g = <expression in x> entry")
            return _compile_datum(self.g)
        raise ConfigError(f"unknown problem {self.problem!r}")


_DATUM_NAMESPACE = {
    "np": np,
    "pi": np.pi,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}


def _compile_datum(expression: str):
    try:
        code = compile(expression, "<g>", "eval")
    except SyntaxError as err:
        raise ConfigError(f"cannot parse g expression: {err}") from None

    def g(x):
        x = np.asarray(x, dtype=float)
        value = eval(code, {"__builtins__": {}}, dict(_DATUM_NAMESPACE, x=x))
        return np.broadcast_to(np.asarray(value, dtype=float), x.shape)

    return g


_CONVERTERS = {
    "problem": str,
    "g": str,
    "k": int,
    "n_elements": int,
    "nu": float,
    "tau": float,
    "t_final": float,
    "sigma": float,
    "picard_tol": float,
    "picard_max": int,
    "quad_assembly": int,
    "quad_error": int,
    "sample_points": lambda s: tuple(float(v) for v in s.split(",") if v.strip()),
    "dump": str,
    "seed": int,
    "out": str,
    "format": str,
}


def parse_config_file(path: str) -> RunConfig:
    """Read a flat ``key = value`` file; '#' starts a comment, blank lines are skipped."""
    values = {}
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _CONVERTERS[key](value)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {err}") from None
    config = RunConfig(**values)
    if config.dump not in ("none", "final", "all"):
        raise ConfigError(f"dump must be none, final, or all, got {config.dump!r}")
    if config.format not in ("csv", "jsonl"):
        raise ConfigError(f"format must be csv or jsonl, got {config.format!r}")
    return config


def sample_solution_value(state: WeakFunction, x: float) -> float:
    """Sample a state at x per the documented policy (node DOF on nodes, else interior)."""
    nearest = int(np.argmin(np.abs(state.mesh.nodes - x)))
    if abs(float(state.mesh.nodes[nearest]) - x) <= NODE_MATCH_TOL:
        return state.evaluate(float(state.mesh.nodes[nearest]), mode="node")
    return state.evaluate(x, mode="interior")


def _format_value(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return "nan" if value != value else f"{value:.17g}"
    return str(value)


def write_output(destination, fmt: str, meta: dict, columns, rows):
    """Write rows as CSV with a commented header, or as JSON lines."""
    buffer = io.StringIO()
    if fmt == "csv":
        for key, value in meta.items():
            buffer.write(f"# {key} = {_format_value(value)}\n")
        buffer.write(",".join(columns) + "\n")
        for row in rows:
            buffer.write(",".join(_format_value(v) for v in row) + "\n")
    elif fmt == "jsonl":
        buffer.write(json.dumps({"header": meta}) + "\n")
        for row in rows:
            record = {c: (None if v == "" else v) for c, v in zip(columns, row)}
            buffer.write(json.dumps(record) + "\n")
    else:
        raise ConfigError(f"unknown output format {fmt!r}")
    text = buffer.getvalue()
    if destination is None:
        sys.stdout.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)


def _base_meta(command: str, config: SolverConfig | None = None) -> dict:
    meta = {"command": command, "sampling": SAMPLING_POLICY}
    if config is not None:
        meta.update(
            k=config.k,
            n_elements=config.n_elements,
            nu=config.nu,
            tau=config.tau,
            t_final=config.t_final,
            picard_tol=config.picard_tol,
            picard_max=config.picard_max,
            quad_assembly=config.quad_assembly or 2 * config.k + 2,
            quad_error=config.error_rule_points,
        )
    return meta


def cmd_solve(args) -> int:
    run = parse_config_file(args.config)
    if args.out is not None:
        run = replace(run, out=args.out)
    if args.format is not None:
        run = replace(run, format=args.format)
    config = run.solver_config()
    g = run.initial_datum()

    started = time.perf_counter()
    store = "all" if run.dump == "all" else "final"
    trajectory = solve_trajectory(g, config, store=store)
    elapsed = time.perf_counter() - started
    print(f"solve finished in {elapsed:.2f} s", file=sys.stderr)

    meta = _base_meta("solve", config)
    meta.update(problem=run.problem, sigma=run.sigma, dump=run.dump, seed=run.seed)
    if run.problem == "custom":
        meta["g"] = run.g

    columns = ("record", "time", "index", "x", "value")
    rows = [
        ("steps", "", "", "", config.n_steps),
        ("final_interior_energy", config.t_final, "", "", float(trajectory.interior_energy[-1])),
        ("final_deriv_energy", config.t_final, "", "", float(trajectory.deriv_energy[-1])),
        ("picard_total", "", "", "", int(trajectory.picard_iters.sum())),
        ("picard_max_per_step", "", "", "", int(trajectory.picard_iters.max(initial=0))),
    ]
    final = trajectory.states[-1]
    for x in run.sample_points:
        rows.append(("sample", config.t_final, "", x, sample_solution_value(final, float(x))))
    if run.dump != "none":
        dump_indices = (
            range(len(trajectory.states)) if run.dump == "all" else (len(trajectory.states) - 1,)
        )
        for index in dump_indices:
            state = trajectory.states[index]
            t = float(trajectory.times[-1 if run.dump == "final" else index])
            for node, value in enumerate(state.node_values):
                rows.append(("node", t, node, float(state.mesh.nodes[node]), float(value)))
            for flat, value in enumerate(state.interior.ravel()):
                rows.append(("coef", t, flat, "", float(value)))
    write_output(run.out, run.format, meta, columns, rows)
    return 0


def _space_sweep_rows(threads: int):
    spec = TABLE_SPACE_SWEEP
    reference = fourier_solution_for(spec["nu"], t_min=spec["t"])

    def run_one(combo):
        k, n_elements = combo
        config = SolverConfig(
            k=k, n_elements=n_elements, nu=spec["nu"], tau=spec["tau"], t_final=spec["t"]
        )
        trajectory = solve_trajectory(
            lambda x: np.sin(np.pi * np.asarray(x, dtype=float)), config, store="final"
        )
        return trajectory.states[-1]

    states = _run_parallel(run_one, spec["combos"], threads)
    rows = []
    for (k, n_elements), state in zip(spec["combos"], states):
        for x in spec["x"]:
            numerical = sample_solution_value(state, x)
            exact = reference(x, spec["t"])
            rows.append(
                (k, n_elements, spec["nu"], x, spec["t"], numerical, exact, abs(numerical - exact))
            )
    return rows


def _viscosity_sweep_rows(threads: int):
    spec = TABLE_VISCOSITY_SWEEP

    def run_one(nu):
        config = SolverConfig(
            k=spec["k"],
            n_elements=spec["n_elements"],
            nu=nu,
            tau=spec["tau"],
            t_final=spec["times"][-1],
        )
        trajectory = solve_trajectory(
            lambda x: np.sin(np.pi * np.asarray(x, dtype=float)), config, store="all"
        )
        return trajectory

    trajectories = _run_parallel(run_one, spec["nus"], threads)
    rows = []
    for nu, trajectory in zip(spec["nus"], trajectories):
        reference = fourier_solution_for(nu, t_min=spec["times"][0])
        for t in spec["times"]:
            state = trajectory.state_at(t)
            for x in spec["x"]:
                numerical = sample_solution_value(state, x)
                exact = reference(x, t)
                rows.append(
                    (
                        spec["k"],
                        spec["n_elements"],
                        nu,
                        x,
                        t,
                        numerical,
                        exact,
                        abs(numerical - exact),
                    )
                )
    return rows


def _run_parallel(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def cmd_table(args) -> int:
    which = int(args.which)
    meta = {"command": f"table --which {which}", "sampling": SAMPLING_POLICY}
    if which == 1:
        spec = TABLE_SPACE_SWEEP
        meta.update(
            combos=";".join(f"k={k},N={n}" for k, n in spec["combos"]),
            nu=spec["nu"],
            tau=spec["tau"],
            t=spec["t"],
        )
        rows = _space_sweep_rows(args.threads)
    else:
        spec = TABLE_VISCOSITY_SWEEP
        meta.update(
            k=spec["k"],
            n_elements=spec["n_elements"],
            nus=";".join(str(nu) for nu in spec["nus"]),
            tau=spec["tau"],
            times=";".join(str(t) for t in spec["times"]),
        )
        rows = _viscosity_sweep_rows(args.threads)
    columns = ("k", "n_elements", "nu", "x", "t", "numerical", "exact", "abs_diff")
    write_output(args.out, args.format or "csv", meta, columns, rows)
    return 0


def cmd_converge(args) -> int:
    mesh_sizes = [int(v) for v in args.meshes.split(",") if v.strip()]
    problem = WoodSolution(nu=args.nu, sigma=args.sigma)
    table = convergence_study(
        problem,
        k=args.k,
        nu=args.nu,
        t_final=args.t_final,
        mesh_sizes=mesh_sizes,
        tau=args.tau,
        threads=args.threads,
    )
    meta = _base_meta("converge")
    meta.update(
        k=args.k,
        nu=args.nu,
        sigma=args.sigma,
        t_final=args.t_final,
        meshes=",".join(str(n) for n in mesh_sizes),
        tau="auto (min(1e-4, h^(k+1)/20))" if args.tau is None else args.tau,
        least_squares_l2_slope=table.l2_slope,
        least_squares_h1_slope=table.h1_slope,
    )
    columns = ("n_elements", "h", "l2_error", "h1_error", "l2_rate", "h1_rate")
    rows = []
    for i, n in enumerate(table.n_elements):
        rows.append(
            (
                n,
                float(table.h[i]),
                float(table.l2_errors[i]),
                float(table.h1_errors[i]),
                _rate_cell(table.l2_rates, i),
                _rate_cell(table.h1_rates, i),
            )
        )
    rows.append(("least_squares", "", "", "", table.l2_slope, table.h1_slope))
    write_output(args.out, args.format or "csv", meta, columns, rows)
    return 0


def _rate_cell(rates, index):
    if index == 0 or not np.isfinite(rates[index - 1]):
        return ""
    return float(rates[index - 1])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wgburgers",
        description="Weak Galerkin solver for the 1D viscous Burgers equation",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    solve = sub.add_parser("solve", help="run one configuration from a config file")
    solve.add_argument("--config", required=True, help="flat key = value config file")
    solve.add_argument("--out", default=None, help="output path (default stdout)")
    solve.add_argument("--format", choices=("csv", "jsonl"), default=None)
    solve.add_argument("--threads", type=int, default=1)
    solve.set_defaults(func=cmd_solve)

    table = sub.add_parser("table", help="built-in solver-vs-reference comparison tables")
    table.add_argument("--which", required=True, choices=("1", "2"))
    table.add_argument("--out", default=None)
    table.add_argument("--format", choices=("csv", "jsonl"), default=None)
    table.add_argument("--threads", type=int, default=1)
    table.set_defaults(func=cmd_table)

    converge = sub.add_parser("converge", help="mesh-refinement rate study")
    converge.add_argument("--k", type=int, default=0)
    converge.add_argument("--nu", type=float, default=0.1)
    converge.add_argument("--sigma", type=float, default=2.0)
    converge.add_argument("--meshes", default="8,16,32,64,128")
    converge.add_argument("--t-final", dest="t_final", type=float, default=1.0)
    converge.add_argument("--tau", type=float, default=None, help="fixed step (default: rate rule)")
    converge.add_argument("--out", default=None)
    converge.add_argument("--format", choices=("csv", "jsonl"), default=None)
    converge.add_argument("--threads", type=int, default=1)
    converge.set_defaults(func=cmd_converge)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except PicardNonconvergenceError as err:
        print(f"solver failed: {err}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
