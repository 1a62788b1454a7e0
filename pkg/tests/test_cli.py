"""Command-line runner: config parsing, output formats, and the three subcommands."""

import json

import numpy as np
import pytest

from wgburgers import WeakFunction, build_uniform_mesh, fourier_solution_for
from wgburgers.cli import (
    ConfigError,
    main,
    parse_config_file,
    sample_solution_value,
)


def write_config(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def read_csv(path):
    header, columns, rows = [], None, []
    with open(path, encoding="utf-8", newline="") as handle:
        for line in handle:
            assert line.endswith("\n") and not line.endswith("\r\n")
            if line.startswith("#"):
                header.append(line.rstrip("\n"))
            elif columns is None:
                columns = line.rstrip("\n").split(",")
            else:
                rows.append(line.rstrip("\n").split(","))
    return header, columns, rows


# --- config parsing ---------------------------------------------------------


def test_parse_config_round_trip(tmp_path):
    path = write_config(
        tmp_path,
        """
        # a comment line
        problem = example2
        k = 1
        n_elements = 16
        nu = 0.05
        tau = 1e-3          # inline comment
        t_final = 0.01
        sigma = 3.0
        sample_points = 0.25, 0.5, 0.75
        seed = 42
        """,
    )
    config = parse_config_file(path)
    assert config.problem == "example2"
    assert config.k == 1 and config.n_elements == 16
    assert config.sigma == 3.0
    assert config.sample_points == (0.25, 0.5, 0.75)
    assert config.seed == 42


def test_parse_config_reports_line_numbers(tmp_path):
    path = write_config(tmp_path, "k = 1\nwhat_is_this = 3\n")
    with pytest.raises(ConfigError, match=":2:"):
        parse_config_file(path)
    path = write_config(tmp_path, "k = banana\n")
    with pytest.raises(ConfigError, match=":1:"):
        parse_config_file(path)
    path = write_config(tmp_path, "just some words\n")
    with pytest.raises(ConfigError, match="key = value"):
        parse_config_file(path)


def test_missing_config_file_is_exit_code_2(tmp_path, capsys):
    assert main(["solve", "--config", str(tmp_path / "nope.cfg")]) == 2
    assert "config error" in capsys.readouterr().err


# --- sampling policy ----------------------------------------------------------


def test_sample_value_uses_node_dof_on_nodes():
    mesh = build_uniform_mesh(4)
    interior = np.full((4, 1), 7.0)
    nodes = np.array([0.0, 1.0, 2.0, 3.0, 0.0])
    state = WeakFunction(mesh, 0, interior, nodes)
    assert sample_solution_value(state, 0.25) == 1.0  # node DOF, not interior 7.0
    assert sample_solution_value(state, 0.3) == 7.0  # interior polynomial


# --- solve ----------------------------------------------------------------------


def test_solve_zero_custom_problem(tmp_path, capsys):
    config = write_config(
        tmp_path,
        "problem = custom\ng = 0.0 * x\nk = 0\nn_elements = 8\nnu = 0.1\n"
        "tau = 1e-3\nt_final = 5e-3\nsample_points = 0.25,0.5\n",
    )
    out = tmp_path / "zero.csv"
    assert main(["solve", "--config", config, "--out", str(out)]) == 0
    header, columns, rows = read_csv(out)
    assert columns == ["record", "time", "index", "x", "value"]
    by_record = {}
    for row in rows:
        by_record.setdefault(row[0], []).append(row)
    assert float(by_record["final_interior_energy"][0][4]) == 0.0
    assert all(float(r[4]) == 0.0 for r in by_record["sample"])


def test_solve_outputs_are_deterministic(tmp_path):
    config = write_config(
        tmp_path,
        "problem = example1\nk = 1\nn_elements = 8\nnu = 0.1\ntau = 1e-3\n"
        "t_final = 0.01\nsample_points = 0.5\ndump = final\n",
    )
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["solve", "--config", config, "--out", str(out_a)]) == 0
    assert main(["solve", "--config", config, "--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_solve_csv_values_round_trip(tmp_path):
    config = write_config(
        tmp_path,
        "problem = example1\nk = 1\nn_elements = 8\nnu = 0.1\ntau = 1e-3\n"
        "t_final = 0.01\nsample_points = 0.5\n",
    )
    out = tmp_path / "run.csv"
    assert main(["solve", "--config", config, "--out", str(out)]) == 0
    header, columns, rows = read_csv(out)
    assert any(line.startswith("# sampling = ") for line in header)
    assert any("picard_tol" in line for line in header)
    sample_rows = [r for r in rows if r[0] == "sample"]
    assert len(sample_rows) == 1
    # 17 significant digits round-trip bit-exactly
    from wgburgers import SolverConfig, solve_trajectory
    from wgburgers.cli import sample_solution_value as sample

    cfg = SolverConfig(k=1, n_elements=8, nu=0.1, tau=1e-3, t_final=0.01)
    trajectory = solve_trajectory(lambda x: np.sin(np.pi * np.asarray(x)), cfg, store="final")
    expected = sample(trajectory.states[-1], 0.5)
    assert float(sample_rows[0][4]) == expected


def test_solve_jsonl_output(tmp_path):
    config = write_config(
        tmp_path,
        "problem = example1\nk = 0\nn_elements = 8\nnu = 0.1\ntau = 1e-3\n"
        "t_final = 5e-3\nformat = jsonl\nsample_points = 0.5\n",
    )
    out = tmp_path / "run.jsonl"
    assert main(["solve", "--config", config, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    head = json.loads(lines[0])
    assert "header" in head and head["header"]["n_elements"] == 8
    records = [json.loads(line) for line in lines[1:]]
    assert any(r["record"] == "sample" for r in records)


def test_solve_state_dump(tmp_path):
    config = write_config(
        tmp_path,
        "problem = example1\nk = 1\nn_elements = 4\nnu = 0.1\ntau = 1e-3\n"
        "t_final = 2e-3\ndump = all\n",
    )
    out = tmp_path / "dump.csv"
    assert main(["solve", "--config", config, "--out", str(out)]) == 0
    _, _, rows = read_csv(out)
    node_rows = [r for r in rows if r[0] == "node"]
    coef_rows = [r for r in rows if r[0] == "coef"]
    assert len(node_rows) == 3 * 5  # three stored times, five nodes
    assert len(coef_rows) == 3 * 8  # three stored times, 4 elements x 2 coefficients


def test_solve_failure_exit_code(tmp_path, capsys):
    config = write_config(
        tmp_path,
        "problem = example1\nk = 0\nn_elements = 8\nnu = 0.05\ntau = 0.5\n"
        "t_final = 1.0\npicard_max = 1\npicard_tol = 1e-14\n",
    )
    assert main(["solve", "--config", config]) == 1
    assert "step 1" in capsys.readouterr().err


# --- table ---------------------------------------------------------------------


def test_table_space_sweep(tmp_path):
    out = tmp_path / "table1.csv"
    assert main(["table", "--which", "1", "--out", str(out), "--threads", "4"]) == 0
    header, columns, rows = read_csv(out)
    assert columns == ["k", "n_elements", "nu", "x", "t", "numerical", "exact", "abs_diff"]
    assert len(rows) == 4 * 9
    lookup = {(int(r[0]), int(r[1]), float(r[3])): (float(r[5]), float(r[6])) for r in rows}
    numerical, exact = lookup[(1, 128, 0.5)]
    assert exact == pytest.approx(0.87728, abs=5e-6)
    assert numerical == pytest.approx(0.87728, abs=1e-4)
    # difference column is consistent
    for r in rows:
        assert float(r[7]) == pytest.approx(abs(float(r[5]) - float(r[6])), abs=1e-17)


def test_table_viscosity_sweep(tmp_path):
    out = tmp_path / "table2.csv"
    assert main(["table", "--which", "2", "--out", str(out), "--threads", "2"]) == 0
    _, columns, rows = read_csv(out)
    assert len(rows) == 2 * 4 * 3
    lookup = {(float(r[2]), float(r[3]), float(r[4])): (float(r[5]), float(r[6])) for r in rows}
    # spot values frozen from the run plus the series reference column
    numerical, exact = lookup[(0.1, 0.5, 0.6)]
    assert numerical == pytest.approx(0.44723, abs=1e-4)
    assert exact == pytest.approx(0.44721, abs=5e-6)
    numerical, exact = lookup[(0.01, 0.75, 1.0)]
    assert numerical == pytest.approx(0.55609, abs=1e-4)
    assert exact == pytest.approx(0.55605, abs=5e-6)
    numerical, exact = lookup[(0.01, 0.75, 0.4)]
    assert exact == pytest.approx(0.91026, abs=5e-6)
    numerical, exact = lookup[(0.1, 0.25, 1.0)]
    assert exact == pytest.approx(0.16256, abs=5e-6)


def test_table_requires_which(capsys):
    with pytest.raises(SystemExit) as info:
        main(["table"])
    assert info.value.code == 2


# --- converge ---------------------------------------------------------------------


def test_converge_command(tmp_path):
    out = tmp_path / "rates.csv"
    code = main(
        [
            "converge",
            "--k",
            "0",
            "--nu",
            "0.1",
            "--meshes",
            "8,16",
            "--t-final",
            "0.1",
            "--tau",
            "1e-3",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    header, columns, rows = read_csv(out)
    assert columns == ["n_elements", "h", "l2_error", "h1_error", "l2_rate", "h1_rate"]
    assert rows[0][4] == ""  # no rate on the first mesh
    assert float(rows[1][4]) > 0.5
    assert rows[-1][0] == "least_squares"
    assert any("sigma" in line for line in header)


def test_converge_single_mesh(tmp_path):
    out = tmp_path / "single.csv"
    assert main(
        ["converge", "--k", "0", "--nu", "0.1", "--meshes", "8", "--t-final", "0.05",
         "--tau", "1e-3", "--out", str(out)]
    ) == 0
    _, _, rows = read_csv(out)
    assert rows[0][4] == "" and rows[0][5] == ""
    assert rows[-1][0] == "least_squares" and rows[-1][4] == "nan"
