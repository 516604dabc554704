import json
import subprocess
import sys

import numpy as np
import pytest

from qapsdr import (
    SweepConfig,
    SolverSettings,
    brute_force_qap,
    gen_diag_gaussian,
    instance_from_dict,
    instance_to_dict,
    read_csv,
)
from qapsdr.cli import main
from qapsdr.harness import CSV_HEADER


def _write_instance(tmp_path, name="inst.json", n=4, sigma=0.0, seed=3):
    inst = gen_diag_gaussian(n, list(range(1, n + 1)), sigma, seed)
    path = tmp_path / name
    path.write_text(json.dumps(instance_to_dict(inst)))
    return path, inst


def _run(capsys, argv):
    rc = main(argv)
    return rc, capsys.readouterr()


# --------------------------------------------------------------------- gen

def test_gen_writes_parseable_instance(capsys):
    rc, out = _run(capsys, ["gen", "--n", "4", "--sigma", "0.2", "--seed", "5"])
    assert rc == 0
    inst = instance_from_dict(json.loads(out.out))
    assert inst.n == 4
    assert inst.model.sigma == 0.2
    assert inst.model.kind == "diag_gaussian"


def test_gen_profile_and_output_file(tmp_path, capsys):
    dest = tmp_path / "inst.json"
    rc, out = _run(capsys, [
        "gen", "--n", "3", "--profile", "2,4,9", "--sigma", "0", "-o", str(dest),
    ])
    assert rc == 0
    assert out.out == ""
    inst = instance_from_dict(json.loads(dest.read_text()))
    assert sorted(np.linalg.eigvalsh(inst.A).round(9)) == [2.0, 4.0, 9.0]


def test_gen_is_deterministic(capsys):
    args = ["gen", "--n", "5", "--sigma", "0.3", "--seed", "11"]
    rc1, out1 = _run(capsys, args)
    rc2, out2 = _run(capsys, args)
    assert rc1 == rc2 == 0
    assert out1.out == out2.out


# ------------------------------------------------------------------- solve

def test_solve_noise_free_recovers_truth(tmp_path, capsys):
    path, inst = _write_instance(tmp_path)
    rc, out = _run(capsys, ["solve", str(path)])
    assert rc == 0
    payload = json.loads(out.out)
    assert payload["status"] == "Solved"
    assert payload["exact"] is True
    assert payload["corr"] >= 1.0 - 1e-6
    assert payload["rounded_sigma"] == list(inst.truth.sigma)
    assert payload["rounded_objective"] == pytest.approx(0.0, abs=1e-9)


def test_solve_bordered_variant(tmp_path, capsys):
    path, _ = _write_instance(tmp_path, sigma=0.05, seed=8)
    rc, out = _run(capsys, ["solve", str(path), "--variant", "II", "--tol", "1e-6"])
    assert rc == 0
    payload = json.loads(out.out)
    assert payload["status"] == "Solved"
    assert payload["exact"] is True


def test_solve_iteration_cap_reports_status(tmp_path, capsys):
    # stopping early is telemetry, not an error; the premature iterate's
    # overlap may even sit outside [0, 1], which simply reads as not exact
    path, _ = _write_instance(tmp_path)
    rc, out = _run(capsys, ["solve", str(path), "--max-iters", "30"])
    assert rc == 0
    payload = json.loads(out.out)
    assert payload["status"] == "MaxIters"
    assert payload["iterations"] == 30
    assert payload["exact"] is False


def test_solve_numerical_failure_exit_code(tmp_path, capsys):
    # entries near 1e160 overflow when the cost is squared; the solver
    # flags the run instead of crashing and the CLI maps that to 3
    path, inst = _write_instance(tmp_path)
    doc = json.loads(path.read_text())
    doc["A"] = (1e160 * np.asarray(doc["A"])).tolist()
    doc["C"] = (1e160 * np.asarray(doc["C"])).tolist()
    path.write_text(json.dumps(doc))
    with np.errstate(all="ignore"):
        rc, out = _run(capsys, ["solve", str(path)])
    assert rc == 3
    assert json.loads(out.out)["status"] == "NumericalFailure"


# ----------------------------------------------------------------- certify

def test_certify_both_variants(tmp_path, capsys):
    path, _ = _write_instance(tmp_path, sigma=0.01, seed=7)
    rc, out = _run(capsys, ["certify", str(path)])
    assert rc == 0
    one = json.loads(out.out)
    assert one["condition"]["holds"] is True
    assert one["kkt"]["passes"] is True
    assert one["kkt"]["variant"] == "I"
    assert "t_prime" not in one

    rc, out = _run(capsys, ["certify", str(path), "--variant", "II"])
    assert rc == 0
    two = json.loads(out.out)
    assert two["kkt"]["passes"] is True
    assert two["kkt"]["variant"] == "II"
    assert two["t_prime"] > 0.0
    # the SDR I blocks are shared, so the scalar duals agree
    assert two["t"] == one["t"]
    assert two["c"] == one["c"]


def test_certify_rejects_bad_shift(tmp_path, capsys):
    path, _ = _write_instance(tmp_path)
    rc, out = _run(capsys, ["certify", str(path), "--t", "0"])
    assert rc == 2
    assert "error" in out.err


def test_certify_window_violation_exit_code(tmp_path, capsys):
    path, _ = _write_instance(tmp_path)
    rc, out = _run(capsys, ["certify", str(path), "--variant", "II",
                            "--t-prime", "1e9"])
    assert rc == 2


# ------------------------------------------------------------------ oracle

def test_oracle_matches_library_brute_force(tmp_path, capsys):
    path, inst = _write_instance(tmp_path, sigma=0.4, seed=2)
    rc, out = _run(capsys, ["oracle", str(path)])
    assert rc == 0
    payload = json.loads(out.out)
    perm, value = brute_force_qap(inst.A, inst.C)
    assert payload["sigma"] == list(perm.sigma)
    assert payload["objective"] == pytest.approx(value, abs=1e-12)


def test_oracle_refuses_large_instances(tmp_path, capsys):
    path, _ = _write_instance(tmp_path, n=9)
    rc, out = _run(capsys, ["oracle", str(path)])
    assert rc == 2


# ----------------------------------------------------------- sweep and plot

def _sweep_config(tmp_path, **kw):
    cfg = SweepConfig(
        model="diag_gaussian",
        sigma_grid=(0.0, 0.4),
        trials_per_sigma=2,
        n=4,
        solver=SolverSettings(tol_primal=1e-6, tol_dual=1e-6, max_iters=5000),
        master_seed=1,
        **kw,
    )
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg.to_dict()))
    return path


def test_sweep_writes_csv_and_plot(tmp_path, capsys):
    cfg_path = _sweep_config(tmp_path)
    csv_path = tmp_path / "out.csv"
    svg_path = tmp_path / "out.svg"
    rc, out = _run(capsys, [
        "sweep", str(cfg_path), "-o", str(csv_path), "--plot", str(svg_path),
    ])
    assert rc == 0
    records = read_csv(str(csv_path))
    assert len(records) == 4
    assert all(r.exact for r in records if r.sigma == 0.0)
    assert svg_path.read_text().startswith("<svg ")


def test_sweep_progress_lines_on_stderr(tmp_path, capsys):
    cfg_path = _sweep_config(tmp_path)
    csv_path = tmp_path / "out.csv"
    rc, out = _run(capsys, ["sweep", str(cfg_path), "-o", str(csv_path),
                            "--progress"])
    assert rc == 0
    assert out.err.count("sigma=") == 4


def test_sweep_output_path_from_config(tmp_path, capsys):
    target = tmp_path / "from_config.csv"
    cfg_path = _sweep_config(tmp_path, output_path=str(target))
    rc, _ = _run(capsys, ["sweep", str(cfg_path)])
    assert rc == 0
    assert target.read_text().splitlines()[0] == CSV_HEADER


def test_sweep_without_any_output_path_fails(tmp_path, capsys):
    cfg_path = _sweep_config(tmp_path)
    rc, out = _run(capsys, ["sweep", str(cfg_path)])
    assert rc == 2
    assert "output path" in out.err


def test_plot_default_name_swaps_extension(tmp_path, capsys):
    cfg_path = _sweep_config(tmp_path)
    csv_path = tmp_path / "curve.csv"
    assert main(["sweep", str(cfg_path), "-o", str(csv_path)]) == 0
    capsys.readouterr()
    rc, _ = _run(capsys, ["plot", str(csv_path)])
    assert rc == 0
    assert (tmp_path / "curve.svg").read_text().startswith("<svg ")


# -------------------------------------------------------------- exit codes

def test_missing_file_exits_2(capsys):
    rc, out = _run(capsys, ["solve", "does-not-exist.json"])
    assert rc == 2
    assert "error" in out.err


def test_malformed_json_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    rc, _ = _run(capsys, ["solve", str(path)])
    assert rc == 2


def test_bad_config_model_exits_2(tmp_path, capsys):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({"model": "banana"}))
    rc, _ = _run(capsys, ["sweep", str(cfg_path), "-o", str(tmp_path / "x.csv")])
    assert rc == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "qapsdr", "gen", "--n", "3", "--sigma", "0"],
        capture_output=True, text=True,
    )
    assert out.returncode == 0
    assert instance_from_dict(json.loads(out.stdout)).n == 3
