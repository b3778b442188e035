import csv
import json

import pytest
from typer.testing import CliRunner

from app import app
from pfunction_lab.errors import ShootingError

runner = CliRunner()


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in ("PFLAB_H", "PFLAB_BETAS", "PFLAB_SCHEDULE", "PFLAB_DOMAIN", "PFLAB_PROBLEM", "PFLAB_OUT_DIR"):
        monkeypatch.delenv(key, raising=False)


def test_bounds_command(tmp_path):
    result = runner.invoke(app, ["bounds", "--alpha", "0.2,0.5", "--out-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert "outside validity region" in result.output
    payload = json.loads((tmp_path / "bounds.json").read_text())
    assert payload["bounds"][1]["euclid"] == pytest.approx(0.17965, abs=1e-4)
    assert payload["bounds"][1]["lorentz"] is None
    with open(tmp_path / "bounds.csv", newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert [r["alpha"] for r in rows] == ["0.2", "0.5"]
    assert (tmp_path / "run_config.txt").exists()


def test_bounds_from_run_file(tmp_path):
    run_file = tmp_path / "run.txt"
    run_file.write_text(f"alphas = 2\nout_dir = {tmp_path / 'out'}\n")
    result = runner.invoke(app, ["bounds", "--config", str(run_file)])
    assert result.exit_code == 0, result.output
    payload = json.loads((tmp_path / "out" / "bounds.json").read_text())
    assert payload["bounds"][0]["euclid"] == pytest.approx(1.0)


def test_radial_poisson(tmp_path):
    result = runner.invoke(app, ["radial", "--problem", "poisson", "--R", "1", "--out-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    with open(tmp_path / "profile.csv", newline="") as handle:
        reader = csv.reader(handle)
        assert next(reader) == ["r", "phi", "phi_prime", "phi_second"]
    report = json.loads((tmp_path / "radial_report.json").read_text())
    assert report["pass"] is True
    assert report["sections"]["theorem3"]["status"] == "not applicable"


def test_radial_lorentzian_existence_failure(tmp_path):
    result = runner.invoke(app, ["radial", "--problem", "lorentzian", "--R", "5", "--out-dir", str(tmp_path)])
    assert result.exit_code == 2, result.output
    failure = json.loads((tmp_path / "failure.json").read_text())
    assert failure["kind"] == "existence_failure"


@pytest.mark.parametrize(
    "args",
    [
        ["verify", "--domain", "square:R=1"],
        ["verify", "--beta", "3"],
        ["solve2d", "--domain", "disk:R=1", "--h", "0.5"],
        ["radial", "--problem", "euclidean", "--R", "1", "--h-r", "0.1"],
    ],
)
def test_config_errors_exit_3(tmp_path, args):
    result = runner.invoke(app, [*args, "--out-dir", str(tmp_path)])
    assert result.exit_code == 3, result.output
    assert "[ERROR]" in result.output


def test_solve2d_writes_artifacts(tmp_path):
    result = runner.invoke(
        app, ["solve2d", "--problem", "poisson", "--domain", "disk:R=1", "--h", "0.0625", "--out-dir", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    for name in ("grid.csv", "field.csv", "derived.csv", "summary.json", "solver_log.jsonl", "run_config.txt"):
        assert (tmp_path / name).exists(), name
    entries = [json.loads(line) for line in (tmp_path / "solver_log.jsonl").read_text().splitlines()]
    assert entries and set(entries[0]) == {"lambda", "iter", "residual_norm", "step_damping"}
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["u_min"] == pytest.approx(-0.25, abs=2e-3)


def test_verify_writes_report(tmp_path):
    result = runner.invoke(
        app,
        ["verify", "--problem", "euclidean", "--domain", "disk:R=1", "--h", "0.03125", "--beta", "1.5,2", "--out-dir", str(tmp_path)],
    )
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["pass"] is True
    assert {"theorem1", "theorem2[beta=1.5]", "theorem3", "upper_bound", "eq41_field", "boundary_identity", "v_equation"} <= set(report["sections"])
    assert report["sections"]["theorem3"]["pass"] is True
    assert report["sections"]["boundary_identity"]["order"] >= 0.8
    assert not (tmp_path / "failure.json").exists()


def test_verify_non_convergence_exits_2(tmp_path):
    run_file = tmp_path / "run.txt"
    run_file.write_text(f"newton_max_iter = 1\nh = 0.0625\nout_dir = {tmp_path / 'out'}\n")
    result = runner.invoke(app, ["verify", "--problem", "euclidean", "--domain", "disk:R=1", "--config", str(run_file)])
    assert result.exit_code == 2, result.output
    failure = json.loads((tmp_path / "out" / "failure.json").read_text())
    assert failure["kind"] == "non_convergence"


def test_verify_needs_planar_problem(tmp_path):
    run_file = tmp_path / "run.txt"
    run_file.write_text("n = 3\n")
    result = runner.invoke(app, ["verify", "--config", str(run_file), "--out-dir", str(tmp_path)])
    assert result.exit_code == 3, result.output
    assert "needs n = 2" in result.output


def test_solver_errors_write_failure_file(tmp_path, monkeypatch):
    def broken_shoot(*args, **kwargs):
        raise ShootingError("shooting map is not monotone in the bracket")

    monkeypatch.setattr("app.shoot", broken_shoot)
    result = runner.invoke(app, ["radial", "--problem", "poisson", "--out-dir", str(tmp_path)])
    assert result.exit_code == 2, result.output
    assert "ShootingError" in result.output
    failure = json.loads((tmp_path / "failure.json").read_text())
    assert failure["error"] == "ShootingError"
    assert failure["kind"] == "error"
    assert "monotone" in failure["message"]


def test_sweep_writes_ladder(tmp_path):
    result = runner.invoke(
        app,
        ["sweep", "--problem", "poisson", "--domain", "disk:R=1", "--ladder", "0.0625,0.03125", "--out-dir", str(tmp_path)],
    )
    assert result.exit_code in (0, 1), result.output
    payload = json.loads((tmp_path / "sweep.json").read_text())
    rungs = payload["rungs"]
    assert [r["h"] for r in rungs] == [0.0625, 0.03125]
    assert all(r["converged"] for r in rungs)
    assert "boundary_identity_max_factor" in rungs[1]
    assert (tmp_path / "report_h=0.03125.json").exists()
    assert (tmp_path / "sweep.csv").read_text().startswith("h,")
