import json
import os

import numpy as np
import pytest

import ssmselect as ss
from ssmselect.cli import main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_eig_three_mass(capsys):
    code, out, _ = run_cli(["eig", "--model", "three-mass", "--stdout"], capsys)
    assert code == 0
    rows = [ln for ln in out.splitlines() if ln and not ln.startswith("#")]
    assert rows[0] == "mode,omega,zeta"
    omegas = [float(r.split(",")[1]) for r in rows[1:]]
    assert omegas == pytest.approx([2.0, 3.0, 5.0])


def test_model_export_roundtrip(tmp_path, capsys):
    target = tmp_path / "three.model"
    code, out, _ = run_cli(["model", "--model", "three-mass", "--out", str(target)], capsys)
    assert code == 0
    system, forcing = ss.read_model_file(target)
    assert system.n == 3
    assert forcing is not None
    code, out, _ = run_cli(["eig", "--model-file", str(target), "--stdout"], capsys)
    assert code == 0


def test_missing_model_file_is_config_error(capsys):
    code, _, err = run_cli(["eig", "--model-file", "/nonexistent/path.model"], capsys)
    assert code == 2
    record = json.loads(err.strip())
    assert "/nonexistent/path.model" in record["error"]
    assert record["kind"] == "config"


def test_unknown_model_is_config_error(capsys):
    code, _, err = run_cli(["eig", "--model", "bogus"], capsys)
    assert code == 2
    assert "bogus" in json.loads(err.strip())["error"]


def test_ssm_blocks(capsys):
    code, out, _ = run_cli(
        ["ssm", "--model", "three-mass", "--masters", "1", "--stdout"], capsys
    )
    assert code == 0
    assert "W 2" in out and "W 3" in out
    block2 = out.split("W 2")[1].splitlines()[1:3]
    w2 = np.array([[float(v) for v in row.split(",")] for row in block2])
    assert w2[0, 0] == pytest.approx(0.0712, abs=5e-4)


def test_curvature_table_ranks(capsys):
    code, out, _ = run_cli(
        ["curvature", "--model", "three-mass", "--masters", "1", "--stdout"], capsys
    )
    assert code == 0
    rows = {int(r.split(",")[0]): r.split(",") for r in out.splitlines()
            if r and r[0].isdigit()}
    assert int(rows[3][3]) == 1  # mode 3 ranks first
    assert int(rows[2][3]) == 2


def test_select_three_mass(capsys):
    code, out, _ = run_cli(
        ["select", "--model", "three-mass", "--p", "0.15", "--N", "2", "--stdout"],
        capsys,
    )
    assert code == 0
    final = [ln for ln in out.splitlines() if ln.startswith("final_set")][0]
    assert final.split()[1] == "1,3"


def test_select_straight_beam_with_initial_override(capsys):
    code, out, _ = run_cli(
        ["select", "--model", "straight-beam", "--p", "0.05", "--N", "7",
         "--i0", "1:5", "--stdout"],
        capsys,
    )
    assert code == 0
    final = [ln for ln in out.splitlines() if ln.startswith("final_set")][0]
    assert final.split()[1] == "1,2,3,4,5,21,22"


def test_select_config_file_and_flag_precedence(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("model three-mass\np 0.5\nN 2\n")
    code, out, _ = run_cli(
        ["select", "--config", str(conf), "--p", "0.15", "--stdout"], capsys
    )
    assert code == 0
    # flag p=0.15 overrides file p=0.5; file supplies model and N
    final = [ln for ln in out.splitlines() if ln.startswith("final_set")][0]
    assert final.split()[1] == "1,3"


def test_frc_writes_deterministic_csv(tmp_path, capsys):
    args = ["frc", "--model", "three-mass", "--omega-min", "1.8", "--omega-max", "2.2",
            "--steps", "11", "--NH", "3", "--outdir", str(tmp_path)]
    code, out, _ = run_cli(args, capsys)
    assert code == 0
    path = tmp_path / "frc.csv"
    first = path.read_bytes()
    header = path.read_text().splitlines()[0]
    assert header.startswith("# ssmselect command=frc")
    assert "omega_min=1.8" in header
    code, _, _ = run_cli(args, capsys)
    assert path.read_bytes() == first


def test_frc_rom_and_svg(tmp_path, capsys):
    args = ["frc", "--model", "three-mass", "--omega-min", "1.8", "--omega-max", "2.0",
            "--steps", "5", "--NH", "3", "--masters", "1,3", "--svg",
            "--dofs", "1", "--outdir", str(tmp_path)]
    code, _, _ = run_cli(args, capsys)
    assert code == 0
    assert (tmp_path / "frc.svg").exists()
    body = (tmp_path / "frc.csv").read_text()
    assert "dof1" in body.splitlines()[1]


def test_asweep_smoke(tmp_path, capsys):
    args = ["asweep", "--model", "three-mass", "--omega", "1.5",
            "--f-min", "0.001", "--f-max", "0.01", "--steps", "4", "--NH", "3",
            "--outdir", str(tmp_path)]
    code, _, _ = run_cli(args, capsys)
    assert code == 0
    assert (tmp_path / "asweep.csv").exists()


def test_outdir_env_var(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SSMSELECT_OUTDIR", str(tmp_path / "envout"))
    code, out, _ = run_cli(["eig", "--model", "three-mass"], capsys)
    assert code == 0
    assert (tmp_path / "envout" / "eig.csv").exists()


def test_reproduce_three_mass_frc(tmp_path, capsys):
    code, out, _ = run_cli(
        ["reproduce", "--case", "three-mass-frc", "--steps", "9", "--NH", "5",
         "--outdir", str(tmp_path)],
        capsys,
    )
    assert code == 0
    for name in ("full", "rom_I1", "rom_I2", "linear"):
        assert (tmp_path / f"three_mass_frc_{name}.csv").exists()


def test_reproduce_unknown_case(tmp_path, capsys):
    # argparse validates the case list itself and exits with status 2
    with pytest.raises(SystemExit) as exc:
        main(["reproduce", "--case", "nope", "--outdir", str(tmp_path)])
    assert exc.value.code == 2


def test_bad_frequency_range_fails_cleanly(capsys):
    code, _, err = run_cli(
        ["frc", "--model", "three-mass", "--omega-min", "2.0", "--omega-max", "2.0",
         "--stdout"],
        capsys,
    )
    assert code == 1
    assert "range" in json.loads(err.strip())["error"]