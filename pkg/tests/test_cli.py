import json

import numpy as np

from kwlab.cli import main, parse_config_file
from kwlab.serialize import read_field


def run_cli(capsys, *args):
    code = main(list(args))
    captured = capsys.readouterr()
    return code, captured


def last_json_line(text):
    return json.loads(text.strip().splitlines()[-1])


def test_solve_constant(tmp_path, capsys):
    out = tmp_path / "run"
    code, cap = run_cli(
        capsys, "solve", "--out", str(out),
        "field=const", "field_value=-1.0", "alpha=-2.0", "sizes=32,32",
    )
    assert code == 0
    summary = last_json_line(cap.out)
    assert summary["converged"] is True
    assert summary["exit_code"] == 0
    assert summary["defect"] <= 1e-10
    # artifacts on disk
    assert (out / "summary.json").exists()
    assert (out / "effective_config.txt").exists()
    u = read_field(out / "solve_u")
    assert np.max(np.abs(u.values - 0.5 * np.log(2.0))) < 1e-9


def test_solve_unsolvable_exits_2(tmp_path, capsys):
    code, cap = run_cli(
        capsys, "solve", "--out", str(tmp_path / "run"),
        "field=const", "field_value=1.0", "alpha=-1.0", "sizes=32,32",
        "solver=probe",
    )
    assert code == 2
    summary = last_json_line(cap.out)
    assert summary["converged"] is False


def test_missing_keys_exit_1(tmp_path, capsys):
    code, cap = run_cli(capsys, "solve", "--out", str(tmp_path / "run"))
    assert code == 1
    err = json.loads(cap.err.strip())
    assert "field" in err["error"] and "alpha" in err["error"]


def test_unknown_override_exit_1(tmp_path, capsys):
    code, cap = run_cli(
        capsys, "solve", "--out", str(tmp_path / "run"),
        "field=const", "field_value=-1.0", "alpha=-1.0", "bogus_key=3",
    )
    assert code == 1


def test_config_file_and_override_precedence(tmp_path, capsys):
    cfgfile = tmp_path / "case.cfg"
    cfgfile.write_text(
        "# comment line\n"
        "field = const\n"
        "field_value = -1.0\n"
        "alpha = -2.0\n"
        "sizes = 32,32\n"
    )
    parsed = parse_config_file(cfgfile)
    assert parsed["field"] == "const" and parsed["alpha"] == "-2.0"
    out = tmp_path / "run"
    code, cap = run_cli(
        capsys, "solve", "--config", str(cfgfile), "--out", str(out), "alpha=-4.0"
    )
    assert code == 0
    summary = last_json_line(cap.out)
    assert summary["alpha"] == -4.0  # override beats the file


def test_selftest(tmp_path, capsys):
    code, cap = run_cli(capsys, "selftest", "--out", str(tmp_path / "st"))
    assert code == 0
    assert last_json_line(cap.out)["checks_failed"] == []


def test_threshold_mode(tmp_path, capsys):
    out = tmp_path / "thr"
    code, cap = run_cli(
        capsys, "threshold", "--out", str(out),
        "field=sin1", "field_offset=-0.5", "sizes=32,32", "tol=5e-3",
    )
    assert code == 0
    summary = last_json_line(cap.out)
    thr = summary["threshold"]
    assert thr["lo"] < thr["hi"] < 0
    assert thr["width"] <= 5e-3
    csv_lines = (out / "family.csv").read_text().strip().splitlines()
    assert csv_lines[0] == "param,sup_norm_u,energy,defect,lambda_min"
    assert len(csv_lines) == thr["family_size"] + 1
    assert (out / "member_000.report.json").exists()


def test_dingliu_mode(tmp_path, capsys):
    out = tmp_path / "dl"
    code, cap = run_cli(
        capsys, "dingliu", "--out", str(out),
        "field=cos1", "sizes=32,32", "tol=5e-2",
    )
    assert code == 0
    thr = last_json_line(cap.out)["threshold"]
    assert thr["param"] == "lambda"
    assert 0.0 < thr["lo"] < thr["hi"] < 2.0


def test_family_mode_explicit_alphas(tmp_path, capsys):
    out = tmp_path / "fam"
    code, cap = run_cli(
        capsys, "family", "--out", str(out),
        "field=const", "field_value=-1.0", "sizes=32,32", "alphas=-1.0,-2.0,-4.0",
    )
    assert code == 0
    summary = last_json_line(cap.out)
    assert summary["family_size"] == 3
    assert (out / "member_002.report.json").exists()


def test_diagnose_negative_control_exits_2(tmp_path, capsys):
    code, cap = run_cli(
        capsys, "diagnose", "--out", str(tmp_path / "neg"),
        "field=const", "field_value=-1.0", "sizes=32,32",
        "inject=diverge_up", "count=6",
    )
    assert code == 2
    verdicts = last_json_line(cap.out)["verdicts"]
    assert not all(verdicts.values())


def test_determinism(tmp_path, capsys):
    args = ["solve", "field=random_fourier", "field_seed=7", "field_p=3",
            "field_offset=-1.2", "alpha=-1.0", "sizes=32,32"]
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code, cap = run_cli(capsys, args[0], "--out", str(out), *args[1:])
        assert code == 0
        outs.append((last_json_line(cap.out), read_field(out / "solve_u")))
    sa, ua = outs[0]
    sb, ub = outs[1]
    assert abs(sa["sup_norm_u"] - sb["sup_norm_u"]) <= 1e-12
    assert abs(sa["energy"] - sb["energy"]) <= 1e-12
    assert np.max(np.abs(ua.values - ub.values)) <= 1e-12
