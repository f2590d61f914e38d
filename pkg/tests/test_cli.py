"""CLI surface: subcommands, wire formats, exit codes, determinism."""

import json

import pytest

from gkpphase import cli


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = cli.dispatch([*argv, "--out", str(out)])
    return code, out.read_text() if out.exists() else ""


def test_synth_level_4(tmp_path):
    code, text = run(tmp_path, "synth", "--level", "4")
    assert code == 0
    data = json.loads(text)
    assert data["schema_version"] == 1
    assert data["gate"] == "T^(1/2)"
    assert data["polynomial"]["coefficients"] == ["0/1", "0/1", "1/12", "0/1", "-1/48"]
    assert data["degree"] == 4
    # same polynomial over the half number operator: the Hadamard-family gate
    assert data["number_operator_alias"] == "H^(1/8)"


def test_synth_level_3_contains_table_entry(tmp_path):
    code, text = run(tmp_path, "synth", "--level", "3")
    data = json.loads(text)
    assert code == 0
    assert data["tied"]
    prettys = [m["pretty"] for m in data["minima"]]
    assert "x^3/12 + x^2/8 - x/12" in prettys


def test_synth_multiqubit_cs(tmp_path):
    code, text = run(tmp_path, "synth", "--level", "2", "--qubits", "2")
    data = json.loads(text)
    assert code == 0
    assert data["gate"] == "CS"
    assert data["polynomial"] == {"1,1": "-1/4", "1,2": "-1/4", "2,1": "-1/4"}


def test_synth_lift_start(tmp_path):
    code, text = run(tmp_path, "synth", "--level", "3", name="t3.json")
    prev = tmp_path / "prev.json"
    prev.write_text(json.dumps(json.loads(text)["polynomial"]))
    code, text = run(tmp_path, "synth", "--level", "4", "--start", f"lift:{prev}")
    assert code == 0
    assert json.loads(text)["polynomial"]["pretty"] == "-x^4/48 + x^2/12"


def test_synth_invalid_level_exits_1(tmp_path):
    code, _ = run(tmp_path, "synth", "--level", "0")
    assert code == 1


def test_unknown_subcommand_exits_1():
    assert cli.dispatch(["frobnicate"]) == 1


def test_verify_circuits(tmp_path):
    code, text = run(tmp_path, "verify-circuits", "--nogo-circuits", "25")
    assert code == 0
    data = json.loads(text)
    assert data["all_pass"]
    assert all(c["max_residual"] <= c["tolerance"] for c in data["checks"])


def test_moments_json(tmp_path):
    code, text = run(tmp_path, "moments", "--gate", "T3", "--delta", "0.25", "--lam", "2")
    assert code == 0
    data = json.loads(text)
    assert data["e_vq2"] > 0 and data["e_vp2"] > 0


def test_ft_bound_csv(tmp_path):
    code, text = run(tmp_path, "ft-bound", "--delta", "0.3", "0.05")
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0] == "# schema_version=1"
    assert lines[1].split(",")[0] == "delta"
    assert len(lines) == 4


def test_twirl_density_csv(tmp_path):
    code, text = run(tmp_path, "twirl-density", "--delta", "0.25", "--lam", "2",
                     "--points", "7")
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[1] == "v_q,v_p,density"
    assert len(lines) == 2 + 49


def test_vacuum_csv(tmp_path):
    code, text = run(tmp_path, "vacuum", "--delta", "0.25", "--grid", "80",
                     "--postselect", "0.5")
    assert code == 0
    row = text.strip().splitlines()[-1].split(",")
    assert float(row[2]) > 0
    assert abs(float(row[3]) - 0.5) < 1e-9


def test_sweep_csv_and_determinism(tmp_path):
    args = ["sweep", "--gate", "I", "--nbar-min", "3", "--nbar-max", "4",
            "--nbar-step", "1", "--lam-min", "1", "--lam-max", "2",
            "--lam-count", "3", "--dinit", "128"]
    code, text1 = run(tmp_path, *args, name="a.csv")
    assert code == 0
    code, text2 = run(tmp_path, *args, name="b.csv")
    assert text1 == text2  # byte-identical
    lines = text1.strip().splitlines()
    header = lines[1].split(",")
    assert header == ["gate", "n_bar", "delta", "delta_db", "lam",
                      "avg_infidelity", "t_state_infidelity", "boundary_flag"]
    rows = [l.split(",") for l in lines[2:]]
    assert len(rows) == 6
    # identity-gate argmin sits at lam = 1, the grid boundary
    opt_rows = [r for r in rows if r[7] != ""]
    assert all(r[4] == "1" and r[7] == "1" for r in opt_rows)


def test_sweep_workers_deterministic(tmp_path):
    args = ["sweep", "--gate", "I", "--nbar-min", "3", "--nbar-max", "3",
            "--nbar-step", "1", "--lam-min", "1", "--lam-max", "2",
            "--lam-count", "2", "--dinit", "128"]
    _, a = run(tmp_path, *args, name="w1.csv")
    _, b = run(tmp_path, *args, "--workers", "2", name="w2.csv")
    assert a == b


def test_cache_roundtrip(tmp_path):
    cache_dir = tmp_path / "cache"
    code, text = run(tmp_path, "cache", "purge", "--cache-dir", str(cache_dir))
    assert code == 0
    assert json.loads(text)["purged"] == 0
    code, text = run(
        tmp_path, "cache", "prewarm", "--cache-dir", str(cache_dir),
        "--dinit", "32", "--expand-factor", "2",
        "--nbar-min", "3", "--nbar-max", "3", "--nbar-step", "1",
        "--lam-min", "1", "--lam-max", "2", "--lam-count", "2",
    )
    assert code == 0
    assert json.loads(text)["prewarmed"] == 4
    code, text = run(tmp_path, "cache", "list", "--cache-dir", str(cache_dir))
    data = json.loads(text)
    assert data["count"] == 4
    kinds = {e["kind"] for e in data["entries"]}
    assert {"qeig-values", "qeig-vectors", "pauli-diag-zx"} <= kinds
    code, text = run(tmp_path, "cache", "purge", "--cache-dir", str(cache_dir))
    assert json.loads(text)["purged"] == 4


def test_numeric_failure_exits_2(monkeypatch):
    from gkpphase import analytic

    def boom(args):
        raise analytic.AccuracyError("sum did not converge")

    # dispatch rebuilds the parser, which resolves handlers from cli globals
    monkeypatch.setattr(cli, "cmd_moments", boom)
    assert cli.dispatch(["moments", "--delta", "0.2"]) == 2


def test_config_file_defaults(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("[moments]\ngate = TGKP\ndelta = 0.3\nlam = 1.5\n")
    out = tmp_path / "m.json"
    code = cli.dispatch(["--config", str(conf), "moments", "--out", str(out)])
    assert code == 0
    data = json.loads(out.read_text())
    assert data["gate"] == "TGKP"
    assert data["delta"] == 0.3
    # flags still win over config values
    code = cli.dispatch(["--config", str(conf), "moments", "--gate", "T3",
                         "--out", str(out)])
    assert json.loads(out.read_text())["gate"] == "T3"
