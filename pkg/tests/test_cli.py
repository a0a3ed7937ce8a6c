"""CLI: artifacts, exit codes, determinism, config handling."""

import json

from flexhedge.cli import main
from flexhedge.hedging import read_hedge_csv
from flexhedge.opf import read_dispatch_csv
from flexhedge.scenario import ScenarioSpec, generate_scenario, write_scenario_file

ARTIFACTS = ["hedge_report.csv", "hedge_report.json", "dispatch_unconstrained.csv",
             "dispatch_hedged.csv", "trace.txt"]


def write_preset_file(path, seed=3, case="finite"):
    scenario = generate_scenario(ScenarioSpec(seed=seed, line_limit_case=case))
    with open(path, "w") as fobj:
        write_scenario_file(scenario.network, scenario.hours, fobj)


def test_run_writes_all_artifacts(tmp_path):
    rc = main(["run", "--preset", "paper-3bus", "--case", "infinite",
               "--pi-des", "70", "--seed", "7", "--out", str(tmp_path / "out")])
    assert rc == 0
    for name in ARTIFACTS:
        assert (tmp_path / "out" / name).exists(), name
    doc = json.loads((tmp_path / "out" / "hedge_report.json").read_text())
    assert doc["totals"]["hours_active"] > 0


def test_run_finite_case_has_larger_revenue(tmp_path):
    main(["run", "--preset", "paper-3bus", "--case", "infinite", "--pi-des", "70",
          "--seed", "7", "--out", str(tmp_path / "a")])
    main(["run", "--preset", "paper-3bus", "--case", "finite", "--pi-des", "70",
          "--seed", "7", "--out", str(tmp_path / "b")])
    inf_doc = json.loads((tmp_path / "a" / "hedge_report.json").read_text())
    fin_doc = json.loads((tmp_path / "b" / "hedge_report.json").read_text())
    assert fin_doc["totals"]["total_revenue_eur"] > inf_doc["totals"]["total_revenue_eur"]


def test_run_byte_identical_for_same_config(tmp_path):
    args = ["run", "--preset", "paper-3bus", "--case", "finite",
            "--pi-des", "70", "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "one")]) == 0
    assert main(args + ["--out", str(tmp_path / "two")]) == 0
    for name in ARTIFACTS:
        first = (tmp_path / "one" / name).read_bytes()
        second = (tmp_path / "two" / name).read_bytes()
        assert first == second, name


def test_run_inactive_cap_leaves_dispatch_unchanged(tmp_path):
    rc = main(["run", "--preset", "paper-3bus", "--case", "infinite",
               "--pi-des", "1000000", "--seed", "7", "--out", str(tmp_path / "out")])
    assert rc == 0
    unc = (tmp_path / "out" / "dispatch_unconstrained.csv").read_text()
    hedged = (tmp_path / "out" / "dispatch_hedged.csv").read_text()
    assert unc == hedged
    with open(tmp_path / "out" / "hedge_report.csv") as fobj:
        rows = read_hedge_csv(fobj)
    assert all(r["p_flexreq_mw"] == 0.0 for r in rows)
    assert (tmp_path / "out" / "trace.txt").read_text().count("\n") == 1


def test_run_artifacts_round_trip_through_loaders(tmp_path):
    main(["run", "--preset", "paper-3bus", "--case", "finite", "--pi-des", "70",
          "--seed", "5", "--out", str(tmp_path / "out")])
    with open(tmp_path / "out" / "dispatch_hedged.csv") as fobj:
        dispatch = read_dispatch_csv(fobj)
    assert {r["hour"] for r in dispatch["buses"]} == set(range(1, 25))
    with open(tmp_path / "out" / "hedge_report.csv") as fobj:
        hedge = read_hedge_csv(fobj)
    assert [r["hour"] for r in hedge] == list(range(1, 25))


def test_run_from_input_file(tmp_path):
    path = tmp_path / "scenario.txt"
    write_preset_file(path, seed=3, case="finite")
    rc = main(["run", "--input", str(path), "--pi-des", "70",
               "--out", str(tmp_path / "out")])
    assert rc == 0
    direct = tmp_path / "direct"
    main(["run", "--preset", "paper-3bus", "--case", "finite", "--pi-des", "70",
          "--seed", "3", "--out", str(direct)])
    assert (direct / "hedge_report.csv").read_text() == \
        (tmp_path / "out" / "hedge_report.csv").read_text()


def test_run_requires_exactly_one_source(tmp_path, capsys):
    path = tmp_path / "scenario.txt"
    write_preset_file(path)
    rc = main(["run", "--preset", "paper-3bus", "--input", str(path),
               "--out", str(tmp_path / "out")])
    assert rc == 1
    assert "exactly one" in capsys.readouterr().err


def test_run_infeasible_hours_exit_code(tmp_path, capsys):
    args = ["run", "--preset", "paper-3bus", "--case", "finite", "--pi-des", "70",
            "--seed", "7", "--line-limit", "1-3=0.05", "--line-limit", "2-3=0.05"]
    rc = main(args + ["--out", str(tmp_path / "strict")])
    assert rc == 1
    assert "infeasible" in capsys.readouterr().err
    rc = main(args + ["--allow-infeasible", "--out", str(tmp_path / "loose")])
    assert rc == 0


def test_run_env_var_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("FLEXHEDGE_OUT", str(tmp_path / "from-env"))
    rc = main(["run", "--preset", "paper-3bus", "--pi-des", "70", "--seed", "1"])
    assert rc == 0
    assert (tmp_path / "from-env" / "hedge_report.csv").exists()


def test_run_with_config_file(tmp_path):
    config = tmp_path / "study.cfg"
    config.write_text(
        "[run]\n"
        "preset = paper-3bus\n"
        "case = finite\n"
        "pi_des = 70\n"
        "seed = 7\n"
        f"out = {tmp_path / 'cfg-out'}\n"
    )
    rc = main(["run", "--config", str(config)])
    assert rc == 0
    flags = tmp_path / "flag-out"
    main(["run", "--preset", "paper-3bus", "--case", "finite", "--pi-des", "70",
          "--seed", "7", "--out", str(flags)])
    assert (flags / "hedge_report.csv").read_text() == \
        (tmp_path / "cfg-out" / "hedge_report.csv").read_text()


def test_sweep_table(tmp_path, capsys):
    rc = main(["sweep", "--preset", "paper-3bus", "--pi", "68,70,72",
               "--cases", "infinite,finite", "--seed", "7",
               "--out", str(tmp_path / "out")])
    assert rc == 0
    lines = (tmp_path / "out" / "sweep.csv").read_text().splitlines()
    assert lines[0] == "pi_des_eur_mwh,scenario,total_revenue_eur,total_revenue_display"
    assert len(lines) == 7  # header + 3 caps x 2 cases
    assert capsys.readouterr().err == ""


def test_sweep_empty_pi_is_usage_error(tmp_path, capsys):
    rc = main(["sweep", "--preset", "paper-3bus", "--out", str(tmp_path / "out")])
    assert rc == 2
    assert "--pi" in capsys.readouterr().err


def test_sweep_unknown_case(tmp_path, capsys):
    rc = main(["sweep", "--preset", "paper-3bus", "--pi", "70", "--cases", "weird",
               "--out", str(tmp_path / "out")])
    assert rc == 1
    assert "unknown case" in capsys.readouterr().err


def test_validate_clean_file(tmp_path, capsys):
    path = tmp_path / "scenario.txt"
    write_preset_file(path)
    rc = main(["validate", str(path)])
    assert rc == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_validate_negative_reactance(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text(
        "[buses]\n1 slack\n2 -\n3 k\n"
        "[lines]\n1 2 -0.1 1.0\n1 3 0.1 1.0\n2 3 0.1 1.0\n"
        "[offers]\n1 1 50.0 0.0 5.0\n"
        "[utilities]\n1 3 60.0 0.0 0.1 0.5\n"
    )
    rc = main(["validate", str(path)])
    assert rc == 1
    assert "reactance" in capsys.readouterr().out


def test_validate_inverted_load_bounds(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text(
        "[buses]\n1 slack\n2 -\n3 k\n"
        "[lines]\n1 2 0.1 1.0\n1 3 0.1 1.0\n2 3 0.1 1.0\n"
        "[offers]\n1 1 50.0 0.0 5.0\n"
        "[utilities]\n1 3 60.0 0.0 0.9 0.1\n"
    )
    rc = main(["validate", str(path)])
    assert rc == 1
    assert "load bounds" in capsys.readouterr().out


def test_validate_unparsable_file(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("[buses]\n1 slack extra-field\n")
    rc = main(["validate", str(path)])
    assert rc == 1
    assert "line 2" in capsys.readouterr().err


def test_duality_demo(capsys):
    rc = main(["duality-demo", "--gen-cost", "80", "--utility", "90",
               "--load-min", "1", "--load-max", "1", "--cap", "70"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "flex primal objective" in out
    assert "p_flexreq=1.0" in out


def test_pi_des_24_vector(tmp_path):
    values = ",".join(["70"] * 24)
    rc = main(["run", "--preset", "paper-3bus", "--pi-des", values, "--seed", "7",
               "--out", str(tmp_path / "out")])
    assert rc == 0
    doc = json.loads((tmp_path / "out" / "hedge_report.json").read_text())
    assert doc["pi_des_eur_mwh"] == [70.0] * 24


def test_pi_des_wrong_vector_length(tmp_path, capsys):
    rc = main(["run", "--preset", "paper-3bus", "--pi-des", "70,71,72",
               "--out", str(tmp_path / "out")])
    assert rc == 1
    assert "1 or 24 values" in capsys.readouterr().err
