"""Plan parsing, batch execution, aggregation, and plot emission."""

import csv
import json
import math

import pytest

from egscfo.cli import main
from egscfo.config import ConfigError
from egscfo.experiments import (
    AggregateReport,
    ExperimentPlan,
    PLOT_FILES,
    aggregate,
    emit_plots,
    execute,
    load_plan,
    plan_from_text,
)

TINY = """
[plan]
name = tiny
modes = egscfo, baseline
seeds = 1, 2, 3
malicious_fractions = 0.2, 0.25

[scenario]
node_count = 8
E0_J = 0.004
"""


def write_plan(tmp_path, text, name="plan.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


# -- plan loading -----------------------------------------------------------------


def test_empty_file_is_default_plan(tmp_path):
    plan = load_plan(write_plan(tmp_path, ""))
    assert plan.base.node_count == 100
    assert plan.base.area_width == 100.0
    assert plan.base.malicious_fraction == 0.2
    assert plan.seeds == (1,)
    assert plan.modes == ("egscfo",)


def test_plan_grid_counts():
    plan = plan_from_text(TINY)
    assert len(plan.scenarios()) == 2
    assert sum(1 for _ in plan.runs()) == 12


def test_plan_rejects_bad_fraction():
    with pytest.raises(ConfigError, match="malicious_fraction"):
        plan_from_text("[scenario]\nmalicious_fraction = 1.0\n")


def test_plan_rejects_unknown_key():
    with pytest.raises(ConfigError, match="frobnicate"):
        plan_from_text("[scenario]\nfrobnicate = 3\n")
    with pytest.raises(ConfigError, match="bogus"):
        plan_from_text("[plan]\nbogus = 3\n")


def test_plan_rejects_unknown_mode():
    with pytest.raises(ConfigError, match="warp"):
        plan_from_text("[plan]\nmodes = warp\n")


def test_plan_mode_aliases():
    plan = plan_from_text("[plan]\nmodes = trust-agnostic, fuzzy_only\n")
    assert plan.modes == ("baseline", "fuzzy-only")


def test_plan_table_spellings():
    plan = plan_from_text("""
[scenario]
N_NCH = 3
p_int = 0.05
[attack]
P_DP = 0.3
P_DL = 0.1
[outlier]
T_s = 40
""")
    assert plan.base.n_nch == 3
    assert plan.base.p_int == 0.05
    assert plan.base.attack.p_dp == 0.3
    assert plan.base.thresholds.t_s == 40


def test_plan_area_sweep():
    plan = plan_from_text("[plan]\nareas = 100x100, 150x150\nnode_counts = 50, 100\n")
    assert len(plan.scenarios()) == 4


def test_empty_seed_list_invalid():
    with pytest.raises(ConfigError, match="seed"):
        plan_from_text("[plan]\nseeds =\n")


# -- execution ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def tiny_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny-out")
    plan = plan_from_text(TINY)
    report = execute(plan, out_dir=out, jobs=1)
    return plan, report, out


def test_execute_produces_all_runs(tiny_report):
    plan, report, out = tiny_report
    assert not report.failures
    assert len(report.entries) == 4  # 2 scenarios x 2 modes
    assert all(len(e["seeds"]) == 3 for e in report.entries)
    rounds_files = list(out.glob("*-rounds.csv"))
    summary_files = list(out.glob("*-summary.json"))
    assert len(rounds_files) == 12
    assert len(summary_files) == 12
    assert (out / "tiny-report.json").exists()


def test_rerun_byte_identical(tiny_report, tmp_path):
    plan, _, out = tiny_report
    again = tmp_path / "again"
    execute(plan, out_dir=again, jobs=1)
    for path in sorted(out.glob("*-rounds.csv")):
        assert (again / path.name).read_bytes() == path.read_bytes()


def test_parallel_matches_serial(tiny_report, tmp_path):
    plan, _, out = tiny_report
    par = tmp_path / "par"
    execute(plan, out_dir=par, jobs=4)
    for path in sorted(out.glob("*-rounds.csv")):
        assert (par / path.name).read_bytes() == path.read_bytes()


def test_single_seed_mean_equals_run_value(tmp_path):
    plan = plan_from_text("""
[plan]
name = lone
seeds = 5
[scenario]
node_count = 8
E0_J = 0.004
""")
    out = tmp_path / "lone"
    report = execute(plan, out_dir=out, jobs=1)
    entry = report.entries[0]
    summary = json.loads(next(out.glob("*-summary.json")).read_text())
    assert entry["lifetime_mean"] == summary["lifetime"]
    assert entry["lifetime_std"] == 0.0


def test_aggregate_recomputable_from_raw_csvs(tiny_report):
    """Round trip: per-run summaries re-derived from the rounds CSVs."""
    plan, report, out = tiny_report
    for entry in report.entries:
        lifetimes = []
        attacks = []
        for seed in entry["seeds"]:
            path = out / f"{entry['scenario']}-{entry['mode']}-{seed}-rounds.csv"
            with open(path) as fh:
                rows = list(csv.DictReader(fh))
            attacks.append(sum(int(r["drop_attacks"]) + int(r["delay_attacks"])
                               for r in rows))
            benign0 = int(rows[0]["alive_benign_count"])
            death = next((int(r["round"]) + 1 for r in rows
                          if int(r["alive_benign_count"]) < benign0), len(rows))
            lifetimes.append(death)
        assert sum(attacks) / len(attacks) == pytest.approx(entry["attacks_total_mean"])
        assert sum(lifetimes) / len(lifetimes) == pytest.approx(entry["lifetime_mean"])


def test_failures_recorded_not_raised(tmp_path):
    plan = ExperimentPlan(seeds=(1,), modes=("egscfo",))
    # sabotage: a config that validates but cannot build a fuzzy system
    bad = plan_from_text("[scenario]\nnode_count = 8\nE0_J = 0.004\n")
    object.__setattr__(bad.base, "fuzzy_sets", "[input.low]\npoints = bananas\n")
    report = execute(bad, out_dir=None, jobs=1)
    assert report.failures and not report.entries


# -- plot emission --------------------------------------------------------------------


def test_emit_plots_catalogue(tiny_report, tmp_path):
    _, report, _ = tiny_report
    paths = emit_plots(report, tmp_path / "plots")
    assert len(paths) == len(PLOT_FILES) == 8
    for path in paths:
        lines = path.read_text().splitlines()
        assert lines[0].startswith("#")  # documented header
        assert len(lines) > 1


def test_malicious_cluster_plot_has_cycle_rows(tiny_report, tmp_path):
    _, report, _ = tiny_report
    paths = emit_plots(report, tmp_path / "plots2")
    cycles_file = next(p for p in paths if "per_cycle" in p.name)
    rows = [line.split("\t") for line in cycles_file.read_text().splitlines()[1:]]
    per_scenario = {}
    for scenario, mode, cycle, value in rows:
        per_scenario.setdefault((scenario, mode), []).append(int(cycle))
    for cycles in per_scenario.values():
        assert cycles == list(range(len(cycles)))


def test_report_round_trips_through_json(tiny_report):
    _, report, _ = tiny_report
    clone = AggregateReport.from_json(report.to_json())
    assert clone.entries == report.entries
    assert clone.plan_name == report.plan_name


# -- command line -----------------------------------------------------------------------


def test_cli_validate_ok(tmp_path, capsys):
    path = write_plan(tmp_path, TINY)
    assert main(["validate", str(path)]) == 0
    out = capsys.readouterr().out
    assert "12 run(s)" in out


def test_cli_validate_rejects(tmp_path, capsys):
    path = write_plan(tmp_path, "[scenario]\nmalicious_fraction = 2.0\n")
    assert main(["validate", str(path)]) == 1


def test_cli_run_and_plot(tmp_path, capsys):
    plan = write_plan(tmp_path, """
[plan]
name = cli
seeds = 1
[scenario]
node_count = 8
E0_J = 0.002
""")
    out = tmp_path / "results"
    assert main(["run", str(plan), "--out", str(out)]) == 0
    report_path = out / "cli-report.json"
    assert report_path.exists()
    capsys.readouterr()
    assert main(["plot", str(report_path), "--out", str(out)]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert len(printed) == 8


def test_cli_out_dir_env_override(tmp_path, capsys, monkeypatch):
    plan = write_plan(tmp_path, """
[plan]
name = env
seeds = 1
[scenario]
node_count = 8
E0_J = 0.002
""")
    target = tmp_path / "from-env"
    monkeypatch.setenv("EGSCFO_OUT_DIR", str(target))
    assert main(["run", str(plan)]) == 0
    assert (target / "env-report.json").exists()


def test_cli_sweep_ess(capsys):
    assert main(["sweep-ess", "--n", "2,3", "--w", "6", "--tavr", "0,1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "n_players\tw\tt_avr\tp2"
    assert len(lines) == 5
    first = dict(zip(("n", "w", "t", "p2"), lines[1].split("\t")))
    assert float(first["p2"]) == pytest.approx(0.375)


def test_cli_run_missing_plan(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.ini")]) == 2
