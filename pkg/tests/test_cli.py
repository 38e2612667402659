import json
from importlib.resources import files

import pytest

from colliderfit.cli import main
from colliderfit.data_io import Dataset, load_csv, save_csv
from colliderfit.reports import load_report, load_reports
from colliderfit.tasks import TaskId

HUMAN = str(files("colliderfit") / "data" / "human_like_rw17.csv")


@pytest.fixture
def two_agents(tmp_path):
    path = tmp_path / "two.csv"
    assert main(["simulate", "--params", "0.1,0.9,0.7,0.4", "--agent-name", "alpha", "--repeats", "2",
                 "--out", str(tmp_path / "a.csv")]) == 0
    assert main(["simulate", "--params", "0.3,0.6,0.6,0.5", "--agent-name", "beta", "--repeats", "2",
                 "--noise", "0.05", "--seed", "3", "--out", str(tmp_path / "b.csv")]) == 0
    ds = load_csv(tmp_path / "a.csv")
    ds.extend(load_csv(tmp_path / "b.csv"))
    save_csv(ds, path)
    return path


def test_fit_noiseless(two_agents, tmp_path, capsys):
    out = tmp_path / "fit.json"
    assert main(["fit", "--data", str(two_agents), "--agent", "alpha", "--out", str(out)]) == 0
    reports = load_reports(out)
    assert len(reports) == 1 and reports[0].agent_id == "alpha"
    assert reports[0].consistency.loocv_r2 >= 0.999
    stdout = capsys.readouterr().out
    assert stdout.splitlines()[0].startswith("agent_id,prompt_style")


def test_fit_empty_selection(two_agents, tmp_path, capsys):
    assert main(["fit", "--data", str(two_agents), "--agent", "gamma", "--out", str(tmp_path / "x.json")]) == 2
    assert "alpha, beta" in capsys.readouterr().err


def test_fit_missing_task(tmp_path, capsys):
    ds = load_csv(HUMAN)
    partial = Dataset(r for r in ds.records if r.task_id != TaskId.IX)
    save_csv(partial, tmp_path / "p.csv")
    code = main(["fit", "--data", str(tmp_path / "p.csv"), "--out", str(tmp_path / "p.json")])
    assert code == 1
    err = capsys.readouterr().err
    assert "human_like/direct/rw17" in err and "IX" in err


def test_partial_failure_still_writes_good_groups(two_agents, tmp_path, capsys):
    ds = load_csv(two_agents)
    ds = Dataset(r for r in ds.records if not (r.agent_id == "beta" and r.task_id == TaskId.II))
    save_csv(ds, tmp_path / "p.csv")
    assert main(["fit", "--data", str(tmp_path / "p.csv"), "--out", str(tmp_path / "p.json")]) == 1
    assert [r.agent_id for r in load_reports(tmp_path / "p.json")] == ["alpha"]
    assert "beta/direct/synthetic" in capsys.readouterr().err


def test_diagnose_human_like(tmp_path):
    out = tmp_path / "d.json"
    assert main(["diagnose", "--data", HUMAN, "--out", str(out), "--bootstrap", "300"]) == 0
    data = json.loads(out.read_text())["reports"][0]["signature"]
    assert data["ea"] == 0.09
    assert data["mv_flag"] is True
    assert data["epsilon"] == 0.05


def test_diagnose_epsilon_flag(tmp_path):
    out = tmp_path / "d.json"
    assert main(["diagnose", "--data", HUMAN, "--out", str(out), "--epsilon", "0.1", "--bootstrap", "50"]) == 0
    assert json.loads(out.read_text())["reports"][0]["signature"]["mv_flag"] is False


def test_diagnose_reference(two_agents, tmp_path):
    out = tmp_path / "d.json"
    assert main(["diagnose", "--data", str(two_agents), "--agent", "beta", "--reference", "alpha",
                 "--bootstrap", "50", "--out", str(out)]) == 0
    report = load_reports(out)[0]
    assert report.reference == "alpha"
    assert -1 <= report.signature.spearman_vs_reference <= 1


def test_seed_reproducible(tmp_path):
    outs = []
    for name in ("a.json", "b.json"):
        assert main(["diagnose", "--data", HUMAN, "--seed", "11", "--bootstrap", "100",
                     "--out", str(tmp_path / name)]) == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]


def test_compare_self(two_agents, tmp_path, capsys):
    out = tmp_path / "c.json"
    assert main(["compare", "--data", str(two_agents), "--agent", "alpha", "--reference", "alpha",
                 "--bootstrap", "50", "--out", str(out)]) == 0
    assert load_report(out).spearman == 1.0
    assert capsys.readouterr().out.startswith("spearman\t1")


def test_compare_reversed(tmp_path):
    ds = load_csv(HUMAN)
    from colliderfit.data_io import JudgmentRecord
    flipped = [JudgmentRecord("flipped", r.prompt_style, r.content_domain, r.task_id,
                              100 - r.response, r.trial_index) for r in ds.records]
    ds.extend(Dataset(flipped))
    save_csv(ds, tmp_path / "f.csv")
    assert main(["compare", "--data", str(tmp_path / "f.csv"), "--agent", "human_like",
                 "--reference", "flipped", "--bootstrap", "50", "--out", str(tmp_path / "c.json")]) == 0
    assert load_report(tmp_path / "c.json").spearman == -1.0


def test_compare_same_theta_different_noise(tmp_path):
    paths = []
    for seed, name in ((1, "s1"), (2, "s2")):
        p = tmp_path / f"{name}.csv"
        assert main(["simulate", "--params", "0.2,0.8,0.6,0.5", "--noise", "0.02", "--seed", str(seed),
                     "--agent-name", name, "--repeats", "20", "--out", str(p)]) == 0
        paths.append(p)
    ds = load_csv(paths[0])
    ds.extend(load_csv(paths[1]))
    save_csv(ds, tmp_path / "both.csv")
    assert main(["compare", "--data", str(tmp_path / "both.csv"), "--agent", "s1", "--reference", "s2",
                 "--bootstrap", "50", "--out", str(tmp_path / "c.json")]) == 0
    assert load_report(tmp_path / "c.json").spearman >= 0.9


def test_compare_constant_agent(tmp_path, capsys):
    from colliderfit.data_io import JudgmentRecord
    ds = load_csv(HUMAN)
    ds.extend(Dataset(JudgmentRecord("flat", "direct", "rw17", r.task_id, 50, r.trial_index)
                      for r in ds.records))
    save_csv(ds, tmp_path / "f.csv")
    code = main(["compare", "--data", str(tmp_path / "f.csv"), "--agent", "human_like",
                 "--reference", "flat", "--bootstrap", "50", "--out", str(tmp_path / "c.json")])
    assert code == 1
    assert "flat" in capsys.readouterr().err


def test_report_writes_svg_and_csv(tmp_path, capsys):
    assert main(["diagnose", "--data", HUMAN, "--bootstrap", "100", "--out", str(tmp_path / "d.json")]) == 0
    capsys.readouterr()
    svg = tmp_path / "fig.svg"
    assert main(["report", "--report", str(tmp_path / "d.json"), "--out", str(svg)]) == 0
    assert svg.read_bytes().lstrip().startswith(b"<?xml")
    table = (tmp_path / "fig.csv").read_text().splitlines()
    assert table[0].startswith("agent_id,prompt_style,content_domain,task_id")
    assert len(table) == 12
    first = svg.read_bytes()
    assert main(["report", "--report", str(tmp_path / "d.json"), "--out", str(svg)]) == 0
    assert svg.read_bytes() == first


def test_report_from_comparison(two_agents, tmp_path):
    out = tmp_path / "c.json"
    assert main(["compare", "--data", str(two_agents), "--agent", "alpha", "--reference", "beta",
                 "--bootstrap", "50", "--out", str(out)]) == 0
    assert main(["report", "--report", str(out), "--out", str(tmp_path / "c.svg")]) == 0
    assert len((tmp_path / "c.csv").read_text().splitlines()) == 23


def test_simulate_both_styles(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["simulate", "--params", "0.2,0.8,0.6,0.5", "--prompt-style", "all", "--repeats", "3",
                 "--out", str(out)]) == 0
    assert len(load_csv(out).groups()) == 2


def test_simulate_rejects_bad_params(tmp_path):
    with pytest.raises(SystemExit):
        main(["simulate", "--params", "0.2,1.8,0.6,0.5", "--out", str(tmp_path / "s.csv")])


def test_run_agent(stub_endpoint, tmp_path):
    out = tmp_path / "llm.csv"
    code = main(["run-agent", "--endpoint", stub_endpoint.url, "--model", "stub", "--repeats", "2",
                 "--max-in-flight", "2", "--out", str(out)])
    assert code == 0
    ds = load_csv(out)
    assert len(ds) == 22 and {r.response for r in ds.records} == {42.0}
    assert len((tmp_path / "llm.jsonl").read_text().splitlines()) == 22
    assert stub_endpoint.max_seen <= 2


def test_run_agent_parse_error_exit_code(stub_endpoint, tmp_path, capsys):
    stub_endpoint.replies[5] = "no clue"
    code = main(["run-agent", "--endpoint", stub_endpoint.url, "--model", "stub", "--repeats", "2",
                 "--max-in-flight", "1", "--out", str(tmp_path / "llm.csv")])
    assert code == 1
    assert len(load_csv(tmp_path / "llm.csv")) == 21
    assert "task III trial 0: parse error" in capsys.readouterr().err


def test_run_agent_dead_task(stub_endpoint, tmp_path, capsys):
    stub_endpoint.replies[3] = "no clue"
    code = main(["run-agent", "--endpoint", stub_endpoint.url, "--model", "stub", "--repeats", "1",
                 "--max-in-flight", "1", "--out", str(tmp_path / "llm.csv")])
    assert code == 1
    assert "every request failed for task(s) III" in capsys.readouterr().err


def test_run_agent_template(stub_endpoint, tmp_path):
    template = tmp_path / "t.txt"
    template.write_text("$cover_story\n$evidence\n$query\nJust a number.")
    assert main(["run-agent", "--endpoint", stub_endpoint.url, "--model", "stub",
                 "--template", str(template), "--out", str(tmp_path / "o.csv")]) == 0
    assert stub_endpoint.bodies[0]["messages"][0]["content"].endswith("Just a number.")
