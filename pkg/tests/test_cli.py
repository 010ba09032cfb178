import json

import pytest

from narrative_miner import cli, synthgen, tailfit
from narrative_miner.ordinal import simulate_pom


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def work(synth_files, tmp_path_factory):
    """Chain the per-stage subcommands on the synthetic corpus."""
    d = tmp_path_factory.mktemp("cli")
    f = synth_files
    steps = [
        ("ingest", "--input", f["corpus"], "--out", d / "c.jsonl"),
        ("summary", "--corpus", d / "c.jsonl", "--out", d / "summary.csv"),
        ("dtm", "--corpus", d / "c.jsonl", "--dict", f["dictionary"], "--min-occurrences", 5, "--out", d / "dtm.csv"),
        ("cooccur", "--dtm", d / "dtm.csv", "--out", d / "net.csv"),
        ("backbone", "--net", d / "net.csv", "--alpha", 0.05, "--out", d / "bb.csv"),
        ("communities", "--net", d / "bb.csv", "--algo", "walktrap", "--reference", f["dictionary"],
         "--out", d / "comm.csv"),
        ("label-posts", "--corpus", d / "c.jsonl", "--dtm", d / "dtm.csv", "--dict", f["dictionary"],
         "--out", d / "labels.csv"),
        ("classify-users", "--corpus", d / "c.jsonl", "--labels", d / "labels.csv", "--out", d / "users.csv",
         "--table", d / "pol.csv"),
        ("mobility-stats", "--corpus", d / "c.jsonl", "--labels", d / "labels.csv", "--out", d),
        ("survival", "--corpus", d / "c.jsonl", "--labels", d / "labels.csv", "--unit", "post",
         "--out", d / "km.csv", "--groups-out", d / "groups.csv"),
        ("survtest", "--groups", d / "groups.csv", "--out", d / "test.csv"),
        ("pom", "--input", d / "mobility.csv", "--K", 4, "--out", d / "pom.json", "--table", d / "pom.csv"),
    ]
    codes = {s[0]: run(*s) for s in steps}
    return d, codes


@pytest.mark.parametrize(
    "command",
    ["ingest", "summary", "dtm", "cooccur", "backbone", "communities", "label-posts", "classify-users",
     "mobility-stats", "survival", "survtest", "pom"],
)
def test_stage_commands_succeed(work, command):
    _, codes = work
    assert codes[command] == 0


def test_stage_outputs(work, synth):
    d, _ = work
    summary = dict(line.split(",") for line in (d / "summary.csv").read_text().splitlines()[1:])
    assert int(summary["Posts"]) == synth.ledger["counts"]["posts"]
    assert int(summary["Likes"]) == synth.ledger["counts"]["likes"]
    pol = {r.split(",")[0]: int(r.split(",")[1]) for r in (d / "pol.csv").read_text().splitlines()[1:]}
    assert pol == synth.ledger["polarization"]["counts"]
    assert (d / "test.csv").read_text().startswith("groups,statistic,df,p_value,method,weighting")
    rep = json.loads((d / "pom.json").read_text())
    assert rep["K"] == 4 and "sign_convention" in rep
    assert (d / "correlations.csv").is_file() and (d / "engagement_quartiles.csv").is_file()


def test_fit_tail_groups(tmp_path):
    rng = synthgen.stream(0, 41)
    rows = ["group,likes"]
    for g, a in (("a", 2.5), ("b", 3.0)):
        rows += [f"{g},{v}" for v in tailfit.sample_power_law(a, 5, 3000, rng)]
    rows += ["c,0", "c,NA"]
    (tmp_path / "x.csv").write_text("\n".join(rows) + "\n")
    code = run("fit-tail", "--input", f"{tmp_path / 'x.csv'}:likes", "--group-by", "group",
               "--out", tmp_path / "fits.csv", "--ccdf", tmp_path / "ccdf.csv")
    assert code == 0
    lines = (tmp_path / "fits.csv").read_text().splitlines()
    assert lines[0] == "group,metric,x_min,alpha,n_tail,ks"
    by_group = {r.split(",")[0]: r.split(",") for r in lines[1:]}
    assert abs(float(by_group["a"][3]) - 2.5) < 0.15
    assert by_group["c"][2] == "NA"
    assert (tmp_path / "ccdf.csv").is_file()


def test_survtest_exact_flag(tmp_path):
    (tmp_path / "g.csv").write_text("group,duration,observed\na,1,1\na,2,1\na,3,1\nb,100,1\nb,200,1\nb,300,1\n")
    assert run("survtest", "--groups", tmp_path / "g.csv", "--exact", "--out", tmp_path / "t.csv") == 0
    row = (tmp_path / "t.csv").read_text().splitlines()[1].split(",")
    assert float(row[3]) == pytest.approx(0.1) and row[4] == "exact"


def test_synth_and_pipeline_with_config(tmp_path):
    assert run("synth", "--out", tmp_path, "--seed", 3, "--scale", 0.01) == 0
    ini = tmp_path / "pipeline.ini"
    assert run("pipeline", "--config", ini, "--report", tmp_path / "r.json") == 0
    rep = json.loads((tmp_path / "r.json").read_text())
    assert rep["ok"] and rep["recomputed"] == 10
    assert (tmp_path / "run" / "manifest.json").is_file()
    # a flag beats the file: alpha changes, so the backbone stage re-runs
    assert run("pipeline", "--config", ini, "--alpha", 0.1, "--report", tmp_path / "r2.json") == 0
    stages = {s["name"]: s["status"] for s in json.loads((tmp_path / "r2.json").read_text())["stages"]}
    assert stages["backbone"] == "ran" and stages["ingest"] == "cached"
    assert json.loads((tmp_path / "run" / "report.json").read_text())["backbone"]["alpha"] == 0.1


def test_common_and_section_config(tmp_path, synth_files):
    ini = tmp_path / "c.ini"
    ini.write_text(f"[common]\nseed = 3\n[summary]\ncorpus = {synth_files['corpus']}\nout = s.csv\n")
    assert run("summary", "--config", ini) == 0
    assert (tmp_path / "s.csv").read_text().startswith("entity,count")


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["backbone", "--net", "x.csv"],
        ["nonsense"],
        ["backbone", "--alpha", "abc"],
        ["survival", "--corpus", "a", "--labels", "b", "--out", "c", "--by", "page"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    try:
        code = run(*argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_bad_config_key_is_usage_error(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[summary]\nbogus = 1\n")
    assert run("summary", "--config", ini) == 2
    assert run("summary", "--config", tmp_path / "missing.ini") == 2


def test_runtime_error_exits_1(tmp_path):
    (tmp_path / "bad.jsonl").write_text("{not json\n")
    assert run("ingest", "--input", tmp_path / "bad.jsonl", "--out", tmp_path / "o.jsonl") == 1


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        run("--version")
    assert exc.value.code == 0
    assert "kernels" in capsys.readouterr().out


def test_fifteen_subcommands():
    sub = cli.build_parser()._subparsers._group_actions[0].choices
    assert len(sub) == 15


def test_pom_on_simulated_xy(tmp_path):
    rng = synthgen.stream(0, 50)
    x = rng.integers(-3, 40, 2000)
    y = simulate_pom(synthgen.POM_INTERCEPTS, [synthgen.POM_SLOPE], x, rng)
    (tmp_path / "xy.csv").write_text("x,y\n" + "".join(f"{a},{b}\n" for a, b in zip(x, y)))
    assert run("pom", "--input", tmp_path / "xy.csv", "--out", tmp_path / "p.json") == 0
    beta = json.loads((tmp_path / "p.json").read_text())["coefficients"][0]["value"]
    assert abs(beta - synthgen.POM_SLOPE) < 0.03
