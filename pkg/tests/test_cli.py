import json
import subprocess
import sys

import pytest

from aeronet.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from aeronet.fixtures import PIPELINES, fixture_path
from aeronet.pipeline import STAGE_FILES, PipelineConfig, run_pipeline
from aeronet.scenario import load_scenario, segment_speeds


def fx(name):
    return str(fixture_path(name))


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_gwp_venue(capsys):
    code, out, _ = run(["gwp", "--scenario", fx("venue_gwp4.ndjson"), "--demands", fx("venue_gwp4_demands.ndjson"),
                        "--mcs", fx("mcs.csv")], capsys)
    assert code == EXIT_OK
    sol = json.loads(out)
    assert sol["residual"] <= 0
    assert sol["tx_power_dbm"] <= 22
    assert len(sol["input_hash"]) == 16
    assert all(f["snr_db"] >= f["target_snr_db"] - 1e-6 for f in sol["fmaps"])


def test_scenario_gen_reference_settings(tmp_path, capsys):
    out = tmp_path / "rwm.ndjson"
    code, _, _ = run(["scenario-gen", "--rwm", "--nodes", "21", "--box", "80x80x25", "--duration", "160",
                      "--seed", "7", "--out", str(out)], capsys)
    assert code == EXIT_OK
    sf = load_scenario(out)
    assert len(sf.trajectories) == 21 and sf.gw_id == 0
    assert sf.metadata["input_hash"]
    for tr in sf.trajectories:
        assert tr.waypoints[-1][0] == 160
        for _, p in tr.waypoints:
            assert 0 <= p.x <= 80 and 0 <= p.y <= 80 and 0 <= p.z <= 25
    raw = tmp_path / "raw.ndjson"
    run(["scenario-gen", "--rwm", "--seed", "7", "--sample-dt", "0", "--out", str(raw)], capsys)
    for tr in load_scenario(raw).trajectories:
        assert all(0.5 - 1e-9 <= v <= 3 + 1e-9 for v in segment_speeds(tr))


def test_route_simulate_report(tmp_path, capsys):
    sched = tmp_path / "s.ndjson"
    sim = tmp_path / "sim.csv"
    summ = tmp_path / "sum.json"
    assert run(["route", "--scenario", fx("reference_case.ndjson"), "--metric", "capacity", "--out", str(sched)],
               capsys)[0] == EXIT_OK
    code, _, _ = run(["simulate", "--scenario", fx("reference_case.ndjson"), "--schedule", str(sched),
                      "--summary", str(summ), "--compare-static", "--out", str(sim)], capsys)
    assert code == EXIT_OK
    assert json.loads(summ.read_text())["gain_vs_static"]["aggregate"] >= 0.15
    assert sim.read_text().startswith("# input_hash=")
    code, out, _ = run(["report", "--in", str(sim), "--metric", "throughput"], capsys)
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0].startswith("# input_hash=")
    assert lines[1] == "percentile,value"
    assert [ln.split(",")[0] for ln in lines[2:]] == ["25", "50", "75", "90"]
    curve = tmp_path / "curve.csv"
    code, out, _ = run(["report", "--in", str(sim), "--baseline", str(sim), "--curve-out", str(curve)], capsys)
    assert code == EXIT_OK and "gain" in out
    assert curve.read_text().splitlines()[1] == "x,cdf,ccdf"


def test_netplan_command(capsys):
    code, out, _ = run(["netplan", "--scenario", fx("netplan_concentrated.ndjson"),
                        "--zones", fx("netplan_concentrated_zones.csv"), "--steps", "5"], capsys)
    assert code == EXIT_OK
    recs = [json.loads(x) for x in out.splitlines()]
    assert recs[0]["profile"] == "default"
    assert sum(1 for r in recs[1:] if r["step"] == 5) == 3


def test_fixture_prefix_paths(capsys):
    code, _, _ = run(["route", "--scenario", "fixture:interference9.ndjson"], capsys)
    assert code == EXIT_OK


def test_missing_file_json_error(capsys):
    code, out, err = run(["--json-errors", "route", "--scenario", "/nonexistent.ndjson"], capsys)
    assert code == EXIT_FAIL and out == ""
    assert "error" in json.loads(err)


def test_parse_error_carries_line(tmp_path, capsys):
    bad = tmp_path / "bad.ndjson"
    bad.write_text(fixture_path("venue_gwp4.ndjson").read_text().replace('"t": 0.0', '"t": 0.0,,', 1))
    code, _, err = run(["--json-errors", "gwp", "--scenario", str(bad)], capsys)
    assert code == EXIT_FAIL
    e = json.loads(err)
    assert e["error"] == "parse-error" and e["line"] == 2


def test_usage_errors(capsys):
    code, _, err = run(["--json-errors", "route"], capsys)
    assert code == EXIT_USAGE and json.loads(err)["error"] == "usage"
    assert run([], capsys)[0] == EXIT_USAGE
    assert run(["scenario-gen"], capsys)[0] == EXIT_USAGE
    assert run(["route", "--scenario", fx("reference_case.ndjson"), "--metric", "bogus"], capsys)[0] == EXIT_USAGE


def test_version_subprocess():
    r = subprocess.run([sys.executable, "-m", "aeronet.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0
    assert "netplan:default" in r.stdout and "kernels:" in r.stdout


@pytest.mark.parametrize("name", PIPELINES)
def test_pipeline_end_to_end(tmp_path, name):
    cfg = PipelineConfig.from_json(fixture_path(f"pipeline_{name}.json"))
    manifests = []
    for k in range(2):
        cfg.out_dir = str(tmp_path / f"run{k}")
        manifests.append(run_pipeline(cfg))
    m = manifests[0]
    assert [s["stage"] for s in m["stages"]] == ["netplan", "trajectories", "gwp", "schedule", "simulate"]
    assert manifests[0] == manifests[1]
    for f in STAGE_FILES.values():
        a = (tmp_path / "run0" / f).read_bytes()
        assert a == (tmp_path / "run1" / f).read_bytes()
        assert m["input_hash"].encode() in a
    summary = json.loads((tmp_path / "run0" / "summary.json").read_text())
    assert summary["aggregate_bits"] > 0


def test_homogeneous_pipeline_spread(tmp_path):
    cfg = PipelineConfig.from_json(fixture_path("pipeline_netplan_homogeneous.json"))
    cfg.out_dir = str(tmp_path)
    run_pipeline(cfg)
    recs = [json.loads(x) for x in (tmp_path / "netplan.ndjson").read_text().splitlines()[1:]]
    last = max(r["step"] for r in recs)
    pts = [(r["x"], r["y"]) for r in recs if r["step"] == last]
    nn = [min(((ax - bx) ** 2 + (ay - by) ** 2) ** 0.5 for j, (bx, by) in enumerate(pts) if j != i)
          for i, (ax, ay) in enumerate(pts)]
    assert max(nn) - min(nn) < 0.2 * 100


def test_pipeline_failure_leaves_partial(tmp_path, capsys):
    cfg = json.loads(fixture_path("pipeline_netplan_concentrated.json").read_text())
    # demand source 4 has no FMAP in a three-FMAP scenario
    cfg["demands"] = fx("venue_gwp4_demands.ndjson")
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    code, _, err = run(["--json-errors", "pipeline", "--config", str(p), "--out-dir", str(tmp_path / "out")], capsys)
    assert code == EXIT_FAIL
    assert json.loads(err)["stage"] == "trajectories"
    assert sorted(x.name for x in (tmp_path / "out").iterdir()) == ["netplan.ndjson.partial"]


def test_pipeline_config_rejects_unknown_keys(tmp_path, capsys):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"scenario": "x", "zones": "y", "bogus": 1}))
    assert run(["pipeline", "--config", str(p)], capsys)[0] == EXIT_FAIL
