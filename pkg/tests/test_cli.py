"""Command-line behavior: flags, formats, determinism, exit codes."""

import json
import urllib.request

import pytest

from evsikit.cli import build_parser, build_server, main

EXAMPLE_STATS = "fixtures/channel_stats_example.json"
DEMO_STATS = "fixtures/channel_stats_demo.json"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("clidata")
    raw = root / "raw.csv"
    assert main([
        "gen", "--features", "3", "--classes", "1", "--sims", "8", "--samples", "6",
        "--informative", "X1", "--seed", "3", "--out", str(raw),
    ]) == 0
    out_dir = root / "splits"
    assert main([
        "split", "--train", str(raw), "--spec", "4,4,3,3,0,0", "--out-dir", str(out_dir),
    ]) == 0
    return out_dir


# -------------------------------------------------------------- exit codes


def test_no_arguments_is_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 2


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        main(["rank", "--stats", EXAMPLE_STATS, "--cost-r", "1", "--cost-p", "8", "--bogus"])
    assert err.value.code == 2


def test_missing_stats_file_exits_one(capsys):
    code, _, err = run_cli(capsys, "rank", "--stats", "no/such/file.json",
                           "--cost-r", "1", "--cost-p", "8")
    assert code == 1
    assert err.startswith("error:")


def test_malformed_stats_file_exits_one(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"priors": {}}', encoding="utf-8")
    code, _, err = run_cli(capsys, "rank", "--stats", str(bad), "--cost-r", "1", "--cost-p", "8")
    assert code == 1
    assert "error:" in err


def test_missing_validation_split_exits_one(capsys, tmp_path):
    code, _, err = run_cli(capsys, "train", "--data", str(tmp_path))
    assert code == 1
    assert "validation.csv" in err or "train.csv" in err


# -------------------------------------------------------------------- rank


def test_rank_table_matches_worked_example(capsys):
    code, out, _ = run_cli(capsys, "rank", "--stats", EXAMPLE_STATS,
                           "--cost-r", "1", "--cost-p", "8")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].split() == ["sensor", "EVSI", "Action", "(Signal)", "Action", "(No", "Signal)"]
    assert lines[2].split() == ["S1", "0.05", "fix", "no_fix"]
    assert [ln.split()[0] for ln in lines[2:]] == ["S1", "S2", "S3"]


def test_rank_json_round_trips(capsys):
    code, out, _ = run_cli(capsys, "rank", "--stats", EXAMPLE_STATS,
                           "--cost-r", "1", "--cost-p", "8", "--output-format", "json")
    assert code == 0
    doc = json.loads(out)
    top = doc["rankings"][0]
    assert top["sensor"] == "S1"
    assert top["evsi"] == pytest.approx(0.05, abs=1e-12)
    assert top["baseline_cost"] == pytest.approx(0.5, abs=1e-12)
    assert top["action_on_signal"] == "fix"


def test_rank_flatfix_convention(capsys):
    _, out, _ = run_cli(capsys, "rank", "--stats", EXAMPLE_STATS, "--cost-r", "1",
                        "--cost-p", "8", "--convention", "flatfix",
                        "--output-format", "json")
    top = json.loads(out)["rankings"][0]
    assert top["sensor"] == "S1"
    assert top["evsi"] == pytest.approx(0.1, abs=1e-12)
    assert top["baseline_cost"] == pytest.approx(1.0, abs=1e-12)


def test_rank_csv_format(capsys):
    _, out, _ = run_cli(capsys, "rank", "--stats", EXAMPLE_STATS,
                        "--cost-r", "1", "--cost-p", "8", "--output-format", "csv")
    lines = out.strip().splitlines()
    assert lines[0] == "sensor,EVSI,Action (Signal),Action (No Signal)"
    assert lines[1].startswith("S1,0.05,fix,no_fix")


# ------------------------------------------------------------------- sweep


def test_sweep_sections_sorted_descending(capsys):
    _, out, _ = run_cli(capsys, "sweep", "--stats", EXAMPLE_STATS, "--cost-r", "1",
                        "--ratios", "2,4,8,16", "--output-format", "json")
    doc = json.loads(out)
    assert doc["ratios"] == [2.0, 4.0, 8.0, 16.0]
    assert len(doc["sections"]) == 4
    for section in doc["sections"]:
        evsis = [row["evsi"] for row in section["rows"]]
        assert evsis == sorted(evsis, reverse=True)
    ratio2 = {r["sensor"]: r["evsi"] for r in doc["sections"][0]["rows"]}
    assert ratio2["S1"] == pytest.approx(0.35, abs=1e-12)
    assert ratio2["S2"] == pytest.approx(0.20, abs=1e-12)
    saturated = doc["sections"][-1]["rows"]
    assert all(r["action_on_no_signal"] == "fix" for r in saturated)
    assert all(abs(r["evsi"]) < 1e-12 for r in saturated)


def test_sweep_rejects_bad_ratios(capsys):
    with pytest.raises(SystemExit) as err:
        main(["sweep", "--stats", EXAMPLE_STATS, "--cost-r", "1", "--ratios", "2,x"])
    assert err.value.code == 2


# -------------------------------------------------------------- gen / split


def test_gen_is_deterministic(capsys, tmp_path):
    args = ["gen", "--features", "3", "--classes", "1", "--sims", "4", "--samples", "3",
            "--informative", "X1", "--seed", "11"]
    main(args + ["--out", str(tmp_path / "a.csv")])
    main(args + ["--out", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_split_writes_three_files(data_dir):
    for name in ("train.csv", "validation.csv", "test.csv"):
        assert (data_dir / name).exists()


def test_split_reports_counts(capsys, tmp_path):
    raw = tmp_path / "raw.csv"
    main(["gen", "--features", "2", "--classes", "1", "--sims", "6", "--samples", "2",
          "--informative", "X1", "--seed", "0", "--out", str(raw)])
    code, out, _ = run_cli(capsys, "split", "--train", str(raw), "--spec", "3,3,2,2,0,0",
                           "--out-dir", str(tmp_path / "out"))
    assert code == 0
    assert "train: 12 rows" in out
    assert "validation: 8 rows" in out
    assert "test: 0 rows" in out


# ------------------------------------------------------------------- train


def test_train_table_reports_accuracy_and_confusion(capsys, data_dir):
    code, out, _ = run_cli(capsys, "train", "--data", str(data_dir))
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("accuracy,")
    assert float(lines[0].split(",")[1]) >= 0.8
    assert lines[1] == "0,1"


def test_train_json_with_cv(capsys, data_dir):
    code, out, _ = run_cli(capsys, "train", "--data", str(data_dir),
                           "--features", "X1,X2", "--cv", "--output-format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["features"] == ["X1", "X2"]
    assert 0.0 <= doc["accuracy"] <= 1.0
    assert len(doc["confusion"]) == 2
    assert doc["inverse_regularization_C"] in [0.1, 1.0, 10.0, 100.0, 1000.0]
    assert len(doc["cv_mean_accuracies"]) == 5


# ------------------------------------------------------------------ select


def test_select_mask_json_sorted(capsys, data_dir):
    code, out, _ = run_cli(capsys, "select", "mask", "--data", str(data_dir),
                           "--output-format", "json")
    assert code == 0
    doc = json.loads(out)
    deltas = [e["accuracy_delta"] for e in doc["entries"]]
    assert deltas == sorted(deltas, reverse=True)
    assert doc["entries"][0]["feature"] == "X1"


def test_select_forward_honors_budget(capsys, data_dir):
    code, out, _ = run_cli(capsys, "select", "forward", "--data", str(data_dir),
                           "--base", "X2", "--candidates", "X1,X3", "--budget", "1",
                           "--output-format", "json")
    assert code == 0
    doc = json.loads(out)
    assert len(doc["deployed"]) == 1
    assert doc["stop_reason"] == "budget_reached"


def test_select_evsi_json_byte_identical(capsys, data_dir):
    argv = ["select", "evsi", "--data", str(data_dir), "--base", "X2",
            "--candidates", "X1,X3", "--cost-r", "1", "--cost-p", "8",
            "--seed", "4", "--output-format", "json"]
    _, first, _ = run_cli(capsys, *argv)
    _, second, _ = run_cli(capsys, *argv)
    assert first == second
    doc = json.loads(first)
    assert doc["mode"] == "greedy_evsi"


def test_select_evsi_table_summary(capsys, data_dir):
    code, out, _ = run_cli(capsys, "select", "evsi", "--data", str(data_dir),
                           "--base", "X2", "--candidates", "X1,X3")
    assert code == 0
    assert "deployed:" in out
    assert "stop:" in out


def test_env_seed_matches_explicit_seed(capsys, data_dir, monkeypatch):
    argv = ["select", "evsi", "--data", str(data_dir), "--base", "X2",
            "--candidates", "X1,X3", "--output-format", "json"]
    monkeypatch.setenv("EVSI_SEED", "4")
    _, from_env, _ = run_cli(capsys, *argv)
    monkeypatch.delenv("EVSI_SEED")
    _, explicit, _ = run_cli(capsys, *(argv + ["--seed", "4"]))
    assert from_env == explicit


# ------------------------------------------------------------------- serve


def serve_args(*argv):
    return build_parser().parse_args(["serve", *argv])


def test_build_server_from_stats_file():
    service = build_server(serve_args(
        "--session", DEMO_STATS, "--backend", "stats", "--port", "0",
        "--cost-r", "1", "--cost-p", "4",
    )).start()
    try:
        with urllib.request.urlopen(f"{service.url}/api/rankings") as resp:
            doc = json.loads(resp.read())
        assert [r["sensor"] for r in doc["rankings"]] == ["M10", "X9", "M30"]
    finally:
        service.stop()


def test_build_server_resumes_saved_session(tmp_path):
    from evsikit.data import ingest_channel_stats
    from evsikit.decision import CostModel
    from evsikit.session import create_stats_session

    manager = create_stats_session(ingest_channel_stats(DEMO_STATS), CostModel(1.0, 4.0))
    manager.deploy("M10")
    path = tmp_path / "session.json"
    manager.save(path)

    service = build_server(serve_args("--session", str(path), "--port", "0")).start()
    try:
        with urllib.request.urlopen(f"{service.url}/api/rankings") as resp:
            doc = json.loads(resp.read())
        assert doc["deployed"] == ["M10"]
        assert [r["sensor"] for r in doc["rankings"]] == ["M30", "X9"]
    finally:
        service.stop()


def test_build_server_full_backend(data_dir):
    service = build_server(serve_args(
        "--session", DEMO_STATS, "--backend", "full", "--port", "0",
        "--data", str(data_dir), "--base", "X2", "--candidates", "X1,X3",
    ))
    # full backend ignores the stats file and ranks retrained candidates
    session = service.server.manager.snapshot()
    service.server.server_close()
    assert session.backend.value == "full"
    assert {r.sensor_label for r in session.latest_rankings} == {"X1", "X3"}
