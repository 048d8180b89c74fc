import json

from click.testing import CliRunner

from presaise.service.cli import main


def test_gen_ingest_optimize_round_trip(tmp_path):
    runner = CliRunner()
    csv_path = tmp_path / "m.csv"
    data_dir = tmp_path / "state"

    r = runner.invoke(main, ["gen-data", str(csv_path), "--seed", "3",
                             "--rows", "400"])
    assert r.exit_code == 0, r.output
    assert csv_path.exists()
    assert csv_path.with_suffix(".truth.json").exists()

    r = runner.invoke(main, ["--data-dir", str(data_dir), "ingest",
                             str(csv_path), "--json"])
    assert r.exit_code == 0, r.output
    assert json.loads(r.output) == {"markets": ["DTW-JFK"]}

    r = runner.invoke(main, ["--data-dir", str(data_dir), "optimize",
                             "DTW", "JFK", "--rules", "1", "--json"])
    assert r.exit_code == 0, r.output
    doc = json.loads(r.output)
    assert doc["m"] == 1
    assert len(doc["rules"]) == 1
    assert doc["rules"][0]["conditions"] == {}

    r = runner.invoke(main, ["--data-dir", str(data_dir), "optimize",
                             "DTW", "JFK", "--rules", "2",
                             "--min-price", "450", "--json"])
    assert r.exit_code == 0, r.output
    doc = json.loads(r.output)
    assert all(rule["price"] >= 450 for rule in doc["rules"])


def test_optimize_unknown_market_exits_2(tmp_path):
    runner = CliRunner()
    r = runner.invoke(main, ["--data-dir", str(tmp_path / "empty"),
                             "optimize", "AAA", "BBB"])
    assert r.exit_code == 2
    assert "no such market" in r.output


def test_ingest_missing_file_fails(tmp_path):
    runner = CliRunner()
    r = runner.invoke(main, ["--data-dir", str(tmp_path), "ingest",
                             str(tmp_path / "nope.csv")])
    assert r.exit_code != 0
