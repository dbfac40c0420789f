import json

import pytest

from chainmatch.cli import EXIT_IO, EXIT_OK, EXIT_TIMEOUT, EXIT_VALIDATION, main


@pytest.fixture()
def inst_path(tmp_path):
    assert main(["gen", "--n-users", "80", "--n-stations", "5", "--seed", "2",
                 "--out-dir", str(tmp_path)]) == EXIT_OK
    return tmp_path / "instance.json"


def test_enumerate_and_solve(tmp_path, inst_path, capsys):
    assert main(["enumerate", str(inst_path), "--depth", "4", "--out-dir", str(tmp_path)]) == EXIT_OK
    stats = json.loads(capsys.readouterr().out)
    assert set(stats["by_length"]) == {"2", "3", "4"}
    assert main(["solve", str(inst_path), "--model", "max-profit", "--alpha", "0.3",
                 "--out-dir", str(tmp_path)]) == EXIT_OK
    doc = json.loads((tmp_path / "solution.json").read_text())
    assert doc["objective"] == {"kind": "max-profit", "alpha": 0.3} and doc["optimal"]


def test_simulate(tmp_path, inst_path):
    main(["solve", str(inst_path), "--out-dir", str(tmp_path)])
    assert main(["simulate", str(inst_path), str(tmp_path / "solution.json"), "--n-samples", "500",
                 "--seed", "1", "--trace", "--out-dir", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "sim.json").read_text())
    assert rep["n_samples"] == 500
    assert len((tmp_path / "trace.csv").read_text().splitlines()) == 501


def test_sweep_requires_seed(tmp_path, inst_path, capsys):
    assert main(["sweep", str(inst_path), "--out-dir", str(tmp_path)]) == EXIT_VALIDATION
    assert "seed" in capsys.readouterr().err


def test_sweep_and_report(tmp_path, inst_path):
    out = tmp_path / "rep"
    assert main(["sweep", str(inst_path), "--seed", "4", "--alphas", "0.2,0.8", "--cost-factors",
                 "0.2,0.6", "--n-samples", "100", "--out-dir", str(out)]) == EXIT_OK
    assert main(["report", str(out / "sweep.json"), "--out-dir", str(tmp_path / "again")]) == EXIT_OK
    assert (out / "table.csv").read_bytes() == (tmp_path / "again" / "table.csv").read_bytes()


def test_timeout_exit_code(tmp_path):
    main(["gen", "--n-users", "300", "--n-stations", "10", "--seed", "1", "--out-dir", str(tmp_path)])
    rc = main(["solve", str(tmp_path / "instance.json"), "--model", "max-service",
               "--timeout-s", "0", "--out-dir", str(tmp_path)])
    assert rc == EXIT_TIMEOUT
    assert json.loads((tmp_path / "solution.json").read_text())["status"] == "timeout"


def test_missing_file_is_io_error(tmp_path):
    assert main(["solve", str(tmp_path / "nope.json")]) == EXIT_IO


def test_bad_depth_is_validation_error(inst_path):
    assert main(["enumerate", str(inst_path), "--depth", "9"]) == EXIT_VALIDATION


def test_ingest(tmp_path):
    csv = tmp_path / "t.csv"
    csv.write_text("user_id,pickup_zone,dropoff_zone,pickup_time,dropoff_time,fare\n"
                   "a,Z1,Z2,2024-01-01T08:00,2024-01-01T08:12,10\n"
                   "b,Z2,Z1,2024-01-01T08:12,2024-01-01T08:25,8\n"
                   "c,Z1,Z1,2024-01-01T08:02,2024-01-01T08:30,9\n")
    assert main(["ingest", str(csv), "--seed", "1", "--out-dir", str(tmp_path)]) == EXIT_OK
    doc = json.loads((tmp_path / "instance.json").read_text())
    assert doc["round_trip_count"] == 1 and len(doc["trips"]) == 2
