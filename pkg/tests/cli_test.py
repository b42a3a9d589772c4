""" Testing `experiment_cli.py` commands. """

import json

import pytest

from ..constants import EXIT_OK, EXIT_IO, EXIT_DOMAIN, EXIT_USAGE
from ..mdp_core import ModelFormatError, model_to_document
from ..finite_horizon import backward_induction
from ..report_writer import read_value_table
from ..runner import toggle2_path
from ..experiment_cli import *


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def stay_file(tmp_path):
    return write(tmp_path / "stay.json", {"indexing": "remaining-horizon",
                                          "horizon": 2,
                                          "actions": [[0, 0], [0, 0]]})


def test_model_round_trip(tmp_path, toggle):
    path = str(tmp_path / "m.json")
    save_model(load_model(toggle2_path), path)
    assert load_model(path) == toggle


def test_validate(capsys):
    assert run_cli(["validate", toggle2_path]) == EXIT_OK
    assert "valid" in capsys.readouterr().out


def test_validate_short_row(tmp_path, toggle, capsys):
    doc = model_to_document(toggle)
    doc["transitions"][0][1] = [0.0, 0.9]
    path = write(tmp_path / "bad.json", doc)
    assert run_cli(["validate", path]) == EXIT_DOMAIN
    assert "x=0, a=1" in capsys.readouterr().out
    assert run_cli(["solve", path, "-H", "2"]) == EXIT_DOMAIN
    assert "row sums to 0.9" in capsys.readouterr().err


def test_missing_and_malformed_files(tmp_path):
    assert run_cli(["solve", str(tmp_path / "none.json"), "-H", "2"]) == EXIT_IO
    broken = tmp_path / "broken.json"
    broken.write_text("{ not json")
    assert run_cli(["validate", str(broken)]) == EXIT_IO
    assert run_cli(["validate", write(tmp_path / "x.json", {"gamma": 0.5})]) \
        == EXIT_IO


def test_undecodable_and_misshapen_models(tmp_path, toggle):
    latin = tmp_path / "latin.json"
    latin.write_bytes(b'{"name": "\xff\xfe"}')
    assert run_cli(["validate", str(latin)]) == EXIT_IO

    doc = model_to_document(toggle)
    doc["rewards"] = 5
    assert run_cli(["validate", write(tmp_path / "r.json", doc)]) == EXIT_IO
    doc = model_to_document(toggle)
    doc["transitions"] = 5
    assert run_cli(["solve", write(tmp_path / "p.json", doc), "-H", "1"]) \
        == EXIT_IO
    doc = model_to_document(toggle)
    doc["rewards"][1] = 3.0
    assert run_cli(["validate", write(tmp_path / "row.json", doc)]) == EXIT_IO


def test_usage_errors():
    assert run_cli(["solve", toggle2_path, "-H", "2", "--frobnicate"]) \
        == EXIT_USAGE
    assert run_cli([]) == EXIT_USAGE
    assert run_cli(["online", toggle2_path, "-H", "2",
                    "--supervisor", "psychic"]) == EXIT_USAGE
    assert run_cli(["pips-async", toggle2_path, "-H", "2",
                    "--schedule", "sometimes"]) == EXIT_USAGE


def test_help():
    assert run_cli(["--help"]) == EXIT_OK


def test_domain_errors(stay_file):
    assert run_cli(["solve", toggle2_path, "-H", "0"]) == EXIT_DOMAIN
    assert run_cli(["pips-sync", toggle2_path, "-H", "3",
                    "--init", stay_file]) == EXIT_DOMAIN


def test_solve(tmp_path, capsys):
    out = str(tmp_path / "opt.json")
    assert run_cli(["solve", toggle2_path, "--horizon", "2", "-o", out]) \
        == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert "V*_1 = (1, 2)" in lines
    assert "V*_2 = (2, 3)" in lines
    assert "sigma[2] = (1, 0)" in lines
    doc = json.loads(open(out).read())
    assert doc["indexing"] == "remaining-horizon"
    assert doc["actions"] == [[1, 0], [1, 0]]


def test_solve_with_terminal(tmp_path, capsys):
    terminal = write(tmp_path / "v0.json", [3.0, 4.0])
    assert run_cli(["solve", toggle2_path, "-H", "1",
                    "--terminal", terminal]) == EXIT_OK
    assert "V*_1 = (3, 4)" in capsys.readouterr().out


def test_value_tables_are_written(tmp_path, toggle, stay_file):
    solved, synced = str(tmp_path / "v.json"), str(tmp_path / "s.json")
    assert run_cli(["solve", toggle2_path, "-H", "2",
                    "--values", solved]) == EXIT_OK
    doc = json.loads(open(solved).read())
    assert doc["indexing"] == "remaining-horizon"
    assert doc["horizon"] == 2
    assert doc["values"] == [[0.0, 0.0], [1.0, 2.0], [2.0, 3.0]]
    assert read_value_table(solved) == backward_induction(toggle, 2)[0]

    assert run_cli(["pips-sync", toggle2_path, "-H", "2", "--init",
                    stay_file, "--values", synced]) == EXIT_OK
    assert read_value_table(synced) == read_value_table(solved)


def test_pips_async_writes_reports(tmp_path, stay_file, capsys):
    reports = tmp_path / "r.jsonl"
    assert run_cli(["pips-async", toggle2_path, "-H", "2", "--init",
                    stay_file, "--schedule", "improvable",
                    "--reports", str(reports)]) == EXIT_OK
    steps = capsys.readouterr().out.splitlines()[0]
    lines = [json.loads(line) for line in reports.read_text().splitlines()]
    assert steps.startswith(f"steps: {len(lines)} ")
    first = lines[0]
    assert first["state"] == 0
    assert sorted(first["changed_pairs"]) == [[1, 0, 0, 1], [2, 0, 0, 1]]
    assert first["value_gain"] == [2.0, 0.0]
    assert first["fallback"] is None


def test_foreign_value_indexing_is_rejected(tmp_path):
    path = write(tmp_path / "v.json", {"indexing": "elapsed-time",
                                       "values": [[0.0], [1.0]]})
    with pytest.raises(ModelFormatError):
        read_value_table(path)


def test_pips_sync(stay_file, capsys):
    assert run_cli(["pips-sync", toggle2_path, "-H", "2",
                    "--init", stay_file]) == EXIT_OK
    out = capsys.readouterr().out
    assert "iterations: 1" in out
    assert "V_2 = (2, 3)" in out


def test_pips_sync_agrees_with_solve(tmp_path, capsys):
    model = str(tmp_path / "m.json")
    assert run_cli(["gen", "--states", "5", "--actions", "3", "--seed", "4",
                    "-o", model]) == EXIT_OK
    run_cli(["solve", model, "-H", "3"])
    solved = capsys.readouterr().out.splitlines()
    run_cli(["pips-sync", model, "-H", "3", "--seed", "9"])
    synced = capsys.readouterr().out.splitlines()
    top = [line for line in solved if line.startswith("V*_3")][0]
    assert top.replace("V*_3", "V_3") in synced


def test_pips_async(tmp_path, stay_file, capsys):
    schedule = tmp_path / "sched.txt"
    schedule.write_text("1 1\n1\n")
    assert run_cli(["pips-async", toggle2_path, "-H", "2", "--init",
                    stay_file, "--schedule", f"file:{schedule}",
                    "--steps", "10"]) == EXIT_OK
    assert "terminated: no" in capsys.readouterr().out
    assert run_cli(["pips-async", toggle2_path, "-H", "2", "--init",
                    stay_file, "--schedule", "improvable"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "terminated: yes" in out
    assert "V_2 = (2, 3)" in out
    assert run_cli(["pips-async", toggle2_path, "-H", "2",
                    "--schedule", "embedded", "--seed", "3"]) == EXIT_OK
    assert "terminated: yes" in capsys.readouterr().out


def test_online(tmp_path, capsys):
    trace = tmp_path / "t.jsonl"
    assert run_cli(["online", toggle2_path, "-H", "2", "--steps", "10",
                    "--seed", "1", "--supervisor", "null",
                    "--trace", str(trace)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "local optimality: locally-optimal over class {1}" in out
    lines = [json.loads(line) for line in trace.read_text().splitlines()]
    summary = lines[-1]
    assert summary["summary"] is True
    assert summary["stabilization_step"] is not None
    assert summary["local_optimality"]["class"] == [1]
    assert all(line["k"] == i for i, line in enumerate(lines[:-1], start=1))


def test_online_with_supervisors(capsys):
    assert run_cli(["online", toggle2_path, "-H", "2", "--steps", "30",
                    "--supervisor", "oracle", "--supervisor", "adversarial",
                    "--supervisor", "random"]) == EXIT_OK
    assert "global optimality: yes" in capsys.readouterr().out


def test_analyze(tmp_path, capsys):
    assert run_cli(["analyze", toggle2_path]) == EXIT_OK
    assert "communicating: unknown" in capsys.readouterr().out
    assert run_cli(["analyze", toggle2_path, "--exhaustive"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "communicating: no" in out
    assert "witness: (0, 0)" in out

    policy = str(tmp_path / "opt.json")
    run_cli(["solve", toggle2_path, "-H", "2", "-o", policy])
    capsys.readouterr()
    assert run_cli(["analyze", toggle2_path, "--policy", policy]) == EXIT_OK
    out = capsys.readouterr().out
    assert "class {0}: transient" in out
    assert "class {1}: recurrent" in out
    assert "improvable pairs: 0" in out


def test_errorbound(tmp_path, capsys):
    csv_path = tmp_path / "err.csv"
    assert run_cli(["errorbound", toggle2_path, "--hmin", "1", "--hmax", "3",
                    "-o", str(csv_path)]) == EXIT_OK
    rows = csv_path.read_text().splitlines()
    assert rows[0] == "H,error"
    assert [row.split(",")[0] for row in rows[1:]] == ["1", "2", "3"]
    assert run_cli(["errorbound", toggle2_path, "--hmin", "3", "--hmax", "1",
                    "-o", str(csv_path)]) == EXIT_DOMAIN


def test_gen_is_reproducible(tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    for path in (first, second):
        assert run_cli(["gen", "--states", "4", "--actions", "2", "--positive",
                        "--seed", "7", "-o", str(path)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    assert run_cli(["validate", str(first)]) == EXIT_OK
    assert run_cli(["gen", "--states", "4", "--actions", "2", "--positive",
                    "--absorbing", "1", "-o", str(first)]) == EXIT_DOMAIN
