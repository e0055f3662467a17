import csv
import io
import json

import pytest

from nicd import __version__
from nicd.cli import main, parse_descriptor, UsageError
from nicd.sets import Cylinder, HammingBall, write_explicit_set
from nicd.verify import window_set


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def test_bound_single_point(capsys):
    code, out, _ = run(capsys, "bound", "--epsilon", "0.5", "--delta", "0.1")
    assert code == 0
    assert out.startswith(f"# nicd {__version__}\n# subcommand: bound\n# params: ")
    rows = csv_rows(out)
    assert len(rows) == 1
    assert list(rows[0])[:5] == ["epsilon", "delta", "S", "p", "sigma_sq"]
    assert rows[0]["S"] == "13"


def test_bound_orders_curves(capsys):
    code, out, _ = run(capsys, "bound", "--epsilon", "0.5,0.1,0.001", "--delta", "0.3,0.01,0.1")
    rows = csv_rows(out)
    assert code == 0 and len(rows) == 9
    assert [r["epsilon"] for r in rows[::3]] == ["0.5", "0.1", "0.001"]
    assert [float(r["delta"]) for r in rows[:3]] == [0.01, 0.1, 0.3]


def test_bound_empty_grid_is_usage_error(capsys):
    code, _, err = run(capsys, "bound", "--epsilon", "", "--delta", "0.1")
    assert code == 2 and "error" in err


def test_bound_all_capped_exits_one(capsys):
    code, out, _ = run(capsys, "bound", "--epsilon", "0.5", "--delta", "0.01", "--s-max", "5")
    assert code == 1 and csv_rows(out)[0]["capped"] == "1"


def test_bound_trace_and_json(capsys, tmp_path):
    out_path = tmp_path / "curve.json"
    code, _, _ = run(capsys, "bound", "--epsilon", "0.5", "--delta", "0.1", "--trace", "--format", "json", "--out", str(out_path))
    data = json.loads(out_path.read_text())
    assert code == 0 and data["provenance"]["subcommand"] == "bound"
    assert [row["s"] for row in data["trace"]] == list(range(2, 14))


def test_bound_is_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        run(capsys, "bound", "--epsilon", "0.5,0.1", "--delta", "0.05,0.2", "--out", str(path))
    assert a.read_bytes() == b.read_bytes()


def test_descriptor_parsing():
    assert parse_descriptor("cylinder:s=4,n=8,k=3") == Cylinder(4, 8, 3)
    assert parse_descriptor("ball:s=3,n=20,alpha=0.5,variant=zero") == HammingBall(3, 20, 0.5, "zero")
    with pytest.raises(UsageError, match="'k'"):
        parse_descriptor("cylinder:s=4,n=8,k=three")
    with pytest.raises(UsageError, match="unknown field 'q'"):
        parse_descriptor("cylinder:s=4,n=8,q=1")
    with pytest.raises(UsageError, match="position"):
        parse_descriptor("ball:s=4,n8")


def test_evaluate_cylinder(capsys):
    code, out, _ = run(capsys, "evaluate", "cylinder:s=4,n=8,k=3", "--epsilon", "0.25")
    data = json.loads(out)
    assert code == 0 and data["reports"][0]["method"] == "closed-form"
    assert list(data)[0] == "provenance"


def test_evaluate_ball_with_n_list(capsys):
    code, out, _ = run(capsys, "evaluate", "ball:s=3,n=200,alpha=0.5", "--epsilon", "0.3", "--n", "100,200")
    reps = json.loads(out)["reports"]
    assert code == 0 and [r["n"] for r in reps] == [100, 200] and reps[1]["method"] == "dp"


def test_evaluate_malformed_descriptor(capsys):
    code, _, err = run(capsys, "evaluate", "ball:s=3,n=x,alpha=0.5", "--epsilon", "0.3")
    assert code == 2 and "'n'" in err


def test_evaluate_degenerate_is_reported(capsys):
    code, out, _ = run(capsys, "evaluate", "cylinder:s=3,n=2,k=1", "--epsilon", "0", "--format", "csv")
    assert code == 0 and csv_rows(out)[0]["degenerate"]


def test_construct_and_simulate(capsys, tmp_path):
    set_path, proto = tmp_path / "a.txt", tmp_path / "p.json"
    write_explicit_set(window_set(6, 3, 1, 6), set_path)
    code, out, _ = run(capsys, "construct", "--set", str(set_path), "--k", "1", "--epsilon", "0.3", "--seeds", "50", "--out", str(proto))
    report = json.loads(out)["report"]
    assert code == 0 and report["ratio"] >= 1 / 16 and report["uniform_output"]
    code, out, _ = run(capsys, "simulate", str(proto), "--epsilon", "0.3", "--samples", "50000", "--seed", "4")
    sim = json.loads(out)
    assert code == 0 and abs(sim["z_score"]) < 5
    assert sim["provenance"]["seed"] == 4


def test_construct_constant_protocol_and_window_warning(capsys, tmp_path):
    set_path = tmp_path / "a.txt"
    write_explicit_set(window_set(3, 3, 1, 0), set_path)
    code, out, err = run(capsys, "construct", "--set", str(set_path), "--k", "0", "--epsilon", "0.3", "--seeds", "2")
    report = json.loads(out)["report"]
    assert report["agreement"] == pytest.approx(1.0)
    assert "warning" in err and report["warning"]


def test_construct_threads_do_not_change_output(capsys, tmp_path, monkeypatch):
    set_path = tmp_path / "a.txt"
    write_explicit_set(window_set(4, 3, 1, 1), set_path)
    outs = []
    for threads in ("1", "4"):
        _, out, _ = run(capsys, "construct", "--set", str(set_path), "--k", "1", "--epsilon", "0.2", "--seeds", "12", "--threads", threads)
        outs.append(out)
    assert outs[0] == outs[1]


def test_verify_suite(capsys):
    code, out, _ = run(capsys, "verify", "noise-identity")
    assert code == 0 and "[PASS]" in out and "tolerance 1e-10" in out


def test_verify_unknown_suite(capsys):
    code, _, err = run(capsys, "verify", "nonsense")
    assert code == 2 and "unknown suite" in err


@pytest.mark.slow
def test_verify_theorem2_is_deterministic(capsys):
    first = run(capsys, "verify", "theorem2", "--seed", "3")
    second = run(capsys, "verify", "theorem2", "--seed", "3")
    assert first[0] == 0 and first == second
