import json

import pytest

from cp_geodesics.cli import run


def test_quotient(capsys):
    assert run(["quotient", "--point", "3,0"]) == 0
    assert capsys.readouterr().out == "1.5,0 k=1\n"


def test_quotient_json(capsys):
    assert run(["quotient", "--point", "0.2,0.1", "--format", "json"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["k"] == -3
    assert record["u"] == pytest.approx(1.6)


def test_classify_analytic_only(capsys):
    assert run(["classify", "--ic", "1,1,1,1", "--no-numeric"]) == 0
    header, row = capsys.readouterr().out.splitlines()
    assert header.split(",")[:6] == ["alpha", "beta", "x", "y", "P", "analytic"]
    assert row.split(",")[4:6] == ["2", "Complete"]


def test_classify_json(capsys):
    assert run(["classify", "--ic", "1,0,1,0", "--t-end", "2", "--format", "json"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["P"] is None
    assert record["analytic"] == "Complete"
    assert record["numeric"] == "Complete"
    assert record["agree"] is True
    assert len(record["exceptional_times"]) == 1


def test_trace(capsys, tmp_path):
    out = tmp_path / "trace.json"
    assert run(["trace", "--ic", "1,0,1,0", "--t-end", "2", "--format", "json", "--out", str(out)]) == 0
    document = json.loads(out.read_text())
    assert document["metadata"]["status"] == "reached_end"
    assert abs(document["metadata"]["exceptional_times"][0] - 1) < 0.05
    last = document["rows"][-1]
    assert last["t_re"] == 2 and last["t_im"] == 0
    assert last["u_re"] == pytest.approx(-1, abs=1e-8)


def test_trace_csv_footer(capsys):
    assert run(["trace", "--ic", "1,1,1,1", "--t-end", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("t_re,t_im,u_re,u_im")
    assert lines[-1].startswith("# metadata ")
    metadata = json.loads(lines[-1][len("# metadata "):])
    assert metadata["P"] == 2
    assert metadata["exceptional_times"] == []


def test_output_is_reproducible(capsys):
    run(["trace", "--ic", "1,2,1,1", "--t-end", "1.5"])
    first = capsys.readouterr().out
    run(["trace", "--ic", "1,2,1,1", "--t-end", "1.5"])
    assert capsys.readouterr().out == first


def test_sweep_rows(capsys):
    argv = ["sweep", "--ic", "1,1,1,-1", "--ic", "1,1,1,0.5", "--ic", "1,1,1,1", "--no-numeric"]
    assert run(argv) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 4
    assert [line.split(",")[5] for line in lines[1:]] == ["Incomplete", "Incomplete", "Complete"]


def test_sweep_validate_skipped_rows(capsys):
    argv = ["sweep", "--grid", "alpha=1:1:1", "--grid", "beta=1:1:1", "--grid", "x=1:1:1",
            "--grid", "y=1:1:1", "--validate"]
    assert run(argv) == 0
    assert "total=1 compared=0" in capsys.readouterr().err


def test_sweep_skips_stationary_point(capsys):
    argv = ["sweep", "--grid", "alpha=1:1:1", "--grid", "beta=1:1:1", "--grid", "x=-1:1:3",
            "--grid", "y=-1:1:3", "--no-numeric"]
    assert run(argv) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1 + 8


def test_classify_incomplete(capsys):
    assert run(["classify", "--ic", "1,1,1,0.5", "--t-end", "5", "--format", "json"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["P"] == 2.25
    assert record["analytic"] == "Incomplete"
    assert record["numeric"] == "Incomplete"
    assert record["agree"] is True


def test_null_form(capsys):
    assert run(["null-form", "--ic", "1,1,2,0", "--t-end", "4", "--format", "json"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["kind"] == "tangent"
    assert record["moving"] == "u"
    assert len(record["poles"]) == 3


@pytest.mark.parametrize("argv", [
    ["trace", "--ic", "1,2"],
    ["classify", "--ic", "0,0,1,1"],
    ["classify", "--ic", "1,1,0,0"],
    ["null-form", "--ic", "1,1,1,1"],
    ["sweep", "--grid", "alpha=1:1:1"],
    ["sweep"],
    ["quotient", "--point", "0,0"],
    ["trace", "--ic", "1,1,1,1", "--order", "zero"],
    ["trace"],
    ["classify", "--ic", "1,1,1,1", "--format", "xml"],
    ["quotient", "--point", "3,0", "--bogus"],
])
def test_usage_errors(argv, capsys):
    assert run(argv) == 1
    err = capsys.readouterr().err
    assert "error:" in err
