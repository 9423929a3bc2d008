# stdlib
import json
import math

# third party
import pytest
import torch

from ekiflow.experiment import ResultWriter


def test_table_headers_and_values(tmp_path) -> None:
    writer = ResultWriter(tmp_path / "out")
    times = [0.0, 0.5]
    path = writer.write_table(
        "trajectory.csv",
        times,
        {
            "V_e": [1.0, 0.1],
            "m": [[1.0, 2.0], [3.0, 4.0]],
            "C": torch.arange(8, dtype=torch.float64).reshape(2, 2, 2),
        },
    )

    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,V_e,m_0,m_1,C_0_0,C_0_1,C_1_0,C_1_1"
    assert lines[1] == "0.0,1.0,1.0,2.0,0.0,1.0,2.0,3.0"
    assert lines[2] == "0.5,0.1,3.0,4.0,4.0,5.0,6.0,7.0"
    assert writer.written == [path]


def test_table_shortest_round_trip(tmp_path) -> None:
    writer = ResultWriter(tmp_path)
    path = writer.write_table("x.csv", [1 / 3], {"x": [0.1 + 0.2]})

    row = path.read_text(encoding="utf-8").splitlines()[1]
    assert row == f"{1 / 3!r},{0.1 + 0.2!r}"
    assert float(row.split(",")[1]) == 0.1 + 0.2


def test_table_row_mismatch(tmp_path) -> None:
    writer = ResultWriter(tmp_path)
    with pytest.raises(ValueError):
        writer.write_table("x.csv", [0.0, 1.0], {"x": [1.0, 2.0, 3.0]})


def test_summary(tmp_path) -> None:
    writer = ResultWriter(tmp_path)
    path = writer.write_summary(
        {
            "passed": True,
            "gap": math.inf,
            "bad": math.nan,
            "m": torch.tensor([1.0, 2.0], dtype=torch.float64),
            "checks": {"b": False, "a": True},
        }
    )

    text = path.read_text(encoding="utf-8")
    assert path.name == "summary.json"
    assert text.endswith("\n")
    summary = json.loads(text)
    assert summary["gap"] == "inf"
    assert summary["bad"] == "nan"
    assert summary["m"] == [1.0, 2.0]
    assert list(summary) == sorted(summary)
    assert list(summary["checks"]) == ["a", "b"]
