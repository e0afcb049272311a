from __future__ import annotations

import json

import numpy as np
import pytest

from bregmi.config import RunConfig
from bregmi.divergence import GsbParams
from bregmi.errors import ParseError, SchemaError
from bregmi.io import emit_result, load_samples, read_csv_table, result_to_dict, write_document
from bregmi.robustness import ges_curve, normal_null_model
from bregmi.simulation import MODEL0, MODEL1, ScenarioSpec, run_table
from bregmi.testing import TwoSampleData, run_test
from bregmi.tuning import GridSearch, select_tuning


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(3)
    return TwoSampleData(rng.normal(0, 1, 40), rng.normal(0.8, 1, 35))


def _write(path, text):
    path.write_text(text)
    return path


class TestLoad:
    def test_group_file(self, tmp_path, data):
        lines = ["group,y"] + [f"0,{float(v)!r}" for v in data.y0] + [f"1,{float(v)!r}" for v in data.y1]
        got = load_samples(_write(tmp_path / "d.csv", "\n".join(lines) + "\n"))
        np.testing.assert_array_equal(got.y0, data.y0)
        np.testing.assert_array_equal(got.y1, data.y1)

    def test_two_files(self, tmp_path, data):
        a = _write(tmp_path / "a.csv", "id,y\n" + "".join(f"{i},{float(v)!r}\n" for i, v in enumerate(data.y0)))
        b = _write(tmp_path / "b.csv", "Y\n" + "".join(f"{float(v)!r}\n" for v in data.y1))
        got = load_samples([a, b])
        np.testing.assert_array_equal(got.y0, data.y0)
        np.testing.assert_array_equal(got.y1, data.y1)

    def test_blank_lines_skipped(self, tmp_path):
        got = load_samples(_write(tmp_path / "d.csv", "group,y\n\n0,1\n0,2\n\n1,3\n1,4\n"))
        assert got.n0 == 2 and got.n1 == 2

    @pytest.mark.parametrize(
        "body, line",
        [
            ("group,y\n0,1\n0,abc\n1,2\n1,3\n", 3),
            ("group,y\n0,1\n0,2\n1,2\n2,3\n", 5),
            ("group,y\n0,1\n0,nan\n1,2\n1,3\n", 3),
            ("group,y\n0,1\n0,2\n1,inf\n1,3\n", 4),
            ("group,y\n0,1\n0\n1,2\n1,3\n", 3),
        ],
    )
    def test_parse_errors_carry_line(self, tmp_path, body, line):
        with pytest.raises(ParseError) as exc:
            load_samples(_write(tmp_path / "d.csv", body))
        assert exc.value.line == line
        assert f"line {line}" in str(exc.value)

    def test_missing_column(self, tmp_path):
        with pytest.raises(SchemaError):
            load_samples(_write(tmp_path / "d.csv", "grp,y\n0,1\n"))
        with pytest.raises(SchemaError):
            load_samples(_write(tmp_path / "e.csv", ""))

    def test_file_count(self, tmp_path):
        p = _write(tmp_path / "d.csv", "y\n1\n2\n")
        with pytest.raises(ValueError):
            load_samples([p, p, p])


class TestEmit:
    def test_test_json_round_trip(self, data):
        cfg = RunConfig(seed=4)
        res = run_test(data, GsbParams(0.5, 0.25, -0.05), cfg)
        doc = json.loads(emit_result(res, cfg, "json"))
        assert doc["kind"] == "test"
        assert doc["t_hat"] == res.t_hat and doc["p_value"] == res.p_value
        assert doc["params"] == {"alpha": 0.5, "lambda": 0.25, "beta": -0.05, "A": 1.125, "B": 0.375}
        assert doc["config"] == cfg.to_dict()

    def test_test_csv(self, data):
        res = run_test(data, GsbParams(0.5, 0.0))
        text = emit_result(res, fmt="csv")
        assert text.startswith("# config: {")
        header, row = read_csv_table(text)
        rec = dict(zip(header, row))
        assert float(rec["p_value"]) == res.p_value
        assert rec["param_alpha"] == "0.5"

    def test_table_csv_layout(self):
        spec = ScenarioSpec(MODEL0, MODEL1, n0=30, n1=30, replications=4)
        alphas = (0.1, 0.5, 1.0)
        table = run_table(spec, alphas, (0.0, 1.0))
        rows = read_csv_table(emit_result(table, fmt="csv"))
        assert [float(v) for v in rows[0][1:]] == list(alphas)
        assert [float(r[0]) for r in rows[1:]] == [0.0, 1.0]
        got = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
        np.testing.assert_array_equal(got, table.cells)
        doc = json.loads(emit_result(table, fmt="json"))
        assert doc["cells"] == table.cells.tolist() and len(doc["data_hashes"]) == 4

    def test_tuning_documents(self, data):
        s = select_tuning(data, GsbParams(0.5, 0), GridSearch([GsbParams(a, 0) for a in (0.2, 0.6)]), 50)
        doc = result_to_dict(s)
        assert doc["kind"] == "tuning" and len(doc["entries"]) == 2
        rows = read_csv_table(emit_result(s, fmt="csv"))
        assert rows[0] == ["alpha", "lambda", "beta", "p_hat", "risk"] and len(rows) == 3

    def test_robustness_documents(self):
        rep = ges_curve(GsbParams(0.5, 0), normal_null_model(), n_eval=21)
        doc = json.loads(emit_result(rep, fmt="json"))
        assert doc["kind"] == "robustness" and doc["region"] == "S1"
        assert doc["breakdown"] == pytest.approx(1 / 3)
        assert len(doc["curve"]["y0"]) == rep.y0.size
        rows = read_csv_table(emit_result(rep, fmt="csv"))
        assert rows[0] == ["y0", "if2"] and len(rows) == rep.y0.size + 1

    def test_bad_format_and_type(self, data):
        res = run_test(data, GsbParams(0.5, 0))
        with pytest.raises(ValueError):
            emit_result(res, fmt="xml")
        with pytest.raises(TypeError):
            result_to_dict(object())

    def test_write_document(self, tmp_path, capsys):
        write_document("abc\n", tmp_path / "sub" / "o.txt")
        assert (tmp_path / "sub" / "o.txt").read_text() == "abc\n"
        write_document("xyz\n", None)
        assert capsys.readouterr().out == "xyz\n"
