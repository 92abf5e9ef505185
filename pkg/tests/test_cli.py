"""Tests for CSV ingestion and the command-line interface."""

import json

import numpy as np
import pytest

from fundrv import tecator_like_path
from fundrv.cli import Dataset, IngestError, ingest, main


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


TINY = (
    "w_1,w_2,w_3,y,z\n"
    "1.0,2.0,3.0,10.0,0.1\n"
    "4.0,5.0,6.0,20.0,0.2\n"
    "7.0,8.0,9.0,30.0,0.3\n"
)


class TestIngest:
    def test_three_row_roundtrip(self, tmp_path):
        ds = ingest(write(tmp_path, TINY))
        assert isinstance(ds, Dataset)
        np.testing.assert_array_equal(
            ds.curves, [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]]
        )
        np.testing.assert_array_equal(ds.response, [10.0, 20.0, 30.0])
        np.testing.assert_array_equal(ds.scalars, [[0.1], [0.2], [0.3]])
        assert ds.response_name == "y"
        assert ds.scalar_names == ("z",)
        np.testing.assert_allclose(ds.grid, [0.0, 0.5, 1.0])

    def test_grid_rescaled_to_unit_interval(self, tmp_path):
        ds = ingest(write(tmp_path, "w_850,w_900,w_1050,y\n1,2,3,4\n"))
        np.testing.assert_allclose(ds.grid, [0.0, 0.25, 1.0])

    def test_blank_cell_names_row_and_column(self, tmp_path):
        bad = TINY.replace("4.0,5.0", "4.0,")
        with pytest.raises(IngestError, match=r"row 3.*column w_2"):
            ingest(write(tmp_path, bad))

    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        bad = TINY.replace("30.0", "thirty")
        with pytest.raises(IngestError, match=r"row 4.*column y"):
            ingest(write(tmp_path, bad))

    def test_non_increasing_abscissae_rejected(self, tmp_path):
        with pytest.raises(IngestError, match="increasing"):
            ingest(write(tmp_path, "w_2,w_1,y\n1,2,3\n"))

    def test_curve_column_after_response_rejected(self, tmp_path):
        with pytest.raises(IngestError, match="after scalar"):
            ingest(write(tmp_path, "w_1,y,w_2\n1,2,3\n"))

    def test_missing_response_column_rejected(self, tmp_path):
        with pytest.raises(IngestError, match="response"):
            ingest(write(tmp_path, "w_1,w_2\n1,2\n"))

    def test_ragged_row_rejected(self, tmp_path):
        bad = TINY.replace("7.0,8.0,9.0,30.0,0.3", "7.0,8.0")
        with pytest.raises(IngestError, match="row 4"):
            ingest(write(tmp_path, bad))

    def test_bundled_dataset_shape(self):
        ds = ingest(tecator_like_path())
        assert ds.curves.shape == (215, 100)
        assert ds.response_name == "fat"
        assert ds.scalar_names == ("protein", "moisture")
        assert ds.grid[0] == 0.0 and ds.grid[-1] == 1.0


class TestCliCommands:
    def test_ingest_check_reports_shape(self, capsys):
        rc = main(["ingest-check", "--data", tecator_like_path(), "--json"])
        assert rc == 0
        got = json.loads(capsys.readouterr().out)
        assert (got["n"], got["m"], got["q"]) == (215, 100, 2)
        assert got["schema_version"] == 1

    def test_ingest_check_bad_file_exits_nonzero(self, tmp_path, capsys):
        rc = main(["ingest-check", "--data", write(tmp_path, "w_2,w_1,y\n1,2,3\n")])
        assert rc == 1
        assert "increasing" in capsys.readouterr().err

    def test_test_json_schema(self, tmp_path, capsys):
        out = str(tmp_path / "r.json")
        rc = main([
            "test", "--data", tecator_like_path(), "--test", "0v1",
            "--lambda", "1e-11", "--json", "--out", out,
        ])
        assert rc == 0
        got = json.loads(open(out).read())
        assert got["test_kind"] == "0v1"
        assert got["lambda"] == 1e-11
        for stage in ("stage1", "stage2"):
            assert set(got[stage]) >= {"F", "pC", "df2", "eta", "p"}
        assert got["decision"] in ("KeepNull", "SwitchToAlternative", "NeitherAdequate")
        assert got["schema_version"] == 1

    def test_exit_zero_regardless_of_decision(self):
        # KeepNull at this lambda; statistical outcome must not leak into rc
        rc = main(["test", "--data", tecator_like_path(), "--test", "0v1",
                   "--lambda", "1e-11", "--json", "--out", "/dev/null"])
        assert rc == 0

    def test_malformed_basis_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["test", "--data", "x.csv", "--test", "0v1", "--basis", "chebyshev:7"])
        assert exc.value.code == 2

    def test_byte_identical_repeat_runs(self, tmp_path):
        args = ["test", "--data", tecator_like_path(), "--test", "1v0",
                "--lambda", "1e-9", "--json"]
        f1, f2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        assert main(args + ["--out", f1]) == 0
        assert main(args + ["--out", f2]) == 0
        assert open(f1, "rb").read() == open(f2, "rb").read()

    def test_out_file_matches_stdout(self, tmp_path, capsys):
        args = ["ingest-check", "--data", tecator_like_path(), "--json"]
        assert main(args) == 0
        streamed = capsys.readouterr().out
        out = str(tmp_path / "o.json")
        assert main(args + ["--out", out]) == 0
        assert open(out).read() == streamed


class TestPcurve:
    def test_single_lambda_gives_single_row(self, tmp_path):
        out = str(tmp_path / "p.csv")
        rc = main(["pcurve", "--data", tecator_like_path(), "--test", "0v1",
                   "--lambda", "1e-7", "--out", out])
        assert rc == 0
        lines = open(out).read().strip().splitlines()
        assert lines[0] == "lambda,p_stage1,p_stage2,ocv_score,ocv_argmin"
        assert len(lines) == 2
        assert lines[1].endswith(",1")

    def test_full_grid_marks_one_argmin_and_is_continuous(self, tmp_path):
        out = str(tmp_path / "p.csv")
        rc = main(["pcurve", "--data", tecator_like_path(), "--test", "0v1",
                   "--out", out])
        assert rc == 0
        rows = [ln.split(",") for ln in open(out).read().strip().splitlines()[1:]]
        assert len(rows) == 14
        assert sum(int(r[4]) for r in rows) == 1
        # adjacent steps stay small until heavy smoothing saturates p at 1,
        # where the bias correction writes off the whole F statistic
        p1 = [float(r[1]) for r in rows]
        assert max(abs(a - b) for a, b in zip(p1, p1[1:]) if b < 1.0) < 0.5
        assert p1[-1] == 1.0


class TestJtestCommand:
    def test_json_output_fields(self, capsys):
        rc = main(["jtest", "--data", tecator_like_path(),
                   "--null", "nw:0", "--alt", "nw:1", "--json"])
        assert rc == 0
        got = json.loads(capsys.readouterr().out)
        assert got["n1"] + got["n2"] == 215
        assert 0.0 <= got["p"] <= 1.0
        assert got["schema_version"] == 1

    def test_bad_model_string_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["jtest", "--data", tecator_like_path(),
                  "--null", "kernel:9", "--alt", "nw:1"])
        assert exc.value.code == 2

    def test_scalars_in_linear_spec(self, capsys):
        rc = main(["jtest", "--data", tecator_like_path(),
                   "--null", "lin:0+scalars", "--alt", "nw:0",
                   "--seed", "1", "--json"])
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["command"] == "jtest"

    def test_degenerate_split_is_runtime_error(self, capsys):
        rc = main(["jtest", "--data", tecator_like_path(),
                   "--null", "nw:0", "--alt", "nw:1", "--frac", "0.999"])
        assert rc == 1
        assert capsys.readouterr().err.startswith("fundrv:")


class TestPowerCommand:
    ARGS = ["power", "--test", "0v1", "--n", "30", "--reps", "8",
            "--beta0", "0,0.8", "--seed", "5"]

    def test_csv_schema(self, capsys):
        rc = main(self.ARGS)
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "test_kind,lambda_policy,beta0,reject1,reject2,correct,reps,seed"
        assert len(lines) == 3
        assert lines[1].startswith("0v1,fixed:1e-11,0.0,")

    def test_jobs_do_not_change_bytes(self, tmp_path):
        f1, f2 = str(tmp_path / "1.csv"), str(tmp_path / "2.csv")
        assert main(self.ARGS + ["--jobs", "1", "--out", f1]) == 0
        assert main(self.ARGS + ["--jobs", "2", "--out", f2]) == 0
        assert open(f1, "rb").read() == open(f2, "rb").read()
