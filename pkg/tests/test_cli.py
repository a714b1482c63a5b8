"""Command-line pipeline, interchange format, and reports."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from redesc.cli import main
from redesc.dataset import write_schema, write_view
from redesc.interchange import read_records, write_records
from redesc.measures import Redescription
from redesc.query import parse_query

from conftest import make_dataset, planted_dataset


@pytest.fixture
def planted_files(tmp_path):
    ds, S = planted_dataset(seed=11)
    paths = {
        "view1": tmp_path / "v1.csv",
        "schema1": tmp_path / "v1.schema",
        "view2": tmp_path / "v2.csv",
        "schema2": tmp_path / "v2.schema",
    }
    write_view(ds.view1, paths["view1"])
    write_schema(ds.view1, paths["schema1"])
    write_view(ds.view2, paths["view2"])
    write_schema(ds.view2, paths["schema2"])
    return ds, S, paths


def _dataset_args(paths):
    return [
        "--view1", str(paths["view1"]),
        "--schema1", str(paths["schema1"]),
        "--view2", str(paths["view2"]),
        "--schema2", str(paths["schema2"]),
    ]


def _mine_config(tmp_path):
    cfg = tmp_path / "mine.cfg"
    cfg.write_text(
        "min_jaccard = 0.9\n"
        "max_pvalue = 0.01\n"
        "min_support = 10\n"
        "max_iter = 3\n"
        "max_depth = 7\n"
        "# leaf floor resolved from min_support when 0\n"
        "min_leaf_size = 5\n",
        encoding="utf-8",
    )
    return cfg


class TestMineCommand:
    def test_planted_run_reports_a_perfect_redescription(self, planted_files, tmp_path):
        _, S, paths = planted_files
        out = tmp_path / "out"
        code = main(
            ["mine", *_dataset_args(paths), "--config", str(_mine_config(tmp_path)),
             "--operator-mode", "conj", "--seed", "0", "--out", str(out)]
        )
        assert code == 0
        report = json.loads((out / "mine_report.json").read_text())
        assert report["redescriptions"] >= 1
        assert report["seed"] == 0 and report["tool_version"]
        text = (out / "mined.tsv").read_text()
        assert "\t1.0\t" in text  # at least one fully accurate record

    def test_missing_dataset_file_exits_two_and_names_path(self, tmp_path, capsys):
        missing = tmp_path / "nope.csv"
        code = main(
            ["mine", "--view1", str(missing), "--schema1", str(missing),
             "--view2", str(missing), "--schema2", str(missing)]
        )
        assert code == 2
        assert str(missing) in capsys.readouterr().err

    def test_fixed_seed_gives_byte_identical_interchange(self, planted_files, tmp_path):
        _, _, paths = planted_files
        cfg = _mine_config(tmp_path)
        outs = []
        for name in ("out_a", "out_b"):
            out = tmp_path / name
            assert main(
                ["mine", *_dataset_args(paths), "--config", str(cfg),
                 "--operator-mode", "conj", "--seed", "7", "--out", str(out)]
            ) == 0
            outs.append((out / "mined.tsv").read_bytes())
        assert outs[0] == outs[1]


def _wide_dataset(tmp_path, n_rows=60, n_attrs=25):
    rng = np.random.default_rng(44)
    spec1 = [
        (f"a{i}", "numeric", list(np.round(rng.uniform(0, 10, n_rows), 3)))
        for i in range(n_attrs)
    ]
    spec2 = [
        (f"z{i}", "boolean", [bool(v) for v in rng.integers(0, 2, n_rows)])
        for i in range(n_attrs)
    ]
    ds = make_dataset(spec1, spec2)
    paths = {
        "view1": tmp_path / "w1.csv",
        "schema1": tmp_path / "w1.schema",
        "view2": tmp_path / "w2.csv",
        "schema2": tmp_path / "w2.schema",
    }
    write_view(ds.view1, paths["view1"])
    write_schema(ds.view1, paths["schema1"])
    write_view(ds.view2, paths["view2"])
    write_schema(ds.view2, paths["schema2"])
    return ds, paths


def _synthetic_interchange(path, n_records, n_attrs=25):
    lines = []
    i = 0
    while len(lines) < n_records:
        attr = i % n_attrs
        width = 2.0 + (i % 9)
        lines.append(f"[0.0 <= a{attr} <= {width}]\tz{(i * 7) % n_attrs}")
        i += 1
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestReduceCommand:
    def test_merges_inputs_without_duplicates(self, tmp_path):
        ds, paths = _wide_dataset(tmp_path)
        f1 = tmp_path / "in1.tsv"
        f2 = tmp_path / "in2.tsv"
        _synthetic_interchange(f1, 30)
        _synthetic_interchange(f2, 45)  # first 30 overlap f1 exactly
        out = tmp_path / "red"
        code = main(
            ["reduce", str(f1), str(f2), *_dataset_args(paths),
             "--sizes", "100", "--out", str(out)]
        )
        assert code == 0
        report = json.loads((out / "reduce_report.json").read_text())
        assert report["pool_size"] == 45

    def test_emits_requested_record_count(self, tmp_path):
        ds, paths = _wide_dataset(tmp_path)
        src = tmp_path / "large.tsv"
        _synthetic_interchange(src, 220)
        out = tmp_path / "red"
        code = main(
            ["reduce", str(src), *_dataset_args(paths), "--sizes", "200", "--out", str(out)]
        )
        assert code == 0
        produced = (out / "reduced_w1_n200.tsv").read_text().splitlines()
        assert len([l for l in produced if l and not l.startswith("#")]) == 200

    def test_bad_record_rejected_with_line_number_run_continues(self, tmp_path, capsys):
        ds, paths = _wide_dataset(tmp_path)
        src = tmp_path / "mixed.tsv"
        src.write_text(
            "[0.0 <= a0 <= 5.0]\tz0\n"
            "[0.0 <= ghost <= 5.0]\tz1\n"
            "[0.0 <= a1 <= 5.0]\tz2\n",
            encoding="utf-8",
        )
        out = tmp_path / "red"
        code = main(
            ["reduce", str(src), *_dataset_args(paths), "--sizes", "2", "--out", str(out)]
        )
        assert code == 0
        err = capsys.readouterr().err
        assert "line 2" in err and "ghost" in err
        report = json.loads((out / "reduce_report.json").read_text())
        assert report["rejected_records"] == 1 and report["pool_size"] == 2

    def test_one_output_file_per_weight_row_and_size(self, tmp_path):
        ds, paths = _wide_dataset(tmp_path)
        src = tmp_path / "pool.tsv"
        _synthetic_interchange(src, 40)
        cfg = tmp_path / "reduce.cfg"
        cfg.write_text(
            "weights = 0.2,0.2,0.2,0.2,0.2,0.0\n"
            "weights = 0.6,0.2,0.0,0.0,0.2,0.0\n"
            "sizes = 5,10\n",
            encoding="utf-8",
        )
        out = tmp_path / "red"
        code = main(
            ["reduce", str(src), *_dataset_args(paths), "--config", str(cfg), "--out", str(out)]
        )
        assert code == 0
        names = sorted(p.name for p in out.glob("reduced_*.tsv"))
        assert names == [
            "reduced_w1_n10.tsv",
            "reduced_w1_n5.tsv",
            "reduced_w2_n10.tsv",
            "reduced_w2_n5.tsv",
        ]


class TestEvalCommand:
    def test_singleton_set_scores_zero_redundancy(self, tmp_path):
        ds, paths = _wide_dataset(tmp_path)
        src = tmp_path / "one.tsv"
        src.write_text("[0.0 <= a0 <= 5.0]\tz0\n", encoding="utf-8")
        out = tmp_path / "ev"
        assert main(["eval", str(src), *_dataset_args(paths), "--out", str(out)]) == 0
        rows = list(csv.DictReader((out / "eval_redescriptions.csv").open()))
        assert len(rows) == 1
        assert float(rows[0]["aej"]) == 0.0 and float(rows[0]["aaj"]) == 0.0

    def test_worked_attribute_redundancy_example(self, tmp_path, climate_species_dataset):
        ds = climate_species_dataset
        paths = {
            "view1": tmp_path / "c1.csv",
            "schema1": tmp_path / "c1.schema",
            "view2": tmp_path / "c2.csv",
            "schema2": tmp_path / "c2.schema",
        }
        write_view(ds.view1, paths["view1"])
        write_schema(ds.view1, paths["schema1"])
        write_view(ds.view2, paths["view2"])
        write_schema(ds.view2, paths["schema2"])
        src = tmp_path / "pair.tsv"
        src.write_text(
            "[-1.8 <= t7 <= 4.4] & [12.1 <= p6 <= 21.2]\tPolarbear\n"
            "[-1.8 <= t7 <= 4.4] & [12.1 <= p6 <= 21.2]"
            " | [-1.6 <= t6 <= 1.5] & [21.6 <= p6 <= 30.1]\tPolarbear\n",
            encoding="utf-8",
        )
        out = tmp_path / "ev"
        assert main(["eval", str(src), *_dataset_args(paths), "--out", str(out)]) == 0
        rows = list(csv.DictReader((out / "eval_redescriptions.csv").open()))
        assert float(rows[0]["aaj"]) == 0.75

    def test_full_coverage_reported(self, tmp_path):
        ds, paths = _wide_dataset(tmp_path)
        src = tmp_path / "cover.tsv"
        src.write_text("[-inf <= a0 <= inf]\t[-inf <= a0 <= inf]\n", encoding="utf-8")
        # second query references view-2 attrs only; rewrite with a tautology
        src.write_text("[-inf <= a0 <= inf]\tz0 | !z0\n", encoding="utf-8")
        out = tmp_path / "ev"
        assert main(["eval", str(src), *_dataset_args(paths), "--out", str(out)]) == 0
        summary = list(csv.DictReader((out / "eval_summary.csv").open()))[0]
        assert float(summary["element_coverage"]) == 1.0


class TestInterchangeRoundTrip:
    def test_statistics_survive_write_read_bit_for_bit(self, tmp_path):
        ds, paths = _wide_dataset(tmp_path)
        queries = [
            ("[0.0 <= a0 <= 5.0] & [1.0 <= a1 <= 9.0]", "z0 & z3"),
            ("[2.0 <= a2 <= 8.0]", "z1 | z2 & z4"),
        ]
        originals = [
            Redescription.evaluate(
                parse_query(q1, ds.view1, 1), parse_query(q2, ds.view2, 2), ds
            )
            for q1, q2 in queries
        ]
        path = tmp_path / "rt.tsv"
        write_records(path, originals)
        loaded, rejected = read_records(path, ds)
        assert not rejected
        assert len(loaded) == len(originals)
        for before, after in zip(originals, loaded):
            assert before == after
            assert (before.j_qnm, before.j_opt, before.j_pess) == (
                after.j_qnm, after.j_opt, after.j_pess
            )
            assert before.p_value == after.p_value

    def test_bogus_statistics_in_file_are_ignored(self, tmp_path):
        ds, _ = _wide_dataset(tmp_path)
        src = tmp_path / "lying.tsv"
        src.write_text(
            "[0.0 <= a0 <= 5.0]\tz0\t0.999\t0.999\t0.999\t0.0\t0.0\t9999\t42\n",
            encoding="utf-8",
        )
        loaded, rejected = read_records(src, ds)
        assert not rejected and len(loaded) == 1
        honest = Redescription.evaluate(
            parse_query("[0.0 <= a0 <= 5.0]", ds.view1, 1),
            parse_query("z0", ds.view2, 2),
            ds,
        )
        assert loaded[0] == honest

    def test_written_bytes_are_deterministic(self, tmp_path):
        ds, _ = _wide_dataset(tmp_path)
        r = Redescription.evaluate(
            parse_query("[0.0 <= a0 <= 5.0]", ds.view1, 1),
            parse_query("z0", ds.view2, 2),
            ds,
        )
        p1, p2 = tmp_path / "a.tsv", tmp_path / "b.tsv"
        write_records(p1, [r])
        write_records(p2, [r])
        assert p1.read_bytes() == p2.read_bytes()
