import json
from pathlib import Path

import numpy as np
import pytest

from kpzlab.cli import main
from kpzlab.config import (
    ParseError,
    ValidationError,
    parse_config,
)
from kpzlab.runner import (
    Artifact,
    ReportBundle,
    artifact_digest,
    run_experiment,
    write_report,
)

MINIMAL_SIMULATE = """
kind = "simulate"
n = 5
[model]
kind = "tasep"
[scaling]
epsilon = 0.25
macro_time = 0.1
[window]
sites = 40
[initial]
kind = "equilibrium"
"""


class TestParse:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL_SIMULATE)
        assert cfg.seed == 0
        assert cfg.kind == "simulate"
        assert cfg.boundary.value == "segment"
        assert cfg.out_dir == "out"

    def test_unknown_model(self):
        bad = MINIMAL_SIMULATE.replace('kind = "tasep"', 'kind = "zrp"')
        with pytest.raises(ValidationError):
            parse_config(bad)

    def test_zero_drift_law_rejected(self):
        text = """
kind = "simulate"
n = 2
[model]
kind = "aep"
law = { "2" = 1.0, "-1" = 2.0 }
[scaling]
epsilon = 0.25
[window]
sites = 16
[initial]
kind = "equilibrium"
"""
        with pytest.raises(ValidationError):
            parse_config(text)

    def test_toml_syntax_error(self):
        with pytest.raises(ParseError):
            parse_config("kind = [unterminated")

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            parse_config('kind = "dance"')

    def test_echoed_config_reparses_equal(self):
        cfg = parse_config(MINIMAL_SIMULATE)
        again = parse_config(MINIMAL_SIMULATE)
        assert cfg == again


class TestReports:
    def test_empty_bundle_header_only_csv(self, tmp_path):
        bundle = ReportBundle(meta={"label": "x"}, artifacts=[
            Artifact("empty.csv", "csv", [], columns=("a", "b"))])
        write_report(bundle, tmp_path)
        assert (tmp_path / "empty.csv").read_text() == "a,b\n"

    def test_csv_escaping(self, tmp_path):
        bundle = ReportBundle(meta={}, artifacts=[
            Artifact("t.csv", "csv", [{"a": 'x,"y', "b": 1.5}],
                     columns=("a", "b"))])
        write_report(bundle, tmp_path)
        text = (tmp_path / "t.csv").read_text()
        assert text.splitlines()[1] == '"x,""y",1.5'

    def test_io_error(self):
        bundle = ReportBundle(meta={}, artifacts=[])
        from kpzlab.runner import IoError
        with pytest.raises(IoError):
            write_report(bundle, "/proc/nonexistent/subdir")

    def test_simulate_round_trip_deterministic(self, tmp_path):
        cfg = parse_config(MINIMAL_SIMULATE)
        p1 = write_report(run_experiment(cfg, MINIMAL_SIMULATE), tmp_path / "a")
        p2 = write_report(run_experiment(cfg, MINIMAL_SIMULATE), tmp_path / "b")
        assert artifact_digest(p1) == artifact_digest(p2)

    def test_report_meta_echo(self, tmp_path):
        cfg = parse_config(MINIMAL_SIMULATE)
        bundle = run_experiment(cfg, MINIMAL_SIMULATE)
        write_report(bundle, tmp_path)
        meta = json.loads((tmp_path / "report.json").read_text())
        assert meta["seed"] == 0
        assert meta["version"]
        assert parse_config(meta["config_text"]) == cfg

    def test_snapshots_schema(self, tmp_path):
        cfg = parse_config(MINIMAL_SIMULATE)
        bundle = run_experiment(cfg, MINIMAL_SIMULATE)
        write_report(bundle, tmp_path)
        lines = (tmp_path / "snapshots.jsonl").read_text().splitlines()
        assert len(lines) == 5
        row = json.loads(lines[0])
        assert set(row) == {"trajectory", "micro_time", "anchor", "bits"}


class TestCli:
    def test_run_and_seed_override(self, tmp_path):
        cfg_path = tmp_path / "exp.toml"
        cfg_path.write_text(MINIMAL_SIMULATE)
        out1 = tmp_path / "o1"
        out2 = tmp_path / "o2"
        out3 = tmp_path / "o3"
        assert main(["run", str(cfg_path), "--out", str(out1)]) == 0
        assert main(["run", str(cfg_path), "--out", str(out2)]) == 0
        assert main(["run", str(cfg_path), "--out", str(out3), "--seed", "5"]) == 0
        d1 = artifact_digest(sorted(out1.iterdir()))
        d2 = artifact_digest(sorted(out2.iterdir()))
        d3 = artifact_digest(sorted(out3.iterdir()))
        assert d1 == d2
        assert d1 != d3

    def test_missing_config(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "nope.toml")]) == 2

    def test_invalid_config(self, tmp_path, capsys):
        p = tmp_path / "bad.toml"
        p.write_text('kind = "dance"')
        assert main(["run", str(p)]) == 2

    def test_compare_schema(self, tmp_path):
        text = """
kind = "compare"
label = "cmp"
n = 30
[model]
kind = "asep"
p_right = 1.75
p_left = 0.75
[scaling]
epsilon = 0.25
macro_time = 0.1
averaging = 0.0
[window]
sites = 64
boundary = "ring"
[initial]
kind = "equilibrium"
[target]
mode = "hyp"
points = [[0.0, 1.0]]
left_slope = -1.0
right_slope = 1.0
[compare]
epsilons = [0.25, 0.125]
"""
        p = tmp_path / "cmp.toml"
        p.write_text(text)
        out = tmp_path / "out"
        assert main(["run", str(p), "--out", str(out)]) == 0
        rows = (out / "compare.csv").read_text().splitlines()
        assert rows[0].split(",") == [
            "experiment_id", "epsilon", "t", "n", "p_hat_model", "stderr_model",
            "p_hat_tasep", "stderr_tasep", "difference", "stderr", "a"]
        assert len(rows) == 3

    def test_compare_requires_unit_drift(self, tmp_path):
        text = """
kind = "compare"
n = 5
[model]
kind = "asep"
p_right = 0.7
p_left = 0.3
[window]
sites = 32
boundary = "ring"
[initial]
kind = "equilibrium"
[target]
mode = "hyp"
points = [[0.0, 1.0]]
[compare]
epsilons = [0.25]
"""
        p = tmp_path / "c.toml"
        p.write_text(text)
        assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 1


class TestHitCsvAndSvg:
    def test_simulate_with_target_emits_hit_csv(self, tmp_path):
        text = MINIMAL_SIMULATE + """
[target]
mode = "hyp"
points = [[0.0, 3.0]]
left_slope = -1.0
right_slope = 1.0
"""
        cfg = parse_config(text)
        bundle = run_experiment(cfg, text)
        write_report(bundle, tmp_path)
        rows = (tmp_path / "hit_probability.csv").read_text().splitlines()
        assert rows[0] == "experiment_id,epsilon,t,n,p_hat,stderr,a"
        assert len(rows) == 2

    def test_svg_deterministic_and_wellformed(self):
        from kpzlab.svg import line_plot
        a = line_plot({"s": ([0.0, 1.0, 2.0], [0.0, 1.0, 0.5])}, "x", "y",
                      title="t")
        b = line_plot({"s": ([0.0, 1.0, 2.0], [0.0, 1.0, 0.5])}, "x", "y",
                      title="t")
        assert a == b
        assert a.startswith("<svg ") and a.rstrip().endswith("</svg>")
        import xml.etree.ElementTree as ET
        ET.fromstring(a)  # parses as XML
