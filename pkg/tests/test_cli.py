import json

import numpy as np
import pytest

from friids.cli import main
from friids.config import build_config, parse_config_text
from friids.errors import ConfigError
from friids.fuzzy import load_rulebase
from friids.pipeline import load_csv, write_csv
from friids.synthetic import flow_records


@pytest.fixture
def flows(tmp_path):
    path = tmp_path / "flows.csv"
    write_csv(flow_records(20, seed=1), path)
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestRank:
    def test_lists_features(self, capsys, tmp_path):
        path = tmp_path / "flows.csv"
        write_csv(flow_records(200, seed=2), path)
        code, out, _ = run(capsys, "rank", "--input", path, "--top", 5)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].split() == ["No.", "Features", "IG", "Values"]
        assert len(lines) == 6
        scores = [float(line.split()[-1]) for line in lines[1:]]
        assert scores == sorted(scores, reverse=True)

    def test_missing_file(self, capsys, tmp_path):
        missing = tmp_path / "absent.csv"
        code, _, err = run(capsys, "rank", "--input", missing)
        assert code == 2
        assert str(missing) in err

    def test_bad_bins(self, capsys, flows):
        code, _, err = run(capsys, "rank", "--input", flows, "--bins", 1)
        assert code == 1
        assert "bins" in err


class TestEval:
    def test_conserves_counts(self, capsys, flows, tmp_path):
        out_json = tmp_path / "m.json"
        code, out, _ = run(capsys, "eval", "--input", flows, "--out", out_json)
        assert code == 0
        d = json.loads(out_json.read_text())
        recs = load_csv(flows).records
        n_normal = sum(r.is_normal for r in recs)
        assert d["tn"] + d["fp"] == n_normal
        assert d["tp"] + d["fn"] == len(recs) - n_normal
        assert "DR =" in out

    def test_threshold_zero_alerts_everything(self, capsys, flows, tmp_path):
        out_json = tmp_path / "m.json"
        assert run(capsys, "eval", "--input", flows, "--threshold", 0, "--out", out_json)[0] == 0
        d = json.loads(out_json.read_text())
        assert d["fpr"] == 1.0 and d["tn"] == 0

    def test_byte_identical_reruns(self, capsys, flows, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for target in (a, b):
            run(capsys, "eval", "--input", flows, "--seed", 4, "--n-per-class", 5, "--out", target)
        assert a.read_bytes() == b.read_bytes()

    def test_feature_count_mismatch(self, capsys, flows):
        code, _, err = run(capsys, "eval", "--input", flows, "--features", "PKT_RATE,BYTE_RATE")
        assert code == 1


class TestInfer:
    def test_gap_observation(self, capsys):
        code, out, _ = run(capsys, "infer", "--obs", 900, 1190251, 22029)
        assert code == 0
        d = json.loads(out)
        assert d["verdict"] == "attack"
        assert d["classically_covered"] is False
        assert 0.5 <= d["level"] <= 1

    def test_strict_universe(self, capsys):
        code, _, err = run(capsys, "infer", "--strict-universe", "--obs", 5000, 100, 100)
        assert code == 2
        assert "packet_rate" in err

    def test_clamped_by_default(self, capsys):
        assert run(capsys, "infer", "--obs", 5000, 100, 100)[0] == 0

    def test_wrong_arity(self, capsys):
        assert run(capsys, "infer", "--obs", 1, 2)[0] == 2

    def test_missing_obs_is_usage_error(self, capsys):
        assert run(capsys, "infer")[0] == 1


def test_demo(capsys):
    code, out, _ = run(capsys, "demo")
    assert code == 0
    assert "normal" in out and "attack" in out
    assert "DR = 0.9665" in out


class TestConfig:
    def test_flags_override_file(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("five.threshold = 0.0\n")
        obs = ("--obs", 200, 55943, 11560)
        d_file = json.loads(run(capsys, "infer", "--config", cfg, *obs)[1])
        d_flag = json.loads(run(capsys, "infer", "--config", cfg, "--threshold", 0.5, *obs)[1])
        assert d_file["alert"] is True
        assert d_flag["alert"] is False

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("colour = red\n")
        assert run(capsys, "demo", "--config", cfg)[0] == 1

    def test_parse_sections(self):
        values = parse_config_text("seed = 3\nfive.p = 4  # sharper\nlearner.max_rules = 12\n")
        cfg = build_config(values)
        assert cfg.seed == 3 and cfg.five.p == 4 and cfg.learner.max_rules == 12
        assert cfg.learner.seed == 3

    def test_invalid_threshold(self):
        with pytest.raises(ConfigError):
            build_config({"five.threshold": 2.0})


class TestTrain:
    def test_xy_table(self, capsys, tmp_path):
        x = np.linspace(0, 1, 60)
        table = tmp_path / "xy.csv"
        np.savetxt(table, np.column_stack([x, x ** 2]), delimiter=",", header="x,target", comments="")
        rules, trace = tmp_path / "out.rules", tmp_path / "trace.json"
        code, _, _ = run(capsys, "train", "--input", table, "--out", rules, "--trace", trace, "--target", 0.05)
        assert code == 0
        rb = load_rulebase(rules)
        assert rb.dims == 1 and 2 <= len(rb.rules) <= 8
        steps = json.loads(trace.read_text())
        assert steps[0]["event"] == "init"
        assert steps[-1]["best"] <= 0.05

    def test_flow_records_then_eval(self, capsys, tmp_path):
        flows = tmp_path / "flows.csv"
        write_csv(flow_records(300, seed=6), flows)
        rules = tmp_path / "flows.rules"
        code, _, _ = run(capsys, "train", "--input", flows, "--out", rules, "--max-rules", 6,
                         "--max-iterations", 30)
        assert code == 0
        rb = load_rulebase(rules)
        assert rb.names == ("pkt_rate", "byte_rate", "utilization")
        code, out, _ = run(capsys, "eval", "--input", flows, "--rules", rules)
        assert code == 0 and "DR =" in out
