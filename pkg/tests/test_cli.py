import csv
import io
import json

import pytest

from fqhchain.cli import BOUND_COLUMNS, GAP_COLUMNS, SweepConfig, ConfigError, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_gap_diagonal_case(capsys):
    code, out, _ = run(capsys, "gap", "--L", "12", "--kappa", "1", "--lambda", "0")
    assert code == 0
    (r,) = rows(out)
    assert list(r) == list(GAP_COLUMNS)
    assert float(r["gap"]) == 1.0
    assert float(r["main_bound_liminf"]) == pytest.approx(1 / 6)
    assert r["status"] == "pass"


def test_gap_with_hopping(capsys):
    code, out, _ = run(capsys, "gap", "--L", "12", "--kappa", "1", "--lambda", "0.3")
    (r,) = rows(out)
    assert code == 0 and r["status"] == "pass"
    assert float(r["gap"]) >= float(r["main_bound_liminf"])


def test_gap_guard_reported_per_row(capsys):
    code, out, _ = run(capsys, "gap", "--L", "8", "23", "--kappa", "1", "--lambda", "0.2")
    r8, r23 = rows(out)
    assert r8["status"] == "pass"
    assert r23["status"].startswith("error")
    assert code == 0


def test_empty_tasks_is_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "gap", "--tasks")
    assert code == 2 and "tasks" in err
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"tasks": []}))
    assert run(capsys, "gap", "--config", str(cfg))[0] == 2
    cfg.write_text(json.dumps({"tasks": ["bounds"]}))
    assert run(capsys, "gap", "--config", str(cfg))[0] == 2


@pytest.mark.parametrize("text", ["{bad", "[1, 2]", '{"L": []}', '{"L": [0]}', '{"kappa": [-1]}',
                                  '{"lambda": ["x"]}', '{"boundary": "twisted"}', '{"colour": 1}'])
def test_malformed_config(capsys, tmp_path, text):
    cfg = tmp_path / "c.json"
    cfg.write_text(text)
    assert run(capsys, "verify", "--config", str(cfg))[0] == 2


def test_missing_config_and_bad_flags(capsys):
    assert run(capsys, "bounds", "--config", "/nonexistent.json")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "bounds", "--threads", "0")[0] == 2


def test_help_lists_columns(capsys):
    assert main(["--help"]) == 0
    out = capsys.readouterr().out
    assert ", ".join(GAP_COLUMNS) in out and ", ".join(BOUND_COLUMNS) in out


def test_lambda_forms():
    cfg = SweepConfig.from_dict({"lambda": [0.5, [0.1, 0.2], "0.3-0.4j"]})
    assert cfg.lam == [0.5, 0.1 + 0.2j, 0.3 - 0.4j]
    with pytest.raises(ConfigError):
        SweepConfig.from_dict({"lambda": [True]})


def test_bounds_csv(capsys):
    code, out, _ = run(capsys, "bounds", "--L", "18", "--kappa", "1", "--lambda", "0.3", "6")
    assert code == 0
    r03, r6 = rows(out)
    assert r03["applicable_flag"] == "1" and r6["applicable_flag"] == "0"
    assert r6["mm_bound"] == ""


def test_threads_and_seed_check_are_deterministic(capsys, tmp_path):
    args = ["bounds", "--L", "18", "21", "--kappa", "0.5", "2", "--lambda", "0.1", "0.5+0.5j"]
    c1, one, _ = run(capsys, *args)
    c2, two, _ = run(capsys, *args, "--threads", "2", "--seed-check")
    assert c1 == c2 == 0 and one == two
    out = tmp_path / "g.csv"
    gap = ["gap", "--L", "9", "10", "--kappa", "1", "--lambda", "0.4", "--out", str(out)]
    assert run(capsys, *gap, "--threads", "2")[0] == 0
    first = out.read_bytes()
    assert run(capsys, *gap, "--seed-check")[0] == 0
    assert out.read_bytes() == first


def test_enumerate(capsys):
    code, out, _ = run(capsys, "enumerate", "--L", "1", "--boundary", "open")
    assert code == 0 and "roots=2" in out
    code, out, _ = run(capsys, "enumerate", "--L", "6", "--boundary", "periodic")
    assert "roots=10" in out  # trace of the sixth power of the companion matrix
    code, out, _ = run(capsys, "enumerate", "--L", "11", "--boundary", "open", "--lambda", "0.5")
    assert "root M,M,M,M_2 class_size=5 dimers=0,1,1,1,2" in out


def test_edge(capsys):
    code, out, _ = run(capsys, "edge", "--L", "4", "8", "--kappa", "1", "--lambda", "0.1")
    (r,) = rows(out)
    assert code == 0 and r["L"] == "8"
    assert float(r["deviation"]) < 1e-4


def test_physical_params(capsys):
    code, out, _ = run(capsys, "physical-params", "--alpha", "3", "--period", "12")
    (r,) = rows(out)
    assert code == 0 and float(r["kappa"]) > 1e5


def test_verify_passes_and_gates_large_lambda(capsys, tmp_path):
    cfg = tmp_path / "v.json"
    cfg.write_text(json.dumps({"L": [10, 11], "kappa": [1.0], "lambda": [0.5, 6.0]}))
    code, out, _ = run(capsys, "verify", "--config", str(cfg))
    summary = json.loads(out)
    assert code == 0 and summary["status"] == "pass"
    by_name = {c["name"]: c for c in summary["checks"]}
    assert by_name["martingale_norm"]["status"] == "pass"
    assert by_name["martingale_norm"]["cases"] == 2  # only lam = 0.5, at two lengths
    cfg.write_text(json.dumps({"L": [10], "kappa": [1.0], "lambda": [6.0]}))
    summary = json.loads(run(capsys, "verify", "--config", str(cfg))[1])
    by_name = {c["name"]: c for c in summary["checks"]}
    assert by_name["martingale_norm"]["status"] == "inapplicable"
    assert by_name["f_threshold"]["status"] == "inapplicable"
