import json
import subprocess
import sys

import numpy as np
import pytest

from cicopula.cli import EXIT_MODEL, EXIT_NUMERIC, EXIT_USAGE, main, parse_grid, parse_model

from conftest import MODELS_DIR


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def model(name):
    return MODELS_DIR / f"{name}.json"


def test_stress_power_uniform_model(capsys):
    code, out, _ = run(capsys, "stress", "--model", model("power_uniform_opposed_fgm"), "--i", 1, "--j", 2)
    assert code == 0
    assert out == "0.344444444444\n"


def test_order_cdf_iid(capsys):
    code, out, _ = run(capsys, "order-cdf", "--model", model("iid_independence_n2"), "--r", 2, "--x", 0.5)
    assert (code, out) == (0, "0.25\n")


def test_table_order_cdf(capsys, tmp_path):
    code, out, _ = run(capsys, "table", "--model", model("iid_independence_n2"), "--op", "order-cdf", "--r", 2, "--grid", "0:1:0.25")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "x,F_2:2"
    values = [float(line.split(",")[1]) for line in lines[1:]]
    assert len(values) == 5 and values == sorted(values)
    dest = tmp_path / "t.csv"
    code, out, _ = run(capsys, "table", "--model", model("iid_independence_n2"), "--op", "order-cdf", "--r", 2, "--grid", "0:1:0.25", "--out", dest)
    assert code == 0 and out == ""
    assert dest.read_bytes() == "\n".join(lines).encode() + b"\n"


@pytest.mark.parametrize("op,extra", [
    ("extremes", []), ("joint-cdf", []), ("pair-cdf", ["--r", 1, "--s", 2, "--y", 0.9]),
])
def test_table_ops_are_monotone(capsys, op, extra):
    code, out, _ = run(capsys, "table", "--model", model("fgm_pair_plus_independent"), "--op", op, "--grid", "0:0.9:0.1", *extra)
    assert code == 0
    rows = np.array([[float(v) for v in line.split(",")] for line in out.splitlines()[1:]])
    assert rows.shape[0] == 10
    assert np.all(np.diff(rows[:, 1:], axis=0) >= -1e-12)


def test_output_round_trips_and_is_deterministic(capsys):
    argv = ["pair-cdf", "--model", model("mixed_clayton"), "--r", 1, "--s", 3, "--x", 0.4, "--y", 1.1]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    assert format(float(first), ".12g") == first.strip()


def test_eval_and_joint_and_mrl(capsys):
    assert run(capsys, "eval-copula", "-m", model("fgm_pair"), "--u", "0.5,0.5")[1] == "0.270833333333\n"
    assert run(capsys, "eval-copula", "-m", model("fgm_pair"), "--u", "0.5,0.5", "--w", 0.5)[1] == "0.197916666667\n"
    assert run(capsys, "joint-cdf", "-m", model("power_uniform_opposed_fgm"), "--x", "0.5,0.5")[1] == "0.109375\n"
    assert run(capsys, "mrl", "-m", model("iid_independence_n2"), "--k", 2, "--r", 1, "--t", 0)[1] == "0.666666666667\n"


def test_verify_ci(capsys):
    code, out, _ = run(capsys, "verify-ci", "-m", model("fgm_pair"), "--candidate", "builtin:fgm-pair")
    assert code == 0 and out.strip().endswith("PASS")
    code, out, _ = run(capsys, "verify-ci", "-m", model("fgm_pair"), "--candidate", "builtin:direct-fgm")
    assert code == 0 and out.strip().endswith("FAIL")
    assert float(out.split()[0]) >= 0.01
    code, _, _ = run(capsys, "verify-ci", "-m", model("fgm_pair"), "--candidate", "builtin:nope")
    assert code == EXIT_USAGE


def test_sample_csv(capsys, tmp_path):
    dest = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sample", "-m", model("power_uniform_opposed_fgm"), "--count", 100, "--seed", 4, "--out", dest)
    assert code == 0
    text = dest.read_text()
    assert text.startswith("x1,x2,z\n") and len(text.splitlines()) == 101
    first = dest.read_bytes()
    run(capsys, "sample", "-m", model("power_uniform_opposed_fgm"), "--count", 100, "--seed", 4, "--out", dest)
    assert dest.read_bytes() == first


def write(tmp_path, doc):
    path = tmp_path / "m.json"
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return path


def comp(copula, marginal=None):
    return {"copula": copula, "marginal": marginal or {"family": "uniform01"}}


def test_model_file_errors(capsys, tmp_path):
    cases = [
        ({"components": []}, "at least one component"),
        ({"components": [comp({"family": "fgm", "alpha": 2})]}, "alpha must lie in [-1,1]"),
        ({"components": [comp({"family": "gumbel"})]}, "unknown family"),
        ({"components": [comp({"family": "fgm", "beta": 1})]}, "bad parameters"),
        ('{"components": [\n  {"copula": }', "m.json:2:14"),
    ]
    for doc, message in cases:
        code, _, err = run(capsys, "stress", "-m", write(tmp_path, doc), "--i", 1, "--j", 1)
        assert code == EXIT_MODEL, doc
        assert message in err
    code, _, _ = run(capsys, "stress", "-m", tmp_path / "missing.json", "--i", 1, "--j", 2)
    assert code == EXIT_MODEL


def test_usage_and_numeric_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["stress"])
    assert exc.value.code == EXIT_USAGE
    capsys.readouterr()
    assert run(capsys, "table", "-m", model("fgm_pair"), "--op", "extremes", "--grid", "0:1:0")[0] == EXIT_USAGE
    assert run(capsys, "table", "-m", model("fgm_pair"), "--op", "order-cdf", "--grid", "0:1:0.5")[0] == EXIT_USAGE
    assert run(capsys, "order-cdf", "-m", model("fgm_pair"), "--r", 5, "--x", 0.5)[0] == EXIT_USAGE
    assert run(capsys, "mrl", "-m", model("iid_independence_n2"), "--k", 2, "--r", 1, "--t", 2)[0] == EXIT_NUMERIC


def test_quadrature_override(tmp_path, monkeypatch):
    assert parse_model(model("fgm_pair")).quad.order == 64
    monkeypatch.setenv("CICOPULA_QUADRATURE_ORDER", "12")
    assert parse_model(model("mixed_clayton")).quad.order == 12
    doc = json.loads(model("fgm_pair").read_text())
    doc["quadrature_order"] = 20
    assert parse_model(write(tmp_path, doc)).quad.order == 20


def test_parse_grid():
    np.testing.assert_allclose(parse_grid("0:1:0.25"), [0, 0.25, 0.5, 0.75, 1])
    np.testing.assert_allclose(parse_grid("0:1:0.3"), [0, 0.3, 0.6, 0.9])
    np.testing.assert_allclose(parse_grid("2:2:1"), [2])


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "cicopula", "stress", "--model", str(model("power_uniform_opposed_fgm")), "--i", "2", "--j", "1"],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout == "0.655555555556\n"
