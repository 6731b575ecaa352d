import json

import pytest

from ballbasis.cli import run


def report(capsys):
    return json.loads(capsys.readouterr().out)


def test_basis_check_dyadic(capsys):
    assert run(["basis", "check", "--kind", "dyadic", "--depth", "3"]) == 0
    rep = report(capsys)
    assert rep["ok"] and rep["result"]["K"] == 2 and rep["result"]["eta"] == 2
    assert rep["version"] and len(rep["config_hash"]) == 64


def test_exptail_constant_function(capsys):
    code = run(["exptail", "--kind", "dyadic", "--depth", "4", "--f-kind", "constant",
                "--g", "local-sharp", "--alpha", "0.9", "--ball", "root"])
    assert code == 0
    rep = report(capsys)
    assert all(v == 0 for v in rep["result"]["tail"])
    assert rep["result"]["status"] == "tail identically zero"


def test_usage_errors(capsys):
    assert run(["basis", "check", "--bogus"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert "error" in err
    assert run(["nope"]) == 2
    assert run(["weights", "check", "--deltas", "-1"]) == 2


def test_tree_exit_codes(capsys):
    base = ["tree", "build", "--kind", "dyadic", "--depth", "6", "--f-kind", "random-signs"]
    assert run(base) == 0
    assert report(capsys)["result"]["terminated"]
    assert run(base + ["--alpha", "0.9375"]) == 2
    capsys.readouterr()
    assert run(base + ["--alpha", "0.9375", "--no-strict"]) == 1


def test_reproducible_output(tmp_path):
    argv = ["op", "estimate", "--kind", "intervals", "--n", "32", "--op", "hilbert_truncated",
            "--budget", "16", "--seed", "3"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(argv + ["--out", str(a), "--csv", str(tmp_path / "a.csv")]) == 0
    assert run(argv + ["--out", str(b), "--csv", str(tmp_path / "b.csv")]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "dyadic", "depth": 2}))
    assert run(["basis", "check", "--config", str(cfg)]) == 0
    assert report(capsys)["config"]["depth"] == 2
    cfg.write_text(json.dumps({"dept": 2}))
    assert run(["basis", "check", "--config", str(cfg)]) == 2


def test_weights_threshold(capsys):
    assert run(["weights", "check", "--kind", "dyadic", "--depth", "8", "--weight", "atomic",
                "--mass", "1e6", "--deltas", "1.0", "--threshold", "100"]) == 1


@pytest.mark.parametrize("argv", [
    ["functional", "eval", "--functional", "osc_alpha", "--depth", "3"],
    ["dominate", "--depth", "4"],
    ["goodlambda", "--depth", "4"],
    ["normcomp", "--kind", "intervals", "--n", "16", "--samples", "3"],
])
def test_other_commands_run(argv, capsys):
    assert run(argv) in (0, 1)
    assert "result" in report(capsys)


def test_bundle(tmp_path, capsys):
    assert run(["report", "bundle", "--depth", "4", "--outdir", str(tmp_path)]) in (0, 1)
    assert any(p.suffix == ".csv" for p in tmp_path.iterdir())
    assert any(p.suffix == ".json" for p in tmp_path.iterdir())
