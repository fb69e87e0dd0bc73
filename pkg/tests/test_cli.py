import json
import subprocess
import sys

import numpy as np
import pytest

from kgbounds.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_catalog_lists_table_rows(capsys):
    code, out, _ = run(capsys, "catalog")
    rows = out.strip().splitlines()[1:]
    assert code == 0 and len(rows) == 17
    assert any(r.split()[0] == "hexagon" and r.split()[1:] == ["2", "3"] for r in rows)


def test_facet_hexagon(capsys, tmp_path):
    out = tmp_path / "hex.json"
    code, text, _ = run(capsys, "facet", "--config", "hexagon", "--n", "1", "--out", str(out))
    assert code == 0 and "ratio=5/4" in text
    obj = json.loads(out.read_text())
    assert obj["status"] == "facet"
    assert obj["ratio"]["text"] == "5/4" and obj["lambda"]["text"] == "2/3"
    assert obj["P_ratio"]["text"] == "9/8"


def test_facet_is_deterministic(tmp_path):
    outs = []
    p = tmp_path / "c.json"
    for _ in range(2):
        assert main(["facet", "--config", "cuboctahedron", "--seed", "5", "--no-timestamp", "--out", str(p)]) == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_solve_exact_chsh(capsys, tmp_path):
    inst = tmp_path / "chsh.json"
    inst.write_text("[[1, 1], [1, -1]]")
    code, out, _ = run(capsys, "solve-exact", "--in", str(inst), "--no-timestamp")
    assert code == 0 and json.loads(out)["result"]["value"] == 2


def test_solve_heur_lower_bound(capsys, tmp_path):
    inst = tmp_path / "m.json"
    inst.write_text("[[1, 1], [1, -1]]")
    code, out, _ = run(capsys, "solve-heur", "--in", str(inst), "--n", "2", "--restarts", "20")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(2 * np.sqrt(2))


def test_budget_exceeded_exit_code(capsys, tmp_path):
    inst = tmp_path / "big.json"
    inst.write_text(json.dumps(np.random.default_rng(1).integers(-5, 6, size=(22, 22)).tolist()))
    code, out, _ = run(capsys, "solve-exact", "--in", str(inst), "--budget", "10", "--restarts", "1")
    assert code == 2


def test_bound_best_chain(capsys):
    code, out, _ = run(capsys, "bound", "--d", "6", "--best")
    assert code == 0 and "1.49339" in out and "d=5 -> d=6" in out


def test_bound_prop1_and_davie(capsys):
    code, out, _ = run(capsys, "bound", "--prop1", "0.8", "0.9", "0.9", "--no-timestamp")
    assert code == 0 and json.loads(out)["certificate"]["value_float"] == pytest.approx(1.54321, abs=1e-5)
    code, out, _ = run(capsys, "bound", "--davie", "--no-timestamp")
    assert json.loads(out)["davie"]["value"] == pytest.approx(1.676956674, abs=1e-6)


def test_store_and_report(capsys, tmp_path):
    store = tmp_path / "store"
    assert main(["facet", "--config", "hexagon", "--store", str(store), "--out", str(tmp_path / "f.json")]) == 0
    capsys.readouterr()
    csv_path = tmp_path / "r.csv"
    code, out, _ = run(capsys, "report", "--store", str(store), "--csv", str(csv_path))
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 2 and lines[1].split()[:2] == ["2", "1.25000"]
    assert "5/4" in csv_path.read_text()


def test_report_empty_store(capsys, tmp_path):
    code, out, err = run(capsys, "report", "--store", str(tmp_path / "none"))
    assert code == 0 and "empty" in err


def test_run_config_file(capsys, tmp_path):
    rc = tmp_path / "run.json"
    rc.write_text(json.dumps({"configs": ["hexagon"], "seed": 3}))
    code, out, _ = run(capsys, "gram", "--run-config", str(rc), "--no-timestamp")
    obj = json.loads(out)
    assert code == 0 and obj["shape"] == [3, 3] and obj["run"]["seed"] == 3
    rc.write_text(json.dumps({"bogus": 1}))
    assert run(capsys, "gram", "--run-config", str(rc))[0] == 64


def test_exit_codes(capsys):
    assert run(capsys, "frobnicate")[0] == 64
    assert run(capsys, "gram", "--nope")[0] == 64
    assert run(capsys, "gram", "--config", "no-such-config")[0] == 1
    assert run(capsys, "gen", "--packing", "x.txt")[0] == 64
    assert run(capsys, "facet", "--config", "hexagon", "--n", "2")[0] == 64


def test_console_script_entry():
    res = subprocess.run([sys.executable, "-m", "kgbounds.cli", "catalog"], capture_output=True, text=True)
    assert res.returncode == 0 and "24cell" in res.stdout
