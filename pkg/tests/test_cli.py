import csv
import subprocess
import sys
from pathlib import Path

import pytest

from orlisov.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
CANON = str(CONFIGS / "canonical.toml")

BASE = """
[young]
kind = "power"
p = 2.0
[domain]
dim = 1
bounds = [[0.0, 1.0]]
n_cells = [16]
"""


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def _write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_young_audit(tmp_path, capsys):
    assert main(["young-audit", "--config", CANON, "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "young_audit.csv")
    assert rows[0] == ["name", "samples", "worst_margin", "pass"]
    assert {r[0] for r in rows[1:]} >= {"growth_indices", "delta2", "S_condition", "Q_condition"}
    assert "m0=2" in capsys.readouterr().out


def test_modular_fixture(tmp_path):
    assert main(["modular", "--config", CANON, "--out", str(tmp_path), "--fixture", "zero"]) == 0
    rows = dict(_rows(tmp_path / "modular.csv")[1:])
    assert all(float(v) == 0.0 for v in rows.values())


def test_modular_bubble_rows(tmp_path):
    assert main(["modular", "--config", CANON, "--out", str(tmp_path), "--fixture", "bubble"]) == 0
    rows = _rows(tmp_path / "modular.csv")
    assert rows[0] == ["quantity", "value"] and len(rows) == 7
    assert main(["modular", "--config", CANON, "--out", str(tmp_path), "--fixture", "bubble", "--refine", "2"]) == 0
    assert len(_rows(tmp_path / "modular.csv")) == 19


def test_modular_input_roundtrip(tmp_path):
    from orlisov import Domain, fixture, write_csv
    write_csv(fixture("bubble", Domain.interval(0.0, 1.0, 32)), tmp_path / "u.csv")
    assert main(["modular", "--config", CANON, "--out", str(tmp_path / "a"), "--input", str(tmp_path / "u.csv")]) == 0
    assert main(["modular", "--config", CANON, "--out", str(tmp_path / "b"), "--fixture", "bubble"]) == 0
    assert (tmp_path / "a" / "modular.csv").read_bytes() == (tmp_path / "b" / "modular.csv").read_bytes()


def test_verify_filtered(tmp_path):
    assert main(["verify", "--config", CANON, "--out", str(tmp_path), "--property", "lemma2"]) == 0
    names = [r[0] for r in _rows(tmp_path / "verify.csv")[1:]]
    assert names == ["lemma2_i", "lemma2_ii", "lemma2_iii"]


def test_verify_flags_nonconvex(tmp_path):
    cfg = str(CONFIGS / "nonconvex.toml")
    assert main(["verify", "--config", cfg, "--out", str(tmp_path), "--property", "young_convexity"]) == 1


def test_solve_canonical_deterministic(tmp_path):
    for sub in ("a", "b"):
        main(["solve", "--config", CANON, "--out", str(tmp_path / sub)])
    for name in ("report.csv", "solution_u1.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    report = dict(_rows(tmp_path / "a" / "report.csv")[1:])
    assert float(report["I1"]) < 0


def test_seed_override(tmp_path):
    assert main(["young-audit", "--config", CANON, "--seed", "5", "--out", str(tmp_path)]) == 0


def test_gate_refusal_and_force(tmp_path):
    cfg = _write(tmp_path, 'lambda = 1.0\n' + BASE + '[nonlinearity]\nkind = "pure_power"\nq = 1.5\n')
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "r")]) == 3
    assert dict(_rows(tmp_path / "r" / "report.csv")[1:])["status"] == "refused"
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "f"), "--force"]) in (0, 1)


def test_q_above_m0(tmp_path):
    cfg = _write(tmp_path, BASE + '[nonlinearity]\nkind = "pure_power"\nq = 2.5\n')
    assert main(["young-audit", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 3


@pytest.mark.parametrize("text,key", [
    (BASE.replace('kind = "power"\n', ""), "young.kind"),
    (BASE.replace("p = 2.0", "p = 2.0\nfoo = 1"), "young.foo"),
    (BASE.replace("p = 2.0", 'p = "two"'), "young.p"),
    (BASE + "[scheme]\ngauss_order = 1\n", "gauss_order"),
    (BASE.replace('kind = "power"\np = 2.0', 'kind = "custom"\nM = "t**2"\nm = "os.system(t)"'), "young.m"),
])
def test_config_errors(tmp_path, capsys, text, key):
    cfg = _write(tmp_path, text)
    assert main(["young-audit", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert key in capsys.readouterr().err
    assert not (tmp_path / "o" / "young_audit.csv").exists()


def test_missing_config_file(tmp_path):
    assert main(["young-audit", "--config", str(tmp_path / "nope.toml")]) == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "orlisov", "young-audit", "--config", CANON,
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
