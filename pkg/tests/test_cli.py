import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from asdimlab.cli import main

CYCLE5_DOC = {
    "generators": ["a", "b", "c", "d", "e"],
    "matrix": [
        [1, 2, 0, 0, 2],
        [2, 1, 2, 0, 0],
        [0, 2, 1, 2, 0],
        [0, 0, 2, 1, 2],
        [2, 0, 0, 2, 1],
    ],
}
DINF_DOC = {
    "type": "table_amalgam",
    "A": {"elements": ["e", "a"], "table": [[0, 1], [1, 0]]},
    "B": {"elements": ["e", "b"], "table": [[0, 1], [1, 0]]},
    "embed_A": [0],
    "embed_B": [0],
}
Z2_DOC = {"generators": ["a"], "matrix": [[1]]}


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_bound_cycle5(tmp_path, capsys):
    path = write(tmp_path, "c5.json", CYCLE5_DOC)
    assert main(["bound", path, "--out", str(tmp_path / "out")]) == 0
    out = capsys.readouterr().out
    assert "dim N = 1, asdim <= 2, ch bound = 3" in out
    report = json.loads((tmp_path / "out" / "bound.json").read_text())
    assert report["asdim_bound"] == 2 and report["chromatic_bound"] == 3


def test_bound_simplex_reports_finite(tmp_path, capsys):
    path = write(tmp_path, "z2.json", Z2_DOC)
    assert main(["bound", path]) == 0
    assert "finite group, asdim = 0" in capsys.readouterr().out


def test_malformed_json_exits_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{nope")
    assert main(["bound", str(path)]) == 2


def test_cover_verify_dinf(tmp_path, capsys):
    path = write(tmp_path, "dinf.json", DINF_DOC)
    assert main(["cover", path, "--r", "4", "--verify", "--out", str(tmp_path / "o")]) == 0
    cert = json.loads((tmp_path / "o" / "certificate.json").read_text())
    assert cert["n"] == 1
    assert len(cert["colors"]) == 2
    ball = json.loads((tmp_path / "o" / "ball.json").read_text())
    assert ball["elements"][0]["word"] == "e"


def test_cover_cap_exit_3(tmp_path):
    path = write(tmp_path, "c5.json", CYCLE5_DOC)
    assert main(["cover", path, "--r", "4", "--cap-elements", "50"]) == 3


def test_cover_bad_R_override_rejected(tmp_path, capsys):
    path = write(tmp_path, "dinf.json", DINF_DOC)
    assert main(["cover", path, "--r", "4", "--R", "2"]) == 2
    assert "r > 4R" in capsys.readouterr().err


def test_check_dinf_all_pass(tmp_path, capsys):
    path = write(tmp_path, "dinf.json", DINF_DOC)
    assert main(["check", path, "--r", "8", "--R", "1", "--ball", "24", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "assertion-2.1: pass" in out
    assert "assertion-2.2: pass" in out
    assert "prop-2.2-disjointness: pass" in out
    assert "prop-2.1-separation: pass" in out
    assert "partition: pass" in out


def test_davis_z2(tmp_path, capsys):
    path = write(tmp_path, "z2.json", Z2_DOC)
    assert main(["davis", path, "--R", "1", "--out", str(tmp_path / "d")]) == 0
    assert "vertices=3" in capsys.readouterr().out
    assert (tmp_path / "d" / "davis.dot").exists()


def test_dualgraph_dinf(tmp_path, capsys):
    path = write(tmp_path, "dinf.json", DINF_DOC)
    assert main(["dualgraph", path, "--R", "6", "--out", str(tmp_path / "g")]) == 0
    dot = (tmp_path / "g" / "dualgraph.dot").read_text()
    assert 'label="A"' in dot and 'label="B"' in dot


def run_cli(args, out_dir, hash_seed):
    env = dict(os.environ, PYTHONHASHSEED=hash_seed)
    subprocess.run(
        [sys.executable, "-m", "asdimlab.cli", *args, "--out", str(out_dir)],
        check=True,
        env=env,
        capture_output=True,
    )
    return {p.name: p.read_bytes() for p in sorted(Path(out_dir).iterdir())}


@pytest.mark.parametrize(
    "args_fn, doc, name",
    [
        (lambda p: ["bound", p], CYCLE5_DOC, "c5.json"),
        (lambda p: ["cover", p, "--r", "4"], DINF_DOC, "dinf.json"),
        (lambda p: ["davis", p, "--R", "2"], Z2_DOC, "z2.json"),
        (lambda p: ["dualgraph", p, "--R", "5"], DINF_DOC, "dinf.json"),
    ],
)
def test_outputs_byte_identical_across_runs(tmp_path, args_fn, doc, name):
    # determinism under different hash seeds: byte-for-byte equal artifacts
    path = write(tmp_path, name, doc)
    first = run_cli(args_fn(path), tmp_path / "run1", "1")
    second = run_cli(args_fn(path), tmp_path / "run2", "977")
    assert first.keys() == second.keys()
    for key in first:
        assert first[key] == second[key], f"artifact {key} differs between runs"
