import json
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from probgraphon import io
from probgraphon.cli import main
from probgraphon.graphon import relabel
from probgraphon.harness import random_graphon
from probgraphon.homdensity import DecoratedGraph
from probgraphon.measures import ProbabilityMeasure, WeightSpace

F = Fraction


@pytest.fixture
def files(tmp_path, diff_kernel, sbm):
    rng = np.random.default_rng(0)
    sp = WeightSpace.discrete((0, 1))
    w = random_graphon(rng, sp, (F(1, 3),) * 3)
    objs = {
        "mu": io.measure_to_json(ProbabilityMeasure(sp, [0.3, 0.7])),
        "diff": io.graphon_to_json(diff_kernel),
        "sbm": io.graphon_to_json(sbm),
        "w": io.graphon_to_json(w),
        "w_rel": io.graphon_to_json(relabel(w, [2, 0, 1])),
        "edge": io.decorated_to_json(DecoratedGraph(2, [(0, 1)], [[0.0, 1.0]])),
        "fgraph": {"v": 3, "edges": [[0, 1], [1, 2]], "decorations": {"family_indices": [1, 2]}},
        "spaces": {"bin": io.space_to_json(sp)},
        "w_ref": {**io.graphon_to_json(w), "space": "bin"},
        "bad": "{not json",
        "nan": '{"mass": [NaN]}',
        "big": io.graphon_to_json(random_graphon(rng, sp, (F(1, 16),) * 16)),
    }
    out = {}
    for name, obj in objs.items():
        path = tmp_path / f"{name}.json"
        path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        out[name] = str(path)
    out["dir"] = str(tmp_path)
    return out


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_dist(capsys, files):
    code, out, _ = run(capsys, "dist", "--metric", "kr", "--mu", files["mu"], "--nu", files["mu"])
    assert code == 0 and json.loads(out)["distance"] == 0.0


def test_cutnorm_example(capsys, files):
    code, out, _ = run(capsys, "cutnorm", "--graphon", files["diff"])
    res = json.loads(out)
    assert code == 0 and res["value"] == pytest.approx(0.0375)
    assert res["witness"]["rows"] == [0] and res["witness"]["cols"] == [0]
    code, out, _ = run(capsys, "cutnorm", "--graphon", files["diff"], "--metric", "kr", "--mode", "heuristic")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.05)


def test_delta_relabel_zero(capsys, files):
    code, out, _ = run(capsys, "delta", "--u", files["w"], "--w", files["w_rel"], "--metric", "kr")
    assert code == 0 and json.loads(out)["value"] == 0.0


def test_spaces_table(capsys, files):
    code, out, _ = run(capsys, "cutdist", "--u", files["w"], "--w", files["w_ref"], "--spaces", files["spaces"])
    assert code == 0 and json.loads(out)["value"] == 0.0


def test_homdens(capsys, files):
    code, out, _ = run(capsys, "homdens", "--decorated", files["edge"], "--graphon", files["sbm"])
    assert code == 0 and json.loads(out)["density"] == pytest.approx(0.5)
    code, out, _ = run(capsys, "homdens", "--decorated", files["fgraph"], "--graphon", files["sbm"],
                       "--mode", "mc", "--samples", "2000")
    res = json.loads(out)
    assert code == 0 and res["stderr"] > 0


def test_sample_and_graph_density(capsys, files, tmp_path):
    code, out, _ = run(capsys, "sample", "--graphon", files["sbm"], "--k", 5, "--seed", 3)
    assert code == 0
    g = json.loads(out)["graph"]
    assert g["n"] == 5
    path = tmp_path / "g.json"
    path.write_text(json.dumps(g))
    code, out, err = run(capsys, "homdens", "--decorated", files["edge"], "--graph", str(path))
    assert code == 2 and "cemetery" in err
    code, out, _ = run(capsys, "sample", "--graphon", files["sbm"], "--k", 4, "--measure-graph")
    assert code == 0 and len(json.loads(out)["types"]) == 4


def test_regularize(capsys, files):
    code, out, _ = run(capsys, "regularize", "--graphon", files["w"], "--target-k", 2)
    res = json.loads(out)
    assert code == 0 and len(res["classes"]) <= 2 and res["error"] <= res["error_upper_bound"] + 1e-12


def test_verify_writes_csv(capsys, files, tmp_path):
    out_csv = tmp_path / "norms.csv"
    code, out, _ = run(capsys, "verify", "norms", "--trials", 5, "--out", out_csv)
    assert code == 0 and json.loads(out)["aggregate"]["trials"] == 5
    assert out_csv.read_text().startswith("experiment:str,")
    code, out, _ = run(capsys, "verify", "norms", "--trials", 0)
    assert code == 0 and json.loads(out)["aggregate"]["trials"] == 0


@pytest.mark.parametrize(
    "argv, code",
    [
        (["cutnorm", "--graphon", "{bad}"], 2),
        (["cutnorm", "--graphon", "{nan}"], 2),
        (["cutnorm", "--graphon", "{dir}/missing.json"], 2),
        (["cutnorm", "--graphon", "{diff}", "--metric", "prohorov"], 2),
        (["dist", "--mu", "{mu}", "--nu", "{mu}", "--seed", "-1"], 2),
        (["cutnorm", "--graphon", "{big}"], 3),
        (["delta", "--u", "{big}", "--w", "{big}", "--metric", "kr"], 3),
        (["verify", "sampling2", "--w", "{big}", "--trials", "1"], 3),
    ],
)
def test_exit_codes(capsys, files, argv, code):
    got, out, err = run(capsys, *(a.format(**files) for a in argv))
    assert got == code and out == "" and err


def test_determinism_all_verbs(capsys, files):
    cases = [
        ["dist", "--mu", files["mu"], "--nu", files["mu"], "--metric", "prohorov"],
        ["cutnorm", "--graphon", files["diff"], "--mode", "heuristic", "--seed", 4],
        ["cutdist", "--u", files["w"], "--w", files["sbm"], "--mode", "heuristic", "--seed", 4],
        ["delta", "--u", files["w"], "--w", files["sbm"], "--mode", "anneal", "--seed", 4],
        ["sample", "--graphon", files["w"], "--k", 7, "--seed", 4],
        ["homdens", "--decorated", files["fgraph"], "--graphon", files["w"], "--mode", "mc", "--samples", 500],
        ["regularize", "--graphon", files["w"], "--target-k", 2, "--seed", 4],
        ["verify", "norms", "--trials", 3, "--seed", 4],
    ]
    for argv in cases:
        first = run(capsys, *argv)
        assert first[0] == 0, argv
        assert run(capsys, *argv)[1] == first[1]


def test_console_entry_point(files):
    proc = subprocess.run(
        [sys.executable, "-m", "probgraphon.cli", "cutnorm", "--graphon", files["diff"]],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["value"] == pytest.approx(0.0375)
