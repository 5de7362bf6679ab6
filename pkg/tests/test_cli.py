import csv
import json

import pytest

from pmk.cli import main
from pmk.planar import dump, generate


@pytest.fixture
def files(tmp_path):
    g = generate("grid", {"rows": 5, "cols": 5})
    w = generate("random-triangulation", {"n": 40, "wmax": 9}, seed=3)
    dump(g, tmp_path / "g.txt")
    dump(w, tmp_path / "w.txt")
    return tmp_path


def run(capsys, *argv):
    code = main(["--json", *map(str, argv)])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_gen_and_validate(capsys, files):
    out = files / "t.txt"
    assert main(["gen", "random-triangulation", "--n", "30", "-o", str(out)]) == 0
    capsys.readouterr()
    code, res = run(capsys, "validate", out)
    assert code == 0 and res["valid"]


def test_commands_ok(capsys, files):
    g, w = files / "g.txt", files / "w.txt"
    assert run(capsys, "sep", g, "--tree", "bfs:3")[0] == 0
    assert run(capsys, "bdd", g, "--threshold", "8", "--validate")[0] == 0
    code, res = run(capsys, "compress", g, "--sources", "face:0:3", "--check")
    assert code == 0 and res["ell"] == 3
    assert run(capsys, "fast-compress", g, "--prime", "auto", "--check")[0] == 0
    assert run(capsys, "coreset", w, "--delta", "2")[0] == 0
    assert run(capsys, "coreset", w, "--delta", "2", "--fast")[0] == 0
    assert run(capsys, "mcompress", w, "--eps", "1/2")[0] == 0
    code, res = run(capsys, "diameter", g)
    assert code == 0 and res["value"] == 8
    code, res = run(capsys, "sim", "diameter", g)
    assert code == 0 and res["value"] == 8
    code, res = run(capsys, "sim", "labels", w, "--check")
    assert code == 0


def test_exit_codes(capsys, files):
    assert main(["validate", str(files / "missing.txt")]) == 2
    bad = files / "bad.txt"
    bad.write_text("planar v=2 e=5\n")
    assert main(["validate", str(bad)]) == 2
    assert main(["compress", str(files / "g.txt"), "--sources", "edge:1"]) == 2
    capsys.readouterr()


def test_k5_rotation_exit_code(capsys, tmp_path):
    lines = ["planar v=5 e=10 weighted=0"]
    pairs = [(i, j) for i in range(5) for j in range(i + 1, 5)]
    rot = {v: [e for e, p in enumerate(pairs) if v in p] for v in range(5)}
    lines += [f"rot {v}: " + " ".join(map(str, rot[v])) for v in range(5)]
    lines += [f"edge {e}: {u} {v} 1" for e, (u, v) in enumerate(pairs)]
    (tmp_path / "k5.txt").write_text("\n".join(lines) + "\n")
    assert main(["validate", str(tmp_path / "k5.txt")]) == 3
    capsys.readouterr()


def _spec(tmp_path, **kw):
    spec = {"command": "compress",
            "graphs": [{"kind": "grid", "params": {"rows": k, "cols": k}} for k in range(4, 13, 4)],
            "repetitions": 1, "seed": 0,
            "out_json": str(tmp_path / "r.json"), "out_csv": str(tmp_path / "r.csv")}
    spec.update(kw)
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    return path, spec


def test_suite_schema(capsys, tmp_path):
    path, spec = _spec(tmp_path)
    assert main(["suite", str(path)]) == 0
    rows = list(csv.reader(open(spec["out_csv"])))
    assert rows[0] == ["graph", "rep", "seed", "n", "D", "ell", "distinct_tuples", "bound_ratio"]
    assert len(rows) == 4
    report = json.loads(open(spec["out_json"]).read())
    assert set(report["columns"].values()) <= {"measured", "oracle", "charged"}
    capsys.readouterr()


def test_suite_zero_repetitions(capsys, tmp_path):
    path, spec = _spec(tmp_path, repetitions=0)
    assert main(["suite", str(path)]) == 0
    assert open(spec["out_csv"]).read().count("\n") == 1
    capsys.readouterr()


def test_suite_replay_identical(capsys, tmp_path):
    path, spec = _spec(tmp_path, command="sim-diameter", repetitions=2,
                       graphs=[{"kind": "random-triangulation", "params": {"n": 40}}])
    main(["suite", str(path)])
    first = open(spec["out_csv"]).read(), open(spec["out_json"]).read()
    main(["suite", str(path)])
    assert (open(spec["out_csv"]).read(), open(spec["out_json"]).read()) == first
    capsys.readouterr()


def test_bad_spec(capsys, tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"command": "nope", "graphs": []}))
    assert main(["suite", str(p)]) == 2
    p.write_text("{not json")
    assert main(["suite", str(p)]) == 2
    capsys.readouterr()
