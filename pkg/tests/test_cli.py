import csv
import json

import pytest

from boxct.cli import main


def run(*args):
    return main([str(a) for a in args])


def test_phantom_spots_deterministic(tmp_path):
    a, b = tmp_path / "a.gtm", tmp_path / "b.gtm"
    assert run("phantom", "spots", "--seed", 7, "--count", 12, "--n", 64, "--out", a) == 0
    assert run("phantom", "spots", "--seed", 7, "--count", 12, "--n", 64, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.pgm").exists() and (tmp_path / "a.pgm.json").exists()
    assert (tmp_path / "a.ellipses.csv").exists()


def test_usage_errors(tmp_path, capsys):
    assert run("phantom", "spots", "--n", 0, "--out", tmp_path / "x.gtm") == 2
    assert run("bogus") == 2
    capsys.readouterr()


def test_missing_input(tmp_path, capsys):
    assert run("backproject", "--input", tmp_path / "nope.gtm", "--out", tmp_path / "x.gtm") == 1
    assert "nope.gtm" in capsys.readouterr().err


def test_pipeline(tmp_path, capsys):
    img, sino = tmp_path / "img.gtm", tmp_path / "sino.gtm"
    assert run("phantom", "spots", "--n", 16, "--count", 3, "--out", img) == 0
    assert run("project", "--input", img, "--n", 16, "--views", 20, "--blur", 0.5,
               "--out", sino) == 0
    assert run("noise", "--input", sino, "--snr", 30, "--n", 16, "--out", tmp_path / "n.gtm") == 0
    assert run("backproject", "--input", sino, "--n", 16, "--out", tmp_path / "bp.gtm") == 0
    assert run("gram", "--n", 16, "--views", 20, "--out", tmp_path / "g.gtm") == 0
    capsys.readouterr()
    assert run("reconstruct", "--input", sino, "--n", 16, "--iters", 30, "--reference", img,
               "--trace", tmp_path / "t.csv", "--out", tmp_path / "r.gtm") == 0
    assert json.loads(capsys.readouterr().out)["iterations"] == 30
    assert run("metrics", "--reference", img, "--test", tmp_path / "r.gtm",
               "--csv", tmp_path / "m.csv") == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["snr_db"] > 10
    rows = list(csv.DictReader(open(tmp_path / "m.csv")))
    assert float(rows[0]["snr_db"]) == pytest.approx(rec["snr_db"])


def test_project_from_ellipses(tmp_path):
    assert run("phantom", "ellipses", "--n", 16, "--out", tmp_path / "h.gtm") == 0
    assert run("project", "--ellipses", tmp_path / "h.ellipses.csv", "--n", 16, "--views", 8,
               "--out", tmp_path / "s.gtm") == 0


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 12, "count": 2, "seed": 4}))
    assert run("--config", cfg, "phantom", "spots", "--out", tmp_path / "a.gtm") == 0
    assert run("phantom", "spots", "--n", 12, "--count", 2, "--seed", 4,
               "--out", tmp_path / "b.gtm") == 0
    assert (tmp_path / "a.gtm").read_bytes() == (tmp_path / "b.gtm").read_bytes()
    assert run("--config", cfg, "phantom", "spots", "--n", 8, "--out", tmp_path / "c.gtm") == 0
    assert (tmp_path / "c.gtm").stat().st_size == 32 + 64 * 8


def test_recon_sweep(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run("experiment", "recon-sweep", "--sizes", "16", "--rates", "1,2", "--noise",
               "none,30", "--blur-modes", "off,on", "--iters", 5, "--views", 30, "--seed", 3,
               "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# noise_seed=3"
    rows = list(csv.DictReader(lines[1:]))
    assert len(rows) == 8
    assert {r["noise_db"] for r in rows} == {"none", "30.0"}
    again = tmp_path / "again.csv"
    run("experiment", "recon-sweep", "--sizes", "16", "--rates", "1,2", "--noise", "none,30",
        "--blur-modes", "off,on", "--iters", 5, "--views", 30, "--seed", 3, "--out", again)
    strip = [{k: v for k, v in r.items() if k != "seconds"} for r in rows]
    rows2 = list(csv.DictReader(again.read_text().splitlines()[1:]))
    assert strip == [{k: v for k, v in r.items() if k != "seconds"} for r in rows2]


def test_recon_sweep_size_guard(tmp_path, capsys):
    assert run("experiment", "recon-sweep", "--sizes", "2048", "--out", tmp_path / "x.csv") == 2


def test_bp_bench_shape(tmp_path):
    out = tmp_path / "b.csv"
    assert run("experiment", "bp-bench", "--sizes", "16,32", "--reps", 2, "--views", 20,
               "--out", out) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 4
    assert {(r["size"], float(r["blur"]) > 0) for r in rows} == {
        ("16", False), ("16", True), ("32", False), ("32", True)}


def test_verify_quick_and_corrupt(tmp_path, capsys):
    assert run("verify", "--quick") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["pass"] and set(report["suites"]) == {"kernel", "gram", "adjoint_solver"}
    names = [c["check"] for c in report["checks"]["adjoint_solver"]]
    assert "reconstruct vs dense solve" not in names
    bad = tmp_path / "bad.gtm"
    bad.write_bytes(b"GTM1" + b"\0" * 10)
    assert run("verify", "--quick", "--input", bad) == 3
    report = json.loads(capsys.readouterr().out)
    assert not report["suites"]["input"]
    assert "header" in report["checks"]["input"][0]["diagnostic"]


def test_verify_full(capsys):
    assert run("verify") == 0
    names = [c["check"] for c in json.loads(capsys.readouterr().out)["checks"]["adjoint_solver"]]
    assert "reconstruct vs dense solve" in names
