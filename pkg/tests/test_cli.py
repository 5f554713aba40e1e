import json
import subprocess
import sys

import pytest

from conftest import FIXTURES
from defgraph.bundle_io import bundle_files, read_bundle, read_manifest
from defgraph.cli import run

LISTING = str(FIXTURES / "listing1.def")
COMPLETED = str(FIXTURES / "listing1_completed.def")
TECH = str(FIXTURES / "listing1.tech")


def _kv(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line)


def test_parse_summary(capsys):
    assert run(["parse", LISTING]) == 0
    out = _kv(capsys.readouterr().out)
    assert out["design"] == "ac97_top"
    assert out["dbu_per_micron"] == "2000"
    assert out["die_area"] == "0 0 434390 434390"
    assert out["stage"] == "routing"


def test_parse_emit_roundtrip(tmp_path, capsys):
    target = tmp_path / "out.def"
    assert run(["parse", LISTING, "--emit", "-o", str(target)]) == 0
    assert run(["parse", str(target)]) == 0
    summaries = capsys.readouterr().out
    assert "design=ac97_top" in summaries


def test_build_all_on_listing(tmp_path, capsys):
    out = tmp_path / "out"
    assert run(["build", COMPLETED, "--view", "all", "--stage", "route", "--tech", TECH, "-o", str(out)]) == 0
    assert "parity=PASS" in capsys.readouterr().out
    for view in "bcdef":
        g = read_bundle(out / view)
        assert g.view == view and g.stage.value == "routing"


def test_build_single_view_variant(tmp_path):
    out = tmp_path / "e2"
    assert run(["build", COMPLETED, "--view", "e", "--view-variant", "table2", "--tech", TECH,
                "--stage", "place", "-o", str(out)]) == 0
    m = read_manifest(out)
    assert m["decisions"]["view_variant"] == "table2"
    assert m["stage"] == "placement"


def test_build_fragment_reports_dangling_reference(tmp_path, capsys):
    code = run(["build", LISTING, "--view", "b", "-o", str(tmp_path / "x")])
    assert code == 1
    assert "listing1.def" in capsys.readouterr().err


def test_syntax_error_has_location(tmp_path, capsys):
    bad = tmp_path / "bad.def"
    bad.write_text("DESIGN x ;\nUNITS DISTANCE MICRONS 1000 ;\nCOMPONENTS 1 ;\n - a BUF + PLACED ( 1 ) N ;\n")
    code = run(["parse", str(bad)])
    assert code != 0
    err = capsys.readouterr().err
    assert f"{bad}:4:" in err


def test_usage_errors():
    assert run([]) == 2
    assert run(["build"]) == 2
    assert run(["split", "x", "--ratios", "1,2"]) == 2
    assert run(["frobnicate"]) == 2


def test_missing_file_is_io_error(tmp_path):
    assert run(["parse", str(tmp_path / "nope.def")]) == 3


def _gen(tmp_path, i, stage="routing"):
    path = tmp_path / f"d{i}.def"
    assert run(["gen", "--gates", str(20 + i), "--seed", str(i), "--io-count", "3", "--stage", stage,
                "-o", str(path), "-q"]) == 0
    return path


def _build(tmp_path, i, vocab):
    path = _gen(tmp_path, i)
    out = tmp_path / f"b{i}"
    assert run(["build", str(path), "--view", "d", "--tech", str(path.with_suffix(".tech")),
                "--vocab", str(vocab), "-o", str(out), "-q"]) == 0
    return out


def test_merge_and_split(tmp_path, capsys):
    vocab = tmp_path / "vocab.tsv"
    bundles = [str(_build(tmp_path, i, vocab)) for i in range(4)]
    merged = tmp_path / "merged"
    assert run(["merge", *bundles, "-o", str(merged)]) == 0
    assert "designs=4" in capsys.readouterr().out
    assert run(["split", str(merged), "--seed", "1"]) == 0
    out = _kv(capsys.readouterr().out.replace(" ", "\n"))
    assert (out["train"], out["val"], out["test"]) == ("1", "1", "2")  # floor 2/0/2, val takes one from train
    assert read_bundle(merged).design_split is not None


def test_split_two_designs_fails(tmp_path, capsys):
    vocab = tmp_path / "vocab.tsv"
    bundles = [str(_build(tmp_path, i, vocab)) for i in range(2)]
    merged = tmp_path / "merged"
    assert run(["merge", *bundles, "-o", str(merged)]) == 0
    assert run(["split", str(merged), "--ratios", "70,15,15"]) == 1
    assert "cannot fill" in capsys.readouterr().err


def test_merge_incompatible_views(tmp_path):
    path = _gen(tmp_path, 0)
    tech = str(path.with_suffix(".tech"))
    assert run(["build", str(path), "--view", "b", "--tech", tech, "-o", str(tmp_path / "b"), "-q"]) == 0
    assert run(["build", str(path), "--view", "f", "--tech", tech, "-o", str(tmp_path / "f"), "-q"]) == 0
    assert run(["merge", str(tmp_path / "b"), str(tmp_path / "f"), "-o", str(tmp_path / "m"), "-q"]) == 1


def test_stats_on_bundle_and_def(tmp_path, capsys):
    path = _gen(tmp_path, 1)
    out = tmp_path / "b"
    assert run(["build", str(path), "--view", "b", "-o", str(out), "-q"]) == 0
    capsys.readouterr()
    assert run(["stats", str(out), "--exact"]) == 0
    a = _kv(capsys.readouterr().out)
    assert run(["stats", str(path), "--view", "b"]) == 0
    b = _kv(capsys.readouterr().out)
    assert a == b
    assert a["asp_mode"] == "exact"
    assert a["convention.unreachable_pairs"] == "excluded"
    assert run(["stats", str(out), "--sample", "5", "--seed", "3"]) == 0
    c = _kv(capsys.readouterr().out)
    assert (c["asp_mode"], c["asp_samples"], c["asp_seed"]) == ("sampled", "5", "3")


def test_validate_def_and_bundle(tmp_path, capsys):
    assert run(["validate", COMPLETED, "--tech", TECH]) == 0
    out = capsys.readouterr().out
    assert "parity[placement]=PASS" in out and "parity[routing]=PASS" in out and "db_issues=0" in out
    bundle = tmp_path / "b"
    assert run(["build", COMPLETED, "--view", "c", "-o", str(bundle), "-q"]) == 0
    assert run(["validate", str(bundle)]) == 0
    (bundle / "tables" / "node.gate.gate.x").write_bytes(b"")
    assert run(["validate", str(bundle)]) == 3


def test_config_file_precedence(tmp_path):
    path = _gen(tmp_path, 2)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"view": "f", "view-variant": "canonical"}))
    assert run(["--config", str(cfg), "build", str(path), "-o", str(tmp_path / "x"), "-q"]) == 0
    assert read_manifest(tmp_path / "x")["view"] == "f"
    assert run(["--config", str(cfg), "build", str(path), "--view", "c", "-o", str(tmp_path / "y"), "-q"]) == 0
    assert read_manifest(tmp_path / "y")["view"] == "c"
    cfg.write_text("[1, 2]")
    assert run(["--config", str(cfg), "parse", str(path)]) == 2


def test_gen_infeasible(tmp_path):
    assert run(["gen", "--gates", "0", "-o", str(tmp_path / "z.def"), "-q"]) == 1


def test_repeated_runs_byte_identical(tmp_path):
    path = _gen(tmp_path, 3)
    for name in ("a", "b"):
        assert run(["build", str(path), "--view", "all", "-o", str(tmp_path / name), "-q"]) == 0
    assert bundle_files(tmp_path / "a") == bundle_files(tmp_path / "b")


def test_threads_env_respected(tmp_path, monkeypatch):
    path = _gen(tmp_path, 4)
    monkeypatch.setenv("R2G_THREADS", "1")
    assert run(["build", str(path), "-o", str(tmp_path / "one"), "-q"]) == 0
    monkeypatch.setenv("R2G_THREADS", "4")
    assert run(["build", str(path), "-o", str(tmp_path / "four"), "-q"]) == 0
    assert bundle_files(tmp_path / "one") == bundle_files(tmp_path / "four")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "defgraph", "parse", LISTING], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "design=ac97_top" in proc.stdout


@pytest.mark.parametrize("flag", ["-q", "-v"])
def test_verbosity_after_subcommand(flag):
    assert run(["parse", LISTING, flag]) == 0
