import csv
import json
import subprocess
import sys

import pytest

from asbim.cli import main
from asbim.data import load_dataset
from asbim.model import load_checkpoint


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    out = capsys.readouterr() if capsys is not None else None
    return code, out


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--n-dyads", "12", "--seq-len", "8", "--seed", "3", "--run-dir", str(d)]) == 0
    return d


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_synth_is_byte_identical(tmp_path, synth_dir):
    assert main(["synth", "--n-dyads", "12", "--seq-len", "8", "--seed", "3", "--run-dir", str(tmp_path)]) == 0
    for name in ("sequences.csv", "dyads.csv", "config.txt"):
        assert (tmp_path / name).read_bytes() == (synth_dir / name).read_bytes()


def test_synth_round_trips(synth_dir):
    records = load_dataset(synth_dir)
    assert len(records) == 12 and all(len(r.maut) == 8 for r in records)
    assert "rng_seed = 3" in (synth_dir / "config.txt").read_text()


def test_synth_zero_dyads_writes_headers_only(tmp_path):
    assert main(["synth", "--n-dyads", "0", "--run-dir", str(tmp_path)]) == 0
    assert (tmp_path / "sequences.csv").read_text().strip() == "dyad_id,t,maut,cdef"
    assert len((tmp_path / "dyads.csv").read_text().strip().splitlines()) == 1


def test_synth_timestamped_run_dir(tmp_path):
    assert main(["synth", "--n-dyads", "2", "--seed", "9", "--out", str(tmp_path)]) == 0
    assert main(["synth", "--n-dyads", "2", "--seed", "9", "--out", str(tmp_path)]) == 0
    dirs = sorted(p.name for p in tmp_path.iterdir())
    assert len(dirs) == 2 and all("-synth-seed9" in n for n in dirs)


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("# overrides\nn_dyads = 5\nseq_len = 4\n")
    assert main(["synth", "--config", str(cfg), "--seq-len", "6", "--run-dir", str(tmp_path / "a")]) == 0
    records = load_dataset(tmp_path / "a")
    assert len(records) == 5 and len(records[0].maut) == 6


def test_config_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("n_dyads = 5\nn_dyads = 6\n")
    assert main(["synth", "--config", str(bad), "--run-dir", str(tmp_path / "x")]) == 2
    bad.write_text("no equals sign here\n")
    assert main(["synth", "--config", str(bad), "--run-dir", str(tmp_path / "x")]) == 2
    bad.write_text("not_a_field = 1\n")
    assert main(["synth", "--config", str(bad), "--run-dir", str(tmp_path / "x")]) == 2
    assert "error:" in capsys.readouterr().err


def test_gradcheck_passes(capsys):
    code, out = run(["gradcheck", "--seed", "0", "--q", "4", "--h", "3"], capsys)
    assert code == 0
    assert "PASS" in out.out
    for group in ("W1", "W2", "gamma_logit", "b3"):
        assert group in out.out


def test_gradcheck_catches_corruption(capsys):
    code, out = run(["gradcheck", "--q", "4", "--h", "3", "--corrupt-gradient"], capsys)
    assert code == 5
    assert "FAIL" in out.out


def test_train_outputs_and_reproducibility(tmp_path, synth_dir, capsys):
    argv = ["train", synth_dir, "--epochs", "4", "--q", "4", "--h", "3", "--seed", "2"]
    assert run(argv + ["--run-dir", tmp_path / "a"])[0] == 0
    assert run(argv + ["--run-dir", tmp_path / "b"])[0] == 0
    for name in ("checkpoint.json", "history.csv", "config.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = read_rows(tmp_path / "a" / "history.csv")
    assert [int(r["epoch"]) for r in rows] == [1, 2, 3, 4]
    assert {r["seed"] for r in rows} == {"2"}
    params = load_checkpoint(tmp_path / "a" / "checkpoint.json")
    assert params.q == 4 and params.h == 3
    meta = json.loads((tmp_path / "a" / "checkpoint.json").read_text())
    assert meta["meta"]["config"]["epochs"] == 4


def _copy_with_dyad_rows(src, dst, edit):
    lines = (src / "dyads.csv").read_text().splitlines()
    (dst / "dyads.csv").write_text("\n".join([lines[0]] + [edit(l) for l in lines[1:]]) + "\n")
    (dst / "sequences.csv").write_bytes((src / "sequences.csv").read_bytes())


def test_train_plus_d_without_ic_values(tmp_path, synth_dir):
    _copy_with_dyad_rows(synth_dir, tmp_path, lambda l: ",".join(l.split(",")[:4]) + ",")
    argv = ["train", str(tmp_path), "--epochs", "1", "--q", "3", "--h", "2"]
    assert main(argv + ["--variant", "plus_d", "--run-dir", str(tmp_path / "r1")]) == 2
    assert main(argv + ["--variant", "base", "--run-dir", str(tmp_path / "r2")]) == 0


def test_missing_ic_column_is_ingestion_error(tmp_path, synth_dir):
    _copy_with_dyad_rows(synth_dir, tmp_path, lambda l: l)
    lines = (tmp_path / "dyads.csv").read_text().splitlines()
    (tmp_path / "dyads.csv").write_text("\n".join(",".join(l.split(",")[:4]) for l in lines) + "\n")
    assert main(["train", str(tmp_path), "--run-dir", str(tmp_path / "r")]) == 3


def test_train_bad_settings_exit_2(tmp_path, synth_dir):
    assert main(["train", str(synth_dir), "--lr", "-1", "--run-dir", str(tmp_path)]) == 2
    assert main(["train", str(synth_dir), "--variant", "nope", "--run-dir", str(tmp_path)]) == 2
    assert main(["train", "--run-dir", str(tmp_path)]) == 2


def test_ingestion_error_exit_3(tmp_path):
    (tmp_path / "sequences.csv").write_text("dyad_id,t,maut,cdef\nA,1,0.5,x\n")
    (tmp_path / "dyads.csv").write_text("dyad_id,gender,ext_t1,ext_t2\nA,0,0.5,0.5\n")
    assert main(["train", str(tmp_path), "--run-dir", str(tmp_path / "r")]) == 3


def test_unreadable_input_exit_3(tmp_path):
    code = main(["report", "--sequences", str(tmp_path / "absent.csv"), "--dyads", str(tmp_path / "d.csv"),
                 "--run-dir", str(tmp_path / "r")])
    assert code == 3


def test_unwritable_output_exit_1(tmp_path, synth_dir):
    blocker = tmp_path / "blocker"
    blocker.write_text("a file, not a directory")
    assert main(["report", str(synth_dir), "--run-dir", str(blocker)]) == 1


def test_cv_baselines_only(tmp_path, synth_dir, capsys):
    code, out = run(["cv", synth_dir, "--baselines-only", "--k", "3", "--m", "2", "--seed", "5",
                     "--run-dir", tmp_path], capsys)
    assert code == 0
    assert "t1_carry" in out.out and "two_stage" in out.out
    metrics = read_rows(tmp_path / "metrics.csv")
    assert len(metrics) == 2 * 2 * 3
    assert {r["model"] for r in metrics} == {"t1_carry", "two_stage"}
    preds = read_rows(tmp_path / "predictions.csv")
    assert len(preds) == 2 * 2 * 12
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["config"]["seed"] == 5 and report["config"]["k"] == 3
    assert report["config"]["m_imputations"] == 2
    assert "k = 3" in (tmp_path / "config.txt").read_text()


def test_cv_with_neural_model_is_reproducible(tmp_path, synth_dir):
    argv = ["cv", synth_dir, "--models", "asbim,t1_carry", "--k", "3", "--m", "1",
            "--epochs", "3", "--q", "4", "--h", "3"]
    assert run(argv + ["--run-dir", tmp_path / "a"])[0] == 0
    assert run(argv + ["--run-dir", tmp_path / "b"])[0] == 0
    for name in ("report.json", "metrics.csv", "predictions.csv", "attention.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    attention = read_rows(tmp_path / "a" / "attention.csv")
    assert len(attention) == 12 * 20


def test_report_reference_check(tmp_path, synth_dir, capsys):
    assert main(["report", str(synth_dir), "--run-dir", str(tmp_path / "a")]) == 0
    doc = json.loads((tmp_path / "a" / "descriptives.json").read_text())
    assert "variables" in doc or doc
    code = main(["report", str(synth_dir), "--check-reference", "--run-dir", str(tmp_path / "b")])
    out = capsys.readouterr().out
    assert "check maut mean" in out
    assert code in (0, 5)
    assert code == (5 if "FAIL" in out else 0)


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "asbim.cli", "synth", "--n-dyads", "1",
                           "--run-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "asbim.cli", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 2
