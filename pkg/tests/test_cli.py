import numpy as np
import pytest

from conftest import BLOCK, CROSS, DATA_DIR
from convqae import cli, io

FAST = ["--steps", "20", "--total-time", "10", "--shots", "128"]


@pytest.fixture
def cross_grid(tmp_path):
    p = tmp_path / "cross.grid"
    io.write_grid(p, CROSS)
    return p


@pytest.fixture
def block_grid(tmp_path):
    p = tmp_path / "block.grid"
    io.write_grid(p, BLOCK)
    return p


def run(*args):
    return cli.main([str(a) for a in args])


def test_train_writes_weights_and_manifest(tmp_path, cross_grid):
    out = tmp_path / "t"
    assert run("train", "--input", cross_grid, "--out-dir", out, "--seed", 3) == 0
    ws = io.read_weights(out / "weights.txt")
    assert ws.shape == (3, 3)
    m = io.read_manifest(out / "manifest.txt")
    assert m["command"] == "train" and m["seed"] == "3" and m["steps"] == "200"


def test_denoise_outputs_and_stats(tmp_path, cross_grid):
    out = tmp_path / "d"
    code = run("denoise", "--input", cross_grid, "--noise-rate", 0.3, "--trials", 4, "--out-dir", out, *FAST)
    assert code == 0
    for name in ("weights.txt", "noisy.grid", "output.grid", "stats.csv", "manifest.txt"):
        assert (out / name).exists()
    header, rows = io.read_csv(out / "stats.csv")
    assert header == ["trial", "wrong_pixels", "complete"] and len(rows) == 4
    assert np.sum(io.read_grid(out / "noisy.grid") != CROSS) == 3


def test_denoise_with_saved_weights(tmp_path, cross_grid):
    run("train", "--input", cross_grid, "--out-dir", tmp_path / "t")
    out = tmp_path / "d"
    assert run("denoise", "--input", cross_grid, "--weights", tmp_path / "t" / "weights.txt", "--out-dir", out) == 0
    assert not (out / "weights.txt").exists()
    assert np.array_equal(io.read_grid(out / "output.grid"), CROSS)


def test_manifest_reproduces_run_byte_for_byte(tmp_path, cross_grid):
    a = tmp_path / "a"
    run("denoise", "--input", cross_grid, "--noise-rate", 0.3, "--trials", 3, "--seed", 7, "--out-dir", a, *FAST)
    b = tmp_path / "b"
    assert run("denoise", "--config", a / "manifest.txt", "--out-dir", b) == 0
    for name in ("weights.txt", "noisy.grid", "output.grid", "stats.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma, mb = io.read_manifest(a / "manifest.txt"), io.read_manifest(b / "manifest.txt")
    ma.pop("out_dir"), mb.pop("out_dir")
    assert ma == mb


def test_flags_override_config(tmp_path, cross_grid):
    cfg = tmp_path / "c.txt"
    cfg.write_text(f"input = {cross_grid}\nseed = 5\nsteps = 20\n")
    out = tmp_path / "o"
    assert run("noise", "--config", cfg, "--seed", 9, "--rate", 0.5, "--out-dir", out) == 0
    m = io.read_manifest(out / "manifest.txt")
    assert m["seed"] == "9" and m["steps"] == "20"


def test_unknown_config_key_is_rejected(tmp_path, cross_grid):
    cfg = tmp_path / "c.txt"
    cfg.write_text("bogus = 1\n")
    with pytest.raises(SystemExit) as exc:
        run("noise", "--config", cfg, "--input", cross_grid)
    assert exc.value.code == 2


def test_failure_exits_nonzero_without_manifest(tmp_path, capsys):
    out = tmp_path / "o"
    bad = tmp_path / "bad.grid"
    bad.write_text("3 3\n0 0\n")
    assert run("noise", "--input", bad, "--out-dir", out) == 1
    assert "bad.grid:2" in capsys.readouterr().err
    assert not (out / "manifest.txt").exists()
    assert run("train", "--out-dir", out) == 1


def test_noise_command_pgm(tmp_path):
    src = tmp_path / "img.pgm"
    io.write_pgm(src, io.binary_to_gray(BLOCK))
    out = tmp_path / "n"
    assert run("noise", "--input", src, "--rate", 0.25, "--out-dir", out) == 0
    noisy = io.read_pgm(out / "noisy.pgm")
    assert np.sum((noisy > 0.5) != BLOCK) == 4


def test_conv_train_and_denoise(tmp_path, block_grid):
    ct = tmp_path / "ct"
    assert run("conv-train", "--input", block_grid, "--out-dir", ct, "--threads", 2) == 0
    store = io.read_store(ct / "store.txt")
    assert len(store) == 16
    cd = tmp_path / "cd"
    code = run(
        "conv-denoise", "--input", block_grid, "--store", ct / "store.txt",
        "--noise-rate", 0.3, "--trials", 2, "--tolerance", 1, "--out-dir", cd, *FAST,
    )
    assert code == 0
    _, rows = io.read_csv(cd / "stats.csv")
    assert len(rows) == 2


def test_threads_do_not_change_results(tmp_path, block_grid):
    outs = []
    for threads in (1, 3):
        out = tmp_path / f"t{threads}"
        run("conv-denoise", "--input", block_grid, "--noise-rate", 0.2, "--out-dir", out, "--threads", threads, *FAST)
        outs.append((out / "output.grid").read_bytes())
    assert outs[0] == outs[1]


def test_mnist_input_via_env(tmp_path, monkeypatch):
    monkeypatch.setenv("CONVQAE_DATA_DIR", str(DATA_DIR))
    out = tmp_path / "m"
    assert run("noise", "--mnist-digit", 0, "--split", "train", "--rate", 0.1, "--out-dir", out) == 0
    img = io.read_pgm(out / "noisy.pgm")
    assert img.shape == (28, 28)


def test_dimred_command(tmp_path):
    out = tmp_path / "dr"
    assert run("dimred", "--data-dir", DATA_DIR, "--split", "train", "--out-dir", out) == 0
    header, rows = io.read_csv(out / "features.csv")
    assert header == ["label", "f_right", "f_down"] and len(rows) == 60
    report = io.read_manifest(out / "report.txt")
    assert 0 <= float(report["quantum_accuracy"]) <= 1
    assert "pca_accuracy" in report


def test_bench_command(tmp_path):
    out = tmp_path / "b"
    code = run(
        "bench", "--normal-sizes", "4,5", "--conv-sides", "3,4", "--repeats", 3,
        "--steps", 2, "--total-time", 1, "--shots", 8, "--out-dir", out,
    )
    assert code == 0
    header, rows = io.read_csv(out / "bench.csv")
    assert header == ["mode", "n", "seconds"]
    assert [(r[0], r[1]) for r in rows] == [("normal", "4"), ("normal", "5"), ("conv", "9"), ("conv", "16")]
    assert "conv_r2" in io.read_manifest(out / "summary.txt")
