import logging
import subprocess
import sys

import pytest

from groupmove.cli import main
from groupmove.world import SensorGrid, read_trajectories


def test_pipeline_roundtrip(tmp_path, monkeypatch, caplog):
    cfg = tmp_path / "scenario.cfg"
    cfg.write_text("n = 5\ngdr = 1\nD = 60\nseed = 3\n")
    sim, mined, packed, unpacked = (tmp_path / d for d in ("sim", "mined", "packed", "unpacked"))

    # the config file wins over the flag
    assert main(["simulate", "--config", str(cfg), "--n", "2", "--history", "150", "--out", str(sim)]) == 0
    seqs = read_trajectories(sim / "trajectories.csv", SensorGrid())
    assert len(seqs) == 5 and len(seqs[0]) == 210

    assert main(["mine", "--input", str(sim / "trajectories.csv"), "--out", str(mined)]) == 0
    models = sorted(mined.glob("group_*.pst"))
    assert (mined / "groups.json").exists() and models

    main(["compress", "--input", str(sim / "trajectories.csv"), "--model", str(models[0]),
          "--groups", str(mined / "groups.json"), "--start", "150", "--out", str(packed)])
    main(["decompress", "--input", str(packed / "batch.bin"), "--model", str(models[0]),
          "--groups", str(mined / "groups.json"), "--out", str(unpacked)])
    out = read_trajectories(unpacked / "trajectories.csv", SensorGrid())
    assert out == [s.window(150, 210) for s in seqs]

    key = "00112233445566778899aabbccddeeff"
    monkeypatch.setenv("GROUPMOVE_KEY", key)
    with caplog.at_level(logging.DEBUG):
        main(["-v", "encrypt", "--input", str(packed / "batch.bin"), "--out", str(tmp_path / "batch.enc")])
        main(["-v", "decrypt", "--input", str(tmp_path / "batch.enc"), "--out", str(tmp_path / "batch.dec")])
    assert (tmp_path / "batch.dec").read_bytes() == (packed / "batch.bin").read_bytes()
    assert key not in caplog.text


def test_groups_default_travels_with_batch(tmp_path):
    sim = tmp_path / "sim"
    main(["simulate", "--n", "3", "--D", "40", "--history", "80", "--out", str(sim)])
    main(["mine", "--input", str(sim / "trajectories.csv"), "--out", str(tmp_path / "m")])
    model = str(tmp_path / "m" / "group_0.pst")
    main(["compress", "--input", str(sim / "trajectories.csv"), "--model", model, "--start", "80",
          "--out", str(tmp_path / "p")])
    assert (tmp_path / "p" / "groups.json").exists()
    main(["decompress", "--input", str(tmp_path / "p" / "batch.bin"), "--model", model,
          "--out", str(tmp_path / "u")])
    grid = SensorGrid()
    original = [s.window(80, 120) for s in read_trajectories(sim / "trajectories.csv", grid)]
    assert read_trajectories(tmp_path / "u" / "trajectories.csv", grid) == original


def test_missing_key(tmp_path, monkeypatch):
    monkeypatch.delenv("GROUPMOVE_KEY", raising=False)
    (tmp_path / "x").write_bytes(b"abc")
    with pytest.raises(SystemExit):
        main(["encrypt", "--input", str(tmp_path / "x"), "--out", str(tmp_path / "y")])


def test_bench_subcommand(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "groupmove", "bench", "--gdrs", "0.1", "0.5", "--ns", "1", "8",
         "--Ds", "50", "--reps", "1", "--out", str(tmp_path)],
        capture_output=True, text=True, check=True,
    )
    assert (tmp_path / "metrics.csv").exists()
    verdicts = [line.split()[0] for line in proc.stdout.splitlines()]
    assert verdicts and set(verdicts) <= {"PASS", "FAIL"}


def test_requires_subcommand():
    with pytest.raises(SystemExit):
        main([])
