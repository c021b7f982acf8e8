import json
import os

import pytest

from bdmst_anneal.cli import main


def test_instances_export(tmp_path):
    out = tmp_path / "catalog"
    assert main(["instances", "export", "--out", str(out)]) == 0
    files = sorted(os.listdir(out))
    assert len(files) == 22
    obj = json.loads((out / "m4ver1.json").read_text())
    assert obj["edges"] == [[1, 2], [2, 3], [3, 4], [4, 5]]
    # pairing rule: only weight lists long enough for the graph are offered
    assert all(len(v) == 4 for v in obj["weight_lists"].values())


def test_map_writes_coo_and_registry(tmp_path):
    out = tmp_path / "problem.coo"
    rc = main(["map", "--graph", "m4ver1", "--weights", "w2", "--out", str(out)])
    assert rc == 0
    text = out.read_text()
    assert text.startswith("# offset")
    sidecar = json.loads((tmp_path / "problem.registry.json").read_text())
    assert sidecar["num_vars"] == 36
    assert sidecar["counts"]["x"] == 6


def test_embed_command(tmp_path):
    out = tmp_path / "embedding.json"
    rc = main(
        [
            "embed",
            "--graph",
            "m4ver1",
            "--size",
            "8,8,4",
            "--attempts",
            "2",
            "--seed",
            "3",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    obj = json.loads(out.read_text())
    assert set(obj) == {"hardware", "chains"}
    assert len(obj["chains"]) == 36


def test_spectrum_gap_trace(tmp_path):
    out = tmp_path / "spectrum"
    rc = main(
        ["spectrum", "gap-trace", "--jf", "2,8", "--grid", "9", "--k", "3", "--out", str(out)]
    )
    assert rc == 0
    files = sorted(os.listdir(out))
    assert files == ["gap_trace_jf2.csv", "gap_trace_jf8.csv"]
    header = (out / "gap_trace_jf2.csv").read_text().splitlines()[0]
    assert header.split(",")[:4] == ["s", "E0", "E1", "E2"]


def test_spectrum_pause(tmp_path):
    out = tmp_path / "spectrum"
    rc = main(
        ["spectrum", "pause", "--sp", "0.86", "--tp", "10", "--out", str(out)]
    )
    assert rc == 0
    lines = (out / "pause_trajectory.csv").read_text().splitlines()
    assert lines[0] == "s,p_ground"


RUN_CONFIG = """
[instances]
labels = ["m4ver1"]
weights = "w2"
delta = 2

[embedding]
size = [8, 8, 4]
attempts = 2

[schedule]
s_p = ["none"]
t_p = [0.0]
j_ferro = [1.6]

[sampling]
reads = 60
gauges = 2
sweeps = 48

[run]
seed = 7
"""


def test_run_and_report_and_resume(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(RUN_CONFIG)
    out1 = tmp_path / "res1"
    assert main(["run", "--config", str(cfg), "--out", str(out1)]) == 0
    results = (out1 / "results.csv").read_bytes()
    header = results.decode().splitlines()
    assert header[1].startswith("instance,")
    assert len(header) == 3  # comment, header, one grid point

    # identical rerun in a fresh directory gives identical bytes
    out2 = tmp_path / "res2"
    assert main(["run", "--config", str(cfg), "--out", str(out2)]) == 0
    assert (out2 / "results.csv").read_bytes() == results

    # resuming over a completed manifest also reproduces the same bytes
    assert main(["run", "--config", str(cfg), "--out", str(out1)]) == 0
    assert (out1 / "results.csv").read_bytes() == results

    assert main(["report", "--results", str(out1 / "results.csv"), "--bootstrap", "500"]) == 0
    summary = (out1 / "summary.csv").read_text().splitlines()
    assert summary[1] == "s_p,t_p,jf,n,median,p35,p65"
    assert len(summary) == 3


def test_run_rejects_bad_config(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[instances]\nlabels = [\"nope\"]\n")
    with pytest.raises(Exception) as err:
        main(["run", "--config", str(cfg)])
    assert "labels" in str(err.value)


def test_run_deterministic_across_processes(tmp_path):
    import subprocess
    import sys

    cfg = tmp_path / "run.toml"
    cfg.write_text(RUN_CONFIG)
    outputs = []
    for hashseed, outdir in (("1", "proc_a"), ("1234", "proc_b")):
        out = tmp_path / outdir
        env = dict(os.environ, PYTHONHASHSEED=hashseed)
        proc = subprocess.run(
            [sys.executable, "-m", "bdmst_anneal.cli", "run", "--config", str(cfg), "--out", str(out)],
            env=env,
            capture_output=True,
            text=True,
            timeout=300,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append((out / "results.csv").read_bytes())
    assert outputs[0] == outputs[1]


MIXED_CONFIG = """
[instances]
labels = ["m5ver5", "m4ver1"]
weights = "w2"
delta = 2

[embedding]
size = [8, 8, 4]
attempts = 2

[sampling]
reads = 40
gauges = 2
sweeps = 32

[run]
seed = 3
"""


def test_run_records_failures_and_continues(tmp_path, capsys):
    # m5ver5 is infeasible at degree bound 2: its grid point must fail and
    # be recorded while the rest of the sweep completes; exit code nonzero
    cfg = tmp_path / "mixed.toml"
    cfg.write_text(MIXED_CONFIG)
    out = tmp_path / "res"
    rc = main(["run", "--config", str(cfg), "--out", str(out)])
    assert rc == 1
    manifest = json.loads((out / "manifest.json").read_text())
    statuses = {k.split("|")[0]: v["status"] for k, v in manifest.items()}
    assert statuses["m5ver5"] == "error"
    assert statuses["m4ver1"] == "done"
    rows = (out / "results.csv").read_text().splitlines()
    assert len(rows) == 3 and rows[2].startswith("m4ver1")
