"""Batch experiment orchestration.

A run sweeps (pause location, pause length, chain strength) grid points
over an instance ensemble: compile, embed once per instance, sample with
gauge averaging at every grid point, and write one result row per point.
A manifest makes interrupted runs resumable, and every output is a pure
function of the config so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import __version__
from .hardware import HardwareGraph, chimera_graph, pegasus_graph
from .instances import delta2_labels
from .metrics import (
    RunResult,
    bootstrap_percentiles,
    difference_of_medians,
    fmt_extended,
    median_of_differences,
    parse_extended,
)

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    """Sweep definition; defaults mirror the reference run parameters."""

    labels: list[str] = field(default_factory=delta2_labels)
    weights: str = "w2"
    delta: int = 2
    root: Optional[int] = None  # None = highest-degree vertex
    preprocess: bool = True
    epsilon: int = 0
    hardware: str = "chimera"
    hw_size: tuple[int, ...] = (12, 12, 4)
    attempts: int = 4
    t_a: float = 1.0
    s_p: list[Optional[float]] = field(default_factory=lambda: [None])
    t_p: list[float] = field(default_factory=lambda: [0.0])
    j_ferro: list[float] = field(default_factory=lambda: [1.6])
    reads: int = 500  # per gauge; 100 gauges x 500 reads = 50k anneals
    gauges: int = 100
    sweeps: int = 128
    beta_start: float = 0.1
    beta_end: float = 10.0
    seed: int = 0
    out_dir: str = "results"

    def validate(self) -> None:
        if not self.labels:
            raise ConfigError("instances.labels: empty selection")
        known = set(delta2_labels()) | {"m5ver5"}
        for lbl in self.labels:
            if lbl not in known:
                raise ConfigError(f"instances.labels: unknown graph {lbl!r}")
        if self.reads < 1:
            raise ConfigError("sampling.reads: must be >= 1")
        if self.gauges < 1:
            raise ConfigError("sampling.gauges: must be >= 1")
        if not self.j_ferro:
            raise ConfigError("schedule.j_ferro: empty grid")
        if not self.s_p or not self.t_p:
            raise ConfigError("schedule.s_p / schedule.t_p: empty grid")
        for sp in self.s_p:
            if sp is not None and not (0.0 < sp < 1.0):
                raise ConfigError(f"schedule.s_p: {sp} outside (0, 1)")
        for tp in self.t_p:
            if tp < 0:
                raise ConfigError("schedule.t_p: negative pause length")

    def hardware_graph(self) -> HardwareGraph:
        if self.hardware == "chimera":
            return chimera_graph(*self.hw_size)
        if self.hardware == "pegasus":
            return pegasus_graph(self.hw_size[0])
        raise ConfigError(f"embedding.hardware: unknown family {self.hardware!r}")

    def grid_points(self) -> list[tuple[str, Optional[float], float, float]]:
        pts = []
        for lbl in self.labels:
            for jf in self.j_ferro:
                for sp in self.s_p:
                    for tp in self.t_p:
                        if sp is None and tp > 0:
                            continue
                        pts.append((lbl, sp, tp, jf))
        return pts

    @staticmethod
    def from_toml(path) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        cfg = ExperimentConfig()

        def take(section: str, key: str, cast, target: str):
            if section in raw and key in raw[section]:
                try:
                    setattr(cfg, target, cast(raw[section][key]))
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{section}.{key}: {exc}") from None

        take("instances", "labels", lambda v: [str(x) for x in v] if v != "all" else delta2_labels(), "labels")
        take("instances", "weights", str, "weights")
        take("instances", "delta", int, "delta")
        take("instances", "root", int, "root")
        take("mapping", "preprocess", bool, "preprocess")
        take("mapping", "epsilon", int, "epsilon")
        take("embedding", "hardware", str, "hardware")
        take("embedding", "size", lambda v: tuple(int(x) for x in v), "hw_size")
        take("embedding", "attempts", int, "attempts")
        take("schedule", "t_a", float, "t_a")
        take("schedule", "s_p", lambda v: [None if x in ("none", None) else float(x) for x in v], "s_p")
        take("schedule", "t_p", lambda v: [float(x) for x in v], "t_p")
        take("schedule", "j_ferro", lambda v: [float(x) for x in v], "j_ferro")
        take("sampling", "reads", int, "reads")
        take("sampling", "gauges", int, "gauges")
        take("sampling", "sweeps", int, "sweeps")
        take("sampling", "beta_start", float, "beta_start")
        take("sampling", "beta_end", float, "beta_end")
        take("run", "seed", int, "seed")
        take("run", "out", str, "out_dir")
        cfg.validate()
        return cfg


RESULT_FIELDS = [
    "instance",
    "t_a",
    "s_p",
    "t_p",
    "jf",
    "gauges",
    "reads",
    "p_success",
    "tts",
]


def result_row(r: RunResult) -> dict:
    return {
        "instance": r.instance,
        "t_a": repr(r.t_a),
        "s_p": "" if r.s_p is None else repr(r.s_p),
        "t_p": repr(r.t_p),
        "jf": repr(r.j_ferro),
        "gauges": r.gauges,
        "reads": r.reads,
        "p_success": repr(r.p_success),
        "tts": fmt_extended(r.tts),
    }


def run_sweep(config: ExperimentConfig, client, log=print) -> tuple[str, int]:
    """Execute every grid point through a service client, resumably.

    Completed points recorded in the manifest are skipped; each point's row
    is staged as its own JSON file and the final CSV is assembled in grid
    order, so reruns and resumed runs produce identical bytes. Returns the
    result path and the number of failed grid points.
    """
    config.validate()
    os.makedirs(config.out_dir, exist_ok=True)
    manifest_path = os.path.join(config.out_dir, "manifest.json")
    manifest = {}
    if os.path.exists(manifest_path):
        with open(manifest_path) as fh:
            manifest = json.load(fh)

    points = config.grid_points()
    failures = 0
    for idx, (lbl, sp, tp, jf) in enumerate(points):
        key = f"{lbl}|sp={sp}|tp={tp}|jf={jf}"
        if key in manifest and manifest[key]["status"] == "done":
            continue
        payload = {
            "graph_label": lbl,
            "weight_label": config.weights,
            "delta": config.delta,
            "root": config.root,
            "preprocess": config.preprocess,
            "epsilon": config.epsilon,
            "hardware": config.hardware,
            "hw_size": list(config.hw_size),
            "attempts": config.attempts,
            "t_a": config.t_a,
            "s_p": sp,
            "t_p": tp,
            "j_ferro": jf,
            "reads": config.reads,
            "gauges": config.gauges,
            "sweeps": config.sweeps,
            "beta_start": config.beta_start,
            "beta_end": config.beta_end,
            "seed": config.seed + idx,
        }
        resp = client.post("/experiment", json=payload)
        if resp.status_code != 200:
            log(f"[{idx + 1}/{len(points)}] {key}: FAILED ({resp.status_code}) {resp.text[:200]}")
            manifest[key] = {"status": "error", "detail": resp.text[:500]}
            failures += 1
        else:
            row = resp.json()
            stage = os.path.join(config.out_dir, f"point_{idx:05d}.json")
            _atomic_write(stage, json.dumps(row, sort_keys=True, indent=1))
            manifest[key] = {"status": "done", "file": os.path.basename(stage)}
            log(f"[{idx + 1}/{len(points)}] {key}: p={row['p_success']:.6f} tts={row['tts']}")
        _atomic_write(manifest_path, json.dumps(manifest, sort_keys=True, indent=1))

    out_path = os.path.join(config.out_dir, "results.csv")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RESULT_FIELDS, lineterminator="\n")
    buf.write(f"# bdmst-anneal {__version__} seed={config.seed}\n")
    writer.writeheader()
    for idx, (lbl, sp, tp, jf) in enumerate(points):
        key = f"{lbl}|sp={sp}|tp={tp}|jf={jf}"
        entry = manifest.get(key, {})
        if entry.get("status") != "done":
            continue
        with open(os.path.join(config.out_dir, entry["file"])) as fh:
            row = json.load(fh)
        writer.writerow(
            {
                "instance": row["instance"],
                "t_a": repr(float(row["t_a"])),
                "s_p": "" if row["s_p"] is None else repr(float(row["s_p"])),
                "t_p": repr(float(row["t_p"])),
                "jf": repr(float(row["j_ferro"])),
                "gauges": row["gauges"],
                "reads": row["reads"],
                "p_success": repr(float(row["p_success"])),
                "tts": row["tts"],
            }
        )
    _atomic_write(out_path, buf.getvalue())
    return out_path, failures


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def load_results(path) -> list[dict]:
    rows = []
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    for row in csv.DictReader(lines):
        rows.append(
            {
                "instance": row["instance"],
                "t_a": float(row["t_a"]),
                "s_p": None if row["s_p"] == "" else float(row["s_p"]),
                "t_p": float(row["t_p"]),
                "jf": float(row["jf"]),
                "gauges": int(row["gauges"]),
                "reads": int(row["reads"]),
                "p_success": float(row["p_success"]),
                "tts": parse_extended(row["tts"]),
            }
        )
    return rows


def report(
    rows: Sequence[dict],
    num_bootstrap: int = 100_000,
    seed: int = 0,
    baseline_key: Optional[tuple] = None,
) -> dict:
    """Per-grid-point ensemble summaries plus pause-vs-baseline tables.

    Emits both the difference of ensemble medians and the median of
    instance-wise differences; the two orderings genuinely disagree on
    some ensembles and must never be conflated.
    """
    by_point: dict[tuple, dict[str, float]] = {}
    for r in rows:
        key = (r["s_p"], r["t_p"], r["jf"])
        by_point.setdefault(key, {})[r["instance"]] = r["tts"]

    summaries = []
    for key in sorted(by_point, key=lambda k: (k[0] is not None, k)):
        tts_vals = list(by_point[key].values())
        summ = bootstrap_percentiles(
            tts_vals, num_bootstrap=num_bootstrap, seed=seed, metric="tts"
        )
        summaries.append(
            {
                "s_p": key[0],
                "t_p": key[1],
                "jf": key[2],
                "n": len(tts_vals),
                "median": summ.median,
                "p35": summ.p35,
                "p65": summ.p65,
            }
        )

    comparisons = []
    if baseline_key is None:
        base_candidates = [k for k in by_point if k[0] is None]
        baseline_key = base_candidates[0] if base_candidates else None
    if baseline_key is not None and baseline_key in by_point:
        base = by_point[baseline_key]
        for key in sorted(by_point, key=lambda k: (k[0] is not None, k)):
            if key == baseline_key or key[0] is None:
                continue
            paired = sorted(set(base) & set(by_point[key]))
            if not paired:
                continue
            np_tts = [base[i] for i in paired]
            p_tts = [by_point[key][i] for i in paired]
            comparisons.append(
                {
                    "s_p": key[0],
                    "t_p": key[1],
                    "jf": key[2],
                    "n": len(paired),
                    "difference_of_medians": difference_of_medians(np_tts, p_tts),
                    "median_of_differences": median_of_differences(np_tts, p_tts),
                }
            )
    return {
        "bootstrap": {"B": num_bootstrap, "seed": seed},
        "points": summaries,
        "comparisons": comparisons,
    }


def write_report_csv(rep: dict, out_dir: str) -> list[str]:
    paths = []
    summary = os.path.join(out_dir, "summary.csv")
    buf = io.StringIO()
    buf.write(f"# bootstrap B={rep['bootstrap']['B']} seed={rep['bootstrap']['seed']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s_p", "t_p", "jf", "n", "median", "p35", "p65"])
    for row in rep["points"]:
        w.writerow(
            [
                "" if row["s_p"] is None else repr(row["s_p"]),
                repr(row["t_p"]),
                repr(row["jf"]),
                row["n"],
                fmt_extended(row["median"]),
                fmt_extended(row["p35"]),
                fmt_extended(row["p65"]),
            ]
        )
    _atomic_write(summary, buf.getvalue())
    paths.append(summary)

    cmp_path = os.path.join(out_dir, "improvement.csv")
    buf = io.StringIO()
    buf.write(f"# bootstrap B={rep['bootstrap']['B']} seed={rep['bootstrap']['seed']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s_p", "t_p", "jf", "n", "difference_of_medians", "median_of_differences"])
    for row in rep["comparisons"]:
        w.writerow(
            [
                repr(row["s_p"]),
                repr(row["t_p"]),
                repr(row["jf"]),
                row["n"],
                fmt_extended(row["difference_of_medians"]),
                fmt_extended(row["median_of_differences"]),
            ]
        )
    _atomic_write(cmp_path, buf.getvalue())
    paths.append(cmp_path)
    return paths
