"""Command line front end.

Thin client over the service API: every computation goes through the HTTP
surface (in-process by default, remote with --url); the CLI itself only
handles files, sweeps and exit codes.

Subcommands: instances export | map | embed | run | spectrum | report | serve.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .client import make_client
from .experiments import ExperimentConfig, load_results, report, run_sweep, write_report_csv


def _cmd_instances(args) -> int:
    client = make_client(args.url)
    if args.action == "export":
        os.makedirs(args.out, exist_ok=True)
        catalog = client.get("/catalog").json()
        for g in catalog["graphs"]:
            m = len(g["edges"])
            obj = {
                "label": g["label"],
                "n": g["n"],
                "edges": g["edges"],
                "weight_lists": {
                    k: v[:m] for k, v in catalog["weight_lists"].items() if len(v) >= m
                },
            }
            path = os.path.join(args.out, f"{g['label']}.json")
            with open(path, "w") as fh:
                json.dump(obj, fh, indent=1, sort_keys=True)
        print(f"wrote {len(catalog['graphs'])} graphs to {args.out}")
        return 0
    raise SystemExit(f"unknown instances action {args.action!r}")


def _load_instance_arg(client, args) -> dict:
    if args.instance:
        with open(args.instance) as fh:
            return json.load(fh)
    resp = client.post(
        "/instances/build",
        json={
            "graph_label": args.graph,
            "weight_label": args.weights,
            "delta": args.delta,
            "root": args.root,
        },
    )
    if resp.status_code != 200:
        raise SystemExit(f"instance build failed: {resp.text}")
    return resp.json()


def _cmd_map(args) -> int:
    client = make_client(args.url)
    inst = _load_instance_arg(client, args)
    resp = client.post(
        "/compile",
        json={"instance": inst, "preprocess": not args.no_preprocess, "epsilon": args.epsilon},
    )
    if resp.status_code != 200:
        print(f"compile failed: {resp.text}", file=sys.stderr)
        return 1
    out = resp.json()
    with open(args.out, "w") as fh:
        fh.write(out["coo"])
    sidecar = os.path.splitext(args.out)[0] + ".registry.json"
    with open(sidecar, "w") as fh:
        json.dump(
            {
                "num_vars": out["num_vars"],
                "counts": out["counts"],
                "penalty_weight": out["penalty_weight"],
                "variables": out["variables"],
            },
            fh,
            indent=1,
            sort_keys=True,
        )
    print(f"{out['num_vars']} variables ({out['counts']}); wrote {args.out} and {sidecar}")
    return 0


def _cmd_embed(args) -> int:
    client = make_client(args.url)
    inst = _load_instance_arg(client, args)
    resp = client.post(
        "/embed",
        json={
            "instance": inst,
            "hardware": args.hardware,
            "hw_size": [int(x) for x in args.size.split(",")],
            "attempts": args.attempts,
            "seed": args.seed,
        },
    )
    if resp.status_code != 200:
        print(f"embedding failed: {resp.text}", file=sys.stderr)
        return 1
    out = resp.json()
    with open(args.out, "w") as fh:
        json.dump(
            {
                "hardware": {"family": out["hardware"], "size": out["hw_size"]},
                "chains": out["chains"],
            },
            fh,
            indent=1,
            sort_keys=True,
        )
    print(
        f"{out['num_logical']} logical -> {out['physical_count']} physical qubits "
        f"(median chain {out['median_chain_size']}, max {out['max_chain_size']}); wrote {args.out}"
    )
    return 0


def _cmd_run(args) -> int:
    config = ExperimentConfig.from_toml(args.config)
    if args.out:
        config.out_dir = args.out
    if args.reads is not None:
        config.reads = args.reads
    if args.gauges is not None:
        config.gauges = args.gauges
    if args.seed is not None:
        config.seed = args.seed
    if args.jf is not None:
        config.j_ferro = [float(x) for x in args.jf.split(",")]
    config.validate()
    client = make_client(args.url)
    path, failures = run_sweep(config, client)
    print(f"results: {path}")
    if failures:
        print(f"{failures} grid points failed", file=sys.stderr)
        return 1
    return 0


def _cmd_spectrum(args) -> int:
    client = make_client(args.url)
    os.makedirs(args.out, exist_ok=True)
    if args.action == "gap-trace":
        jfs = [float(x) for x in args.jf.split(",")]
        resp = client.post(
            "/spectrum/gap-trace",
            json={"j_ferro": jfs, "grid_points": args.grid, "k": args.k},
        )
        if resp.status_code != 200:
            print(f"gap trace failed: {resp.text}", file=sys.stderr)
            return 1
        for trace in resp.json():
            path = os.path.join(args.out, f"gap_trace_jf{trace['j_ferro']:g}.csv")
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                k = len(trace["points"][0]["energies"])
                w.writerow(["s"] + [f"E{i}" for i in range(k)] + ["gap", "PL0", "PL1", "j_ferro"])
                for pt in trace["points"]:
                    w.writerow(
                        [pt["s"]]
                        + pt["energies"]
                        + [pt["gap"], pt["p_logical"][0], pt["p_logical"][1], trace["j_ferro"]]
                    )
            print(
                f"jf={trace['j_ferro']:g}: min gap {trace['gap_min']:.5f} at s*={trace['s_star']:.3f} -> {path}"
            )
        return 0
    if args.action == "pause":
        resp = client.post(
            "/spectrum/pause",
            json={
                "j_ferro": args.jf_single,
                "s_p": args.sp,
                "t_p": args.tp,
                "temperature": args.temp,
                "gamma0": args.gamma0,
            },
        )
        if resp.status_code != 200:
            print(f"pause simulation failed: {resp.text}", file=sys.stderr)
            return 1
        out = resp.json()
        path = os.path.join(args.out, "pause_trajectory.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "p_ground"])
            for s, p in zip(out["s_path"], out["ground_population"]):
                w.writerow([s, p])
        print(f"final ground population {out['p_ground_final']:.4f} -> {path}")
        return 0
    raise SystemExit(f"unknown spectrum action {args.action!r}")


def _cmd_report(args) -> int:
    rows = load_results(args.results)
    rep = report(rows, num_bootstrap=args.bootstrap, seed=args.seed)
    paths = write_report_csv(rep, os.path.dirname(args.results) or ".")
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="bdmst", description=__doc__)
    ap.add_argument("--url", default=None, help="remote service URL (default: in-process)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("instances", help="catalog access")
    p.add_argument("action", choices=["export"])
    p.add_argument("--out", default="catalog")
    p.set_defaults(func=_cmd_instances)

    def add_instance_args(p):
        p.add_argument("--instance", help="instance JSON file")
        p.add_argument("--graph", help="catalog graph label")
        p.add_argument("--weights", default="w2", help="catalog weight list label")
        p.add_argument("--delta", type=int, default=2)
        p.add_argument("--root", type=int, default=None)

    p = sub.add_parser("map", help="compile an instance to QUBO coordinate format")
    add_instance_args(p)
    p.add_argument("--no-preprocess", action="store_true")
    p.add_argument("--epsilon", type=int, default=0)
    p.add_argument("--out", default="problem.coo")
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("embed", help="find a minor embedding for an instance")
    add_instance_args(p)
    p.add_argument("--hardware", default="chimera", choices=["chimera", "pegasus"])
    p.add_argument("--size", default="12,12,4")
    p.add_argument("--attempts", type=int, default=4)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="embedding.json")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("run", help="sweep experiment grid from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override output directory")
    p.add_argument("--reads", type=int, default=None, help="override reads per gauge")
    p.add_argument("--gauges", type=int, default=None, help="override gauge count")
    p.add_argument("--seed", type=int, default=None, help="override master seed")
    p.add_argument("--jf", default=None, help="override chain strength grid, comma list")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("spectrum", help="small-system spectrum tools")
    p.add_argument("action", choices=["gap-trace", "pause"])
    p.add_argument("--jf", default="2,4,8", help="comma list of chain strengths (gap-trace)")
    p.add_argument("--jf-single", type=float, default=2.0, help="chain strength (pause)")
    p.add_argument("--grid", type=int, default=97)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--sp", type=float, default=None)
    p.add_argument("--tp", type=float, default=0.0)
    p.add_argument("--temp", type=float, default=0.2985)
    p.add_argument("--gamma0", type=float, default=30.0)
    p.add_argument("--out", default="spectrum")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("report", help="summarize a results CSV")
    p.add_argument("--results", required=True)
    p.add_argument("--bootstrap", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    args = ap.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
