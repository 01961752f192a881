"""Command line: generate | run | oracle | bench."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

log = logging.getLogger("evoim")


def cmd_generate(args) -> int:
    from .evolution import GrowthParams, GrowthState, generate_sn_network, grow_one_trial, seed_graph

    rng = np.random.default_rng(args.seed)
    bidir = not args.unidirectional
    if args.model == "sn":
        g = generate_sn_network([args.n0 - 2] + [args.arrivals] * args.trials, rng,
                                bidirectional=bidir)
    else:
        params = GrowthParams(args.beta, args.theta, args.capacity, args.m)
        g = seed_graph(args.n0, args.m, rng, bidirectional=bidir)
        state = GrowthState.start(args.n0)
        for r in range(1, args.trials + 1):
            state = grow_one_trial(g, params, state, r, rng, bidirectional=bidir).state
    out = open(args.output, "w", encoding="utf-8") if args.output != "-" else sys.stdout
    try:
        g.export_csv(out, bidirectional=bidir)
    finally:
        if out is not sys.stdout:
            out.close()
    log.info("generated %d nodes, %d ties over %d trials", g.node_count, g.tie_count, g.max_trial)
    return 0


def cmd_run(args) -> int:
    from .config import ConfigError, load_config
    from .harness import run_experiment

    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
    res = run_experiment(cfg, args.output)
    sys.stdout.write(res.summary)
    return 0


def cmd_oracle(args) -> int:
    from .graph import ingest_temporal_csv
    from .selection import brute_force_opt

    with open(args.graph, encoding="utf-8") as fh:
        rep = ingest_temporal_csv(fh, bidirectional=not args.unidirectional)
    g = rep.graph
    snap = g.snapshot(g.max_trial if args.trial is None else args.trial)
    if args.weights:
        w = np.asarray([float(x) for x in args.weights.split(",")])
    else:
        w = np.full(snap.edge_count, args.weight)
    if len(w) != snap.edge_count:
        print(f"need {snap.edge_count} weights, got {len(w)}", file=sys.stderr)
        return 2
    try:
        seeds, val = brute_force_opt(snap, w, args.K)
    except ValueError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return 2
    names = {v: k for k, v in rep.node_ids.items()}
    print(json.dumps({"seeds": [names.get(s, s) for s in seeds], "value": val}))
    return 0


def run_bench(sizes, K=10, epsilon=0.5, weight=0.1, repeats=3, seed=0, report=None):
    """Best-of-``repeats`` Evo-IMM wall time per SN graph size.

    Returns (rows, slope) with rows ``(nodes, |V|+|E|, seconds, sets)`` and the
    log-log slope of seconds against ``|V|+|E|`` (None for a single size).
    """
    from .evolution import generate_sn_network
    from .selection import IntermediateGraph, SamplerParams, evo_imm

    rng = np.random.default_rng(seed)
    rows = []
    # warm the compiled kernels so the first size is not charged for it
    g = generate_sn_network([100], rng).snapshot(0)
    evo_imm(IntermediateGraph(g, np.ones(g.node_count), np.full(g.edge_count, weight)),
            SamplerParams(2, 0.5), rng)
    for n in sizes:
        snap = generate_sn_network([n - 2], rng).snapshot(0)
        ig = IntermediateGraph(snap, np.ones(snap.node_count), np.full(snap.edge_count, weight))
        best = np.inf
        for _ in range(repeats):
            t = time.perf_counter()
            sel = evo_imm(ig, SamplerParams(K, epsilon), rng)
            best = min(best, time.perf_counter() - t)
        rows.append((n, snap.node_count + snap.edge_count, best, sel.sets))
        if report:
            report(f"nodes={n} size={rows[-1][1]} seconds={best:.4f} sets={sel.sets}")
    slope = None
    if len(rows) >= 2:
        slope = float(np.polyfit(np.log([r[1] for r in rows]), np.log([r[2] for r in rows]), 1)[0])
    return rows, slope


def cmd_bench(args) -> int:
    _, slope = run_bench(args.sizes, args.K, args.epsilon, args.weight, args.repeats,
                         args.seed, report=print)
    if slope is not None:
        print(f"log-log slope: {slope:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evoim", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="emit a synthetic temporal CSV")
    g.add_argument("--model", choices=("nettide", "sn"), default="sn")
    g.add_argument("--n0", type=int, default=1000)
    g.add_argument("--trials", type=int, default=10)
    g.add_argument("--arrivals", type=int, default=100, help="SN arrivals per trial")
    g.add_argument("--beta", type=float, default=5e-8)
    g.add_argument("--theta", type=float, default=0.0)
    g.add_argument("--capacity", type=float, default=1e6)
    g.add_argument("--m", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--unidirectional", action="store_true")
    g.add_argument("-o", "--output", default="-")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run an experiment from a config file")
    r.add_argument("config")
    r.add_argument("-o", "--output", default="results")
    r.add_argument("--seed", type=int, default=None, help="override the master seed")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("oracle", help="brute-force optimal seeds of a tiny graph")
    o.add_argument("graph", help="temporal CSV")
    o.add_argument("--K", type=int, default=1)
    o.add_argument("--trial", type=int, default=None)
    o.add_argument("--weight", type=float, default=0.5, help="uniform edge weight")
    o.add_argument("--weights", default="", help="comma-separated weight per edge id")
    o.add_argument("--unidirectional", action="store_true")
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", help="Evo-IMM wall time over graph sizes")
    b.add_argument("--sizes", type=int, nargs="+", default=[10_000, 30_000, 100_000])
    b.add_argument("--K", type=int, default=10)
    b.add_argument("--epsilon", type=float, default=0.5)
    b.add_argument("--weight", type=float, default=0.1)
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
