"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (shown in the terminal summary) and
then asserts. Run just these with ``pytest -m acceptance -s``.
"""
import math
import time

import numpy as np
import pytest

from evoim.cli import run_bench
from evoim.config import parse_config
from evoim.diffusion import WorldTable
from evoim.evolution import StubSampler, expected_degree
from evoim.harness import run_experiment
from evoim.learning import EdgeBelief, kalman_update
from evoim.selection import IntermediateGraph, SamplerParams, evo_imm
from helpers import ACCEPTANCE, directed

pytestmark = pytest.mark.acceptance


def _report(capsys, n, ok, detail, started):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail} ({time.time() - started:.0f}s)"
    ACCEPTANCE.append(line)
    with capsys.disabled():
        print("\n" + line)


def test_1_approximation_guarantee(oracles, capsys):
    t0 = time.time()
    ok = 0
    for i, inst in enumerate(oracles["approx_instances"]):
        snap = directed(8, [tuple(e) for e in inst["edges"]]).snapshot(0)
        C = np.asarray(inst["C"])
        g = IntermediateGraph(snap, C, np.asarray(inst["probs"]))
        seeds = evo_imm(g, SamplerParams(2, epsilon=0.1), np.random.default_rng(i)).seeds
        ok += WorldTable(snap, g.edge_prob, C).value(seeds) >= (1 - 1 / math.e - 0.1) * inst["opt"]
    passed = ok >= 95
    _report(capsys, 1, passed, f"{ok}/100 instances reach (1-1/e-0.1)*OPT (need >= 95)", t0)
    assert passed


def test_2_estimator_fidelity(oracles, capsys):
    t0 = time.time()
    fx = oracles["six_node"]
    snap = directed(6, [tuple(e) for e in fx["edges"]]).snapshot(0)
    g = IntermediateGraph(snap, np.asarray(fx["C"]), np.asarray(fx["probs"]))
    worst = 0.0
    for K in (1, 2):
        rel = []
        for seed in range(30):
            sel = evo_imm(g, SamplerParams(K, epsilon=0.1), np.random.default_rng(seed))
            exact = fx["values"][",".join(map(str, sorted(sel.seeds)))]
            rel.append((sel.estimate - exact) / exact)
        worst = max(worst, abs(float(np.mean(rel))))
    passed = worst < 0.03
    _report(capsys, 2, passed, f"mean relative estimate error {worst:.4f} over 30 seeds (need < 0.03)", t0)
    assert passed


def test_3_kalman_convergence(capsys):
    t0 = time.time()
    close = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        b = EdgeBelief.fresh(0.05, 0.008, 0, 0)
        for r in range(1, 501):
            b = kalman_update(b, int(rng.random() < 0.3), r, 2.0, 0.008)
        close += abs(b.mean - 0.3) < 0.05
    worst = 0.0
    for k in (1.0, 2.0):
        for sigma0 in (0.008, 0.1, 1.0):
            b = EdgeBelief.fresh(0.05, sigma0, 0, 0)
            for r in range(1, 1001):
                b = kalman_update(b, 1, r, k, sigma0)
                worst = max(worst, b.var * r ** (k / 2) / 3)
    passed = close >= 95 and worst <= 1
    _report(capsys, 3, passed, f"{close}/100 runs within 0.05 of 0.3 (need >= 95); "
            f"max Sigma_r / (3/r^(k/2)) = {worst:.3f} (need <= 1)", t0)
    assert passed


PARTICLE_WORLD = """
R = 10
K = 10
algorithms = EIM
generator = nettide
n0 = 1000
beta = 5e-8
theta = 0
capacity = 1e6
oracle = none
"""


def test_4_particle_learning(capsys):
    t0 = time.time()
    series = {}
    for M in (500, 1000):
        rows = []
        for seed in range(20):
            cfg = parse_config(PARTICLE_WORLD + f"M = {M}\nseed = {seed}\n")
            rows.append([m.rel_error for m in run_experiment(cfg).rows])
        series[M] = np.asarray(rows)
    improved = int(np.sum(series[500][:, -1] < series[500][:, 0]))
    mean500, mean1000 = series[500].mean(), series[1000].mean()
    passed = improved >= 18 and mean1000 <= mean500
    _report(capsys, 4, passed, f"error fell by trial 10 in {improved}/20 seeds (need >= 18); "
            f"mean error M=1000 {mean1000:.4g} vs M=500 {mean500:.4g}", t0)
    assert passed


SN_WORLD = """
R = 10
K = 10
algorithms = EIM, HD, IMM-static
generator = sn
n0 = 20000
sn_arrivals = 500
oracle = none
"""


def test_5_baseline_dominance(capsys):
    t0 = time.time()
    wins = 0
    totals = []
    for seed in range(20):
        res = run_experiment(parse_config(SN_WORLD + f"seed = {seed}\n"))
        tot = {a: sum(m.influenced for m in res.rows if m.algorithm == a)
               for a in ("EIM", "HD", "IMM-static")}
        totals.append(tot)
        wins += tot["EIM"] >= tot["HD"] and tot["EIM"] >= tot["IMM-static"]
    mean = {a: np.mean([t[a] for t in totals]) for a in totals[0]}
    passed = wins >= 16
    _report(capsys, 5, passed, f"EIM >= HD and IMM-static in {wins}/20 seeds (need >= 16); "
            f"mean cumulative influenced " + ", ".join(f"{a} {v:.1f}" for a, v in mean.items()), t0)
    assert passed


TINY_WORLD = """
R = 40
K = 2
algorithms = EIM
generator = nettide
n0 = 4
beta = 0.01
capacity = 9.5
beta_range = 1e-3, 1
theta_range = 1e-4, 1
capacity_range = 5, 50
M = 200
oracle = exact
"""


def test_6_regret_sublinearity(capsys):
    t0 = time.time()
    curves = []
    for seed in range(20):
        res = run_experiment(parse_config(TINY_WORLD + f"seed = {seed}\n"))
        assert res.oracle_kind[2] == "exact"
        curves.append(np.cumsum([m.regret for m in res.rows]))
    B = np.mean(curves, axis=0)
    ratio = B[39] / B[19]
    passed = ratio < 2
    _report(capsys, 6, passed, f"B(40)/B(20) = {B[39]:.3f}/{B[19]:.3f} = {ratio:.3f} (need < 2)", t0)
    assert passed


def test_7_preferential_attachment_and_degree_growth(oracles, capsys):
    t0 = time.time()
    rng = np.random.default_rng(7)
    deg = np.array([1, 2, 3, 4, 10])
    sampler = StubSampler(deg)
    draws = np.bincount([sampler.draw(rng) for _ in range(100_000)], minlength=len(deg))
    freq_err = float(np.max(np.abs(draws / 1e5 - deg / deg.sum())))
    lemma_err = max(abs(expected_degree(c["d"], c["D"], c["new"], c["m"]) - c["mean"]) / c["mean"]
                    for c in oracles["lemma2"])
    passed = freq_err < 0.02 and lemma_err < 0.02 and len(oracles["lemma2"]) == 5
    _report(capsys, 7, passed, f"max attachment frequency error {freq_err:.4f}; "
            f"max degree-growth relative error {lemma_err:.4f} (both need < 0.02)", t0)
    assert passed


def test_8_scaling(capsys):
    t0 = time.time()
    rows, slope = run_bench([10_000, 30_000, 100_000], K=10, epsilon=0.5, repeats=3)
    passed = 0.8 <= slope <= 1.4
    _report(capsys, 8, passed, f"log-log slope {slope:.3f} over |V|+|E| = "
            + ", ".join(str(r[1]) for r in rows) + " (need 0.8..1.4)", t0)
    assert passed


def test_9_determinism(tmp_path, capsys):
    t0 = time.time()
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("R = 10\nK = 5\nn0 = 500\nbeta = 1e-6\ncapacity = 1e5\nM = 200\n"
                   "oracle = proxy\noracle_mc = 50\nseed = 11\n")
    from evoim.cli import main
    for d in ("a", "b"):
        assert main(["run", str(cfg), "-o", str(tmp_path / d)]) == 0
    a = (tmp_path / "a" / "metrics.csv").read_bytes()
    b = (tmp_path / "b" / "metrics.csv").read_bytes()
    passed = a == b
    _report(capsys, 9, passed, f"two runs produce {'identical' if passed else 'different'} "
            f"metrics.csv ({len(a)} bytes)", t0)
    assert passed
