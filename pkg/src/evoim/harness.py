"""The trial loop: learn growth and weights, select seeds, diffuse, score.

A world (graph trajectory, per-trial truth weights and cascade variates) is
generated once per master seed. Every algorithm in the roster then plays the
same world with its own learner state, so their outcomes are coupled.

Trial ``r`` selects seeds from ``G^r = snapshot(r-1)`` and diffuses on
``G^{r+1} = snapshot(r)``.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .diffusion import EdgeTruth, TrialFeedback, WorldTable, exact_influence, run_cascade, step_truth_weights
from .evolution import GrowthParams, GrowthState, generate_sn_network, grow_one_trial, seed_graph
from .graph import EvolvingGraph, ingest_temporal_csv
from .learning import BeliefTable
from .particles import ParticleFilter, PriorRanges
from .selection import (IntermediateGraph, SamplerParams, baseline_select, brute_force_opt,
                        build_intermediate, evo_imm, MAX_BRUTE_COMBINATIONS)

METRICS_HEADER = ["trial", "algorithm", "influenced", "rel_error", "weight_mae", "regret",
                  "ms_evo_ne", "ms_evo_il", "ms_evo_imm"]


# -- world -----------------------------------------------------------------------------

@dataclass
class World:
    graph: EvolvingGraph
    R: int
    weights: dict[int, np.ndarray]
    uniforms: dict[int, np.ndarray]
    eval_seeds: dict[int, int]
    m: int
    notes: list[str] = field(default_factory=list)

    def node_count(self, boundary: int) -> int:
        return self.graph.snapshot(boundary).node_count


def _streams(seed: int) -> dict[str, np.random.SeedSequence]:
    names = ("growth", "truth", "cascade", "selection", "particles", "oracle")
    return dict(zip(names, np.random.SeedSequence(seed).spawn(len(names))))


def build_world(cfg: ExperimentConfig) -> World:
    ss = _streams(cfg.seed)
    g_rng = np.random.default_rng(ss["growth"])
    notes = []
    R = cfg.R
    if cfg.generator == "file":
        with open(cfg.graph_file, encoding="utf-8") as fh:
            rep = ingest_temporal_csv(fh, bidirectional=cfg.bidirectional)
        graph = rep.graph
        if rep.rejected_count:
            notes.append(f"ingest rejected {rep.rejected_count} rows")
        if graph.max_trial < R:
            notes.append(f"file covers {graph.max_trial} trials; R reduced from {R}")
            R = graph.max_trial
        if R < 1:
            raise ValueError("graph file needs at least one trial after trial 0")
    elif cfg.generator == "sn":
        graph = generate_sn_network([cfg.n0 - 2], g_rng, bidirectional=cfg.bidirectional)
        for r in range(1, R + 1):
            generate_sn_network([cfg.sn_arrivals], g_rng, first_trial=r, graph=graph,
                                bidirectional=cfg.bidirectional)
    else:
        params = GrowthParams(cfg.beta, cfg.theta, cfg.capacity, cfg.m)
        graph = seed_graph(cfg.n0, cfg.m, g_rng, bidirectional=cfg.bidirectional)
        state = GrowthState.start(cfg.n0, cfg.t0)
        for r in range(1, R + 1):
            state = grow_one_trial(graph, params, state, r, g_rng,
                                   bidirectional=cfg.bidirectional).state

    t_rng = np.random.default_rng(ss["truth"])
    c_rng = np.random.default_rng(ss["cascade"])
    o_rng = np.random.default_rng(ss["oracle"])
    est = graph.edge_trials()
    truth = EdgeTruth()
    have = graph.snapshot(0).edge_count
    truth = step_truth_weights(truth, 0, cfg.k, cfg.sigma0, t_rng, cfg.w0, new_births=est[:have])
    weights, uniforms, evals = {}, {}, {}
    for r in range(1, R + 1):
        E = graph.snapshot(r).edge_count
        truth = step_truth_weights(truth, r, cfg.k, cfg.sigma0, t_rng, cfg.w0, new_births=est[have:E])
        have = E
        weights[r] = truth.w.copy()
        uniforms[r] = c_rng.random(E)
        evals[r] = int(o_rng.integers(2**63 - 1))
    return World(graph, R, weights, uniforms, evals, cfg.m, notes)


# -- oracle -----------------------------------------------------------------------------

class Oracle:
    """Per-trial best achievable expected influence plus an evaluator for seed sets.

    ``exact``: brute force over V^r with exact world enumeration on G^{r+1}.
    ``proxy``: Evo-IMM with the true weights, values by common-random-number
    Monte-Carlo. ``none``: no regret.
    """

    def __init__(self, world: World, cfg: ExperimentConfig, K: int):
        self.world, self.cfg, self.K = world, cfg, K
        self.kind = cfg.oracle
        if self.kind == "auto":
            self.kind = "exact" if self._exact_ok() else "proxy"
        self._tables: dict[int, WorldTable] = {}
        self.best: dict[int, float] = {}

    def _exact_ok(self) -> bool:
        w = self.world
        last = w.graph.snapshot(w.R)
        pool = w.node_count(w.R - 1)
        return last.edge_count <= 20 and math.comb(pool, min(self.K, pool)) <= MAX_BRUTE_COMBINATIONS

    def _table(self, r):
        if r not in self._tables:
            snap = self.world.graph.snapshot(r)
            self._tables[r] = WorldTable(snap, self.world.weights[r])
        return self._tables[r]

    def _mc(self, r, seeds) -> float:
        snap = self.world.graph.snapshot(r)
        rng = np.random.default_rng(self.world.eval_seeds[r])
        w = self.world.weights[r]
        tot = 0
        for _ in range(self.cfg.oracle_mc):
            tot += run_cascade(snap, seeds, w, rng).influenced_count
        return tot / self.cfg.oracle_mc

    def value(self, r: int, seeds) -> float | None:
        if self.kind == "exact":
            return self._table(r).value(seeds)
        if self.kind == "proxy":
            return self._mc(r, seeds)
        return None

    def optimum(self, r: int) -> float | None:
        if self.kind == "none":
            return None
        if r not in self.best:
            pool = np.arange(self.world.node_count(r - 1))
            snap = self.world.graph.snapshot(r)
            if self.kind == "exact":
                _, val = brute_force_opt(snap, self.world.weights[r], self.K,
                                         candidates=pool, table=self._table(r))
            else:
                rng = np.random.default_rng(self.world.eval_seeds[r] ^ 0x5EED)
                ig = IntermediateGraph(snap, np.ones(snap.node_count), self.world.weights[r])
                # seeds must come from V^r: newcomers weigh in as roots only
                sel = evo_imm(ig, SamplerParams(self.K, self.cfg.epsilon, self.cfg.l), rng,
                              allowed=pool)
                val = self._mc(r, sel.seeds)
            self.best[r] = val
        return self.best[r]


def approximation_ratio(epsilon: float, n: int, l: float) -> float:
    return (1 - 1 / math.e - epsilon) * (1 - 1 / n ** l)


def scaled_regret(oracle_values, achieved_values, beta_ratio) -> list[float | None]:
    """Cumulative scaled regret ``sum_r (OPT_r - achieved_r / beta_r)``.

    ``beta_ratio`` is a scalar or one ratio per trial. Trials whose oracle
    value is ``None`` are skipped; the running sum is reported as ``None``
    there so callers can flag them.
    """
    betas = np.broadcast_to(np.asarray(beta_ratio, dtype=float), (len(oracle_values),))
    if np.any((betas <= 0) | (betas > 1)):
        raise ValueError("approximation ratio must lie in (0, 1]")
    out, total = [], 0.0
    for opt, got, b in zip(oracle_values, achieved_values, betas):
        if opt is None or got is None:
            out.append(None)
            continue
        total += opt - got / b
        out.append(total)
    return out


# -- learners -----------------------------------------------------------------------------

@dataclass
class TrialMetrics:
    trial: int
    algorithm: str
    influenced: int
    rel_error: float | None = None
    weight_mae: float | None = None
    regret: float | None = None
    ms_evo_ne: float = 0.0
    ms_evo_il: float = 0.0
    ms_evo_imm: float = 0.0
    seeds: list[int] = field(default_factory=list)
    expected: float | None = None


class Player:
    """One roster entry with its private learning state."""

    def __init__(self, name: str, cfg: ExperimentConfig, world: World, K: int):
        self.name, self.cfg, self.world, self.K = name, cfg, world, K
        ss = _streams(cfg.seed)
        # EIM and IMM-static draw from identical selection streams
        self.sel_rng = np.random.default_rng(ss["selection"])
        self.learns = name in ("EIM", "IMM-static")
        self.beliefs = BeliefTable(cfg.w0, cfg.sigma0, cfg.k) if self.learns else None
        self.pf = None
        if name == "EIM" and cfg.growth_learning:
            snap0 = world.graph.snapshot(0)
            ranges = PriorRanges(tuple(cfg.beta_range), tuple(cfg.theta_range),
                                 tuple(cfg.capacity_range))
            self.pf = ParticleFilter(cfg.M, snap0.degree, world.m,
                                     np.random.default_rng(ss["particles"]), ranges,
                                     cfg.delta, cfg.t0)
        self.edge_birth = world.graph.edge_trials()

    def play(self, r: int) -> TrialMetrics:
        cfg, g = self.cfg, self.world.graph
        snap = g.snapshot(r - 1)
        nxt = g.snapshot(r)
        met = TrialMetrics(r, self.name, 0)

        t = time.perf_counter()
        deltas = np.zeros(snap.node_count)
        if self.pf is not None:
            self.pf.propagate()
            self.pf.register_nodes(snap.join_trial)
            deltas = self.pf.predict(np.arange(snap.node_count))
            n_true = nxt.node_count
            met.rel_error = abs(self.pf.population_estimate() - n_true) / n_true
        met.ms_evo_ne += (time.perf_counter() - t) * 1e3

        t = time.perf_counter()
        params = SamplerParams(self.K, cfg.epsilon, cfg.l)
        if self.name == "EIM":
            probs = self.beliefs.ucb(snap.edge_count, cfg.c)
            ig = build_intermediate(snap, deltas, probs, cfg.w0, cfg.sigma0, cfg.c)
            seeds = evo_imm(ig, params, self.sel_rng).seeds
        elif self.name == "IMM-static":
            probs = self.beliefs.ucb(snap.edge_count, cfg.c)
            seeds = baseline_select("IMM-static", snap, self.K, probs, params, self.sel_rng)
        else:
            seeds = baseline_select(self.name, snap, self.K)
        met.ms_evo_imm = (time.perf_counter() - t) * 1e3
        met.seeds = sorted(int(s) for s in seeds)

        w = self.world.weights[r]
        fb = run_cascade(nxt, seeds, w, uniforms=self.world.uniforms[r], trial=r)
        met.influenced = fb.influenced_count

        if self.learns:
            t = time.perf_counter()
            self.beliefs.process_feedback(fb, self.edge_birth)
            if len(fb.triggered):
                met.weight_mae = float(np.mean(np.abs(self.beliefs.mean[fb.triggered] - w[fb.triggered])))
            met.ms_evo_il = (time.perf_counter() - t) * 1e3
        if self.pf is not None:
            t = time.perf_counter()
            self.pf.register_nodes(nxt.join_trial)
            self.pf.observe(r, fb.influenced, fb.observed_nodes, fb.observed_degrees)
            met.ms_evo_ne += (time.perf_counter() - t) * 1e3
        return met


def run_trial(player: Player, r: int, oracle: Oracle | None = None) -> TrialMetrics:
    """Play trial ``r`` and, when an oracle is available, score its regret increment."""
    met = player.play(r)
    if oracle is not None and oracle.kind != "none":
        opt = oracle.optimum(r)
        got = oracle.value(r, met.seeds)
        n = player.world.node_count(r - 1)
        beta = approximation_ratio(player.cfg.epsilon, n, player.cfg.l)
        met.expected = got
        met.regret = opt - got / beta
    return met


# -- experiment ----------------------------------------------------------------------------

@dataclass
class ExperimentResult:
    rows: list[TrialMetrics]
    summary: str
    metrics_csv: str
    timings_csv: str
    oracle_kind: dict[int, str]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.10g}"


def run_experiment(cfg: ExperimentConfig, outdir=None, world: World | None = None) -> ExperimentResult:
    cfg.validate()
    world = world or build_world(cfg)
    multi = len(cfg.K) > 1
    rows: list[TrialMetrics] = []
    oracle_kind = {}
    walls = []
    for K in cfg.K:
        oracle = Oracle(world, cfg, K)
        oracle_kind[K] = oracle.kind
        players = [Player(a, cfg, world, K) for a in cfg.algorithms]
        for r in range(1, world.R + 1):
            for p in players:
                t = time.perf_counter()
                met = run_trial(p, r, oracle)
                walls.append((K, r, p.name, (time.perf_counter() - t) * 1e3, met))
                if multi:
                    met.algorithm = f"{p.name}[K={K}]"
                rows.append(met)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    for m in rows:
        timing = ([_fmt(m.ms_evo_ne), _fmt(m.ms_evo_il), _fmt(m.ms_evo_imm)]
                  if cfg.record_timing else ["", "", ""])
        w.writerow([m.trial, m.algorithm, m.influenced, _fmt(m.rel_error),
                    _fmt(m.weight_mae), _fmt(m.regret)] + timing)
    metrics_csv = buf.getvalue()

    tbuf = io.StringIO()
    tw = csv.writer(tbuf, lineterminator="\n")
    tw.writerow(["K", "trial", "algorithm", "ms_total", "ms_evo_ne", "ms_evo_il", "ms_evo_imm"])
    for K, r, name, wall, m in walls:
        tw.writerow([K, r, name, f"{wall:.3f}", f"{m.ms_evo_ne:.3f}", f"{m.ms_evo_il:.3f}",
                     f"{m.ms_evo_imm:.3f}"])
    timings_csv = tbuf.getvalue()

    summary = format_summary(cfg, world, rows, oracle_kind)
    result = ExperimentResult(rows, summary, metrics_csv, timings_csv, oracle_kind)
    if outdir is not None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.csv").write_text(metrics_csv, encoding="utf-8")
        (out / "timings.csv").write_text(timings_csv, encoding="utf-8")
        (out / "summary.txt").write_text(summary, encoding="utf-8")
        if cfg.plot:
            from .plotting import plot_result
            plot_result(result, cfg, out)
    return result


def format_summary(cfg, world, rows, oracle_kind) -> str:
    lines = [f"trials: {world.R}", f"generator: {cfg.generator}",
             f"nodes: {world.node_count(0)} -> {world.node_count(world.R)}", f"seed: {cfg.seed}"]
    lines += [f"note: {n}" for n in world.notes]
    for K in cfg.K:
        lines += ["", f"== K = {K} ==", f"oracle: {oracle_kind[K]}",
                  "algorithm  cumulative_influenced  cumulative_regret"]
        for a in cfg.algorithms:
            sel = [m for m in rows if m.algorithm in (a, f"{a}[K={K}]")]
            total = sum(m.influenced for m in sel)
            reg = (f"{sum(m.regret for m in sel):.6g}" if sel and all(m.regret is not None for m in sel)
                   else "n/a")
            lines.append(f"{a:<10} {total:>21d}  {reg:>17}")
        eim = [m for m in rows if m.algorithm in ("EIM", f"EIM[K={K}]") and m.rel_error is not None]
        if eim:
            lines.append("relative error of learned population: "
                         + " ".join(f"{m.rel_error:.4g}" for m in eim))
    return "\n".join(lines) + "\n"
