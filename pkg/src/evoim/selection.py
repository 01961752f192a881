"""Seed selection on the intermediate evolving graph (Evo-IMM) and baselines.

Nodes carry weights ``C = E(delta d) * (w0 + c*sqrt(sigma0)) + 1`` that credit
their expected future neighbours. Weighted reverse-reachable (ERR) sets are
sampled with roots drawn by weight without replacement, the IMM two-phase
rule fixes how many, and greedy max-coverage picks the seeds.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .diffusion import WorldTable
from .graph import GraphSnapshot


@dataclass
class IntermediateGraph:
    snapshot: GraphSnapshot
    node_weight: np.ndarray
    edge_prob: np.ndarray

    @property
    def n_prime(self) -> float:
        return float(self.node_weight.sum())

    @property
    def node_count(self) -> int:
        return self.snapshot.node_count


def node_weights(predicted_deltas, w0: float, sigma0: float, c: float) -> np.ndarray:
    d = np.asarray(predicted_deltas, dtype=float)
    if np.any(d < 0):
        raise ValueError("predicted degree increments must be nonnegative")
    return d * (w0 + c * math.sqrt(sigma0)) + 1.0


def build_intermediate(snapshot: GraphSnapshot, predicted_deltas, edge_prob,
                       w0: float = 0.05, sigma0: float = 0.008, c: float = 1.0
                       ) -> IntermediateGraph:
    """``edge_prob`` is one UCB value per snapshot edge (see ``BeliefTable.ucb``)."""
    edge_prob = np.asarray(edge_prob, dtype=float)[: snapshot.edge_count]
    if len(edge_prob) != snapshot.edge_count:
        raise ValueError("need one probability per snapshot edge")
    C = node_weights(predicted_deltas, w0, sigma0, c)
    if len(C) != snapshot.node_count:
        raise ValueError("need one predicted increment per snapshot node")
    return IntermediateGraph(snapshot, C, edge_prob)


@dataclass(frozen=True)
class SamplerParams:
    K: int
    epsilon: float = 0.1
    l: float = 1.0

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.K < 1:
            raise ValueError("K must be positive")
        if self.l < 1:
            raise ValueError("l must be at least 1")

    def l_prime(self, n: int) -> float:
        return self.l * (1 + math.log(2) / math.log(n))


@dataclass(frozen=True)
class ERRSet:
    root: int
    members: frozenset
    root_weight: float


class ERRCollection:
    """Flat storage of ERR-sets: set ``i`` is ``members[offsets[i]:offsets[i+1]]``."""

    def __init__(self, n: int):
        self.n = n
        self._members: list[np.ndarray] = []
        self._sizes: list[np.ndarray] = []
        self._weights: list[np.ndarray] = []
        self._flat = None
        self.theta_prime = 0.0
        self.count = 0
        self.lower_bound = 1.0
        self.target = 0.0

    def extend(self, members, offsets, weights) -> None:
        self._members.append(members)
        self._sizes.append(np.diff(offsets))
        self._weights.append(np.asarray(weights, dtype=float))
        self.theta_prime += float(np.sum(weights))
        self.count += len(weights)
        self._flat = None

    def arrays(self):
        if self._flat is None:
            if self._members:
                members = np.concatenate(self._members)
                sizes = np.concatenate(self._sizes)
                weights = np.concatenate(self._weights)
                self._members, self._sizes, self._weights = [members], [sizes], [weights]
            else:
                members = np.zeros(0, np.int32)
                sizes = np.zeros(0, np.int64)
                weights = np.zeros(0)
            offsets = np.zeros(len(sizes) + 1, dtype=np.int64)
            np.cumsum(sizes, out=offsets[1:])
            self._flat = (members, offsets, weights)
        return self._flat

    def __len__(self) -> int:
        return self.count

    def __getitem__(self, i: int) -> ERRSet:
        members, offsets, weights = self.arrays()
        m = members[offsets[i]:offsets[i + 1]]
        return ERRSet(int(m[0]), frozenset(m.tolist()), float(weights[i]))

    def coverage(self, seeds) -> float:
        """F_R(S): total weight of sets hit by ``seeds``."""
        members, offsets, weights = self.arrays()
        mask = np.zeros(self.n, dtype=np.bool_)
        mask[np.asarray(list(seeds), dtype=np.int64)] = True
        return float(_kernels.covered_weight(members, offsets, weights, mask))


# -- roots ----------------------------------------------------------------------------

def priority_sample_root(graph: IntermediateGraph, excluded: set, rng: np.random.Generator) -> int:
    """One root drawn from the non-excluded nodes with probability proportional to C.

    When every node is excluded the exclusion set is cleared (a new pass).
    """
    n = graph.node_count
    if len(excluded) >= n:
        excluded.clear()
    cand = np.setdiff1d(np.arange(n), np.fromiter(excluded, dtype=np.int64, count=len(excluded)))
    cum = np.cumsum(graph.node_weight[cand])
    j = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return int(cand[min(j, len(cand) - 1)])


class RootStream:
    """Successive weighted random permutations of the nodes.

    Each pass orders nodes by exponential keys ``Exp(1)/C``, which is the same
    law as drawing one node at a time proportional to C without replacement.
    """

    def __init__(self, weights: np.ndarray, rng: np.random.Generator):
        self.w = np.asarray(weights, dtype=float)
        self.rng = rng
        self._order = np.zeros(0, dtype=np.int64)
        self._pos = 0

    def _refill(self):
        keys = self.rng.exponential(size=len(self.w)) / self.w
        self._order = np.argsort(keys, kind="stable")
        self._pos = 0

    def take(self, k: int) -> np.ndarray:
        out = []
        while k > 0:
            if self._pos >= len(self._order):
                self._refill()
            chunk = self._order[self._pos:self._pos + k]
            self._pos += len(chunk)
            k -= len(chunk)
            out.append(chunk)
        return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)

    def take_weight(self, target: float) -> np.ndarray:
        """Fewest further roots whose weights sum to at least ``target``."""
        out = []
        while target > 0:
            if self._pos >= len(self._order):
                self._refill()
            rest = self._order[self._pos:]
            cum = np.cumsum(self.w[rest])
            j = int(np.searchsorted(cum, target, side="left"))
            if j < len(rest):
                out.append(rest[:j + 1])
                self._pos += j + 1
                break
            out.append(rest)
            self._pos = len(self._order)
            target -= cum[-1]
        return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


# -- ERR-sets ---------------------------------------------------------------------------

def generate_err_set(graph: IntermediateGraph, root: int, rng: np.random.Generator) -> ERRSet:
    """Reference (pure Python) reverse BFS from ``root``."""
    snap = graph.snapshot
    seen = {int(root)}
    frontier = [int(root)]
    while frontier:
        v = frontier.pop()
        src, eids = snap.in_edges(v)
        for u, e in zip(src.tolist(), eids.tolist()):
            if u not in seen and rng.random() < graph.edge_prob[e]:
                seen.add(u)
                frontier.append(u)
    return ERRSet(int(root), frozenset(seen), float(graph.node_weight[root]))


def _append_sets(coll: ERRCollection, graph: IntermediateGraph, roots, rng) -> None:
    if len(roots) == 0:
        return
    snap = graph.snapshot
    seed = int(rng.integers(2**31 - 1))
    members, offsets = _kernels.sample_rr_batch(snap.in_ptr, snap.in_src, snap.in_eid,
                                                graph.edge_prob, roots.astype(np.int64), seed)
    coll.extend(members, offsets, graph.node_weight[roots])


def log_binom(n: int, k: int) -> float:
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def sampling_targets(n: int, n_prime: float, p: SamplerParams, LB: float):
    """Phase-2 weight target theta and the (alpha, beta) terms behind it."""
    K = min(p.K, n)
    lp = p.l_prime(n)
    a = math.sqrt(lp * math.log(n) + math.log(2))
    b = math.sqrt((1 - 1 / math.e) * (log_binom(n, K) + lp * math.log(n) + math.log(2)))
    theta = 2 * n_prime * ((1 - 1 / math.e) * a + b) ** 2 / (LB * p.epsilon ** 2)
    return theta, a, b


def sample_err_sets(graph: IntermediateGraph, params: SamplerParams,
                    rng: np.random.Generator, allowed=None) -> ERRCollection:
    """Two-phase ERR-set sampling.

    Phase 1 halves a guess ``x`` of the optimum, sampling up to a set count
    ``theta_i`` and stopping once the greedy estimate clears ``(1+eps')x``; this
    fixes the lower bound LB. Phase 2 tops the collection up until the total
    root weight reaches ``theta``.
    """
    n = graph.node_count
    coll = ERRCollection(n)
    stream = RootStream(graph.node_weight, rng)
    if n < 2:
        _append_sets(coll, graph, stream.take(1), rng)
        return coll
    K = min(params.K, n)
    npr = graph.n_prime
    eps1 = math.sqrt(2) * params.epsilon
    logn = math.log(n)
    lam = ((2 + 2 * eps1 / 3) * (log_binom(n, K) + params.l * logn + math.log(math.log2(n)))
           * npr / eps1 ** 2)
    LB = 1.0
    for i in range(1, int(math.log2(npr))):
        x = npr / 2 ** i
        theta_i = lam / x
        if coll.count < theta_i:
            _append_sets(coll, graph, stream.take(int(math.ceil(theta_i)) - coll.count), rng)
        _, F = greedy_cover(coll, K, graph.node_weight, allowed)
        est = npr * F / coll.theta_prime
        if est >= (1 + eps1) * x:
            LB = est / (1 + eps1)
            break
    theta, _, _ = sampling_targets(n, npr, params, LB)
    if coll.theta_prime < theta:
        _append_sets(coll, graph, stream.take_weight(theta - coll.theta_prime), rng)
    coll.lower_bound = LB
    coll.target = theta
    return coll


def _mask(n, allowed):
    if allowed is None:
        return np.ones(n, dtype=np.bool_)
    mask = np.zeros(n, dtype=np.bool_)
    mask[np.asarray(allowed, dtype=np.int64)] = True
    return mask


def greedy_cover(coll: ERRCollection, K: int, pad_weight=None, allowed=None):
    members, offsets, weights = coll.arrays()
    pad = np.zeros(coll.n) if pad_weight is None else np.asarray(pad_weight, dtype=float)
    mask = _mask(coll.n, allowed)
    return _kernels.greedy_cover(members, offsets, weights, coll.n, min(K, coll.n), pad, mask)


def greedy_node_selection(coll: ERRCollection, K: int, pad_weight=None, allowed=None) -> list[int]:
    """K seeds maximising covered ERR-set weight (ties: lowest id).

    When K exceeds the nodes that add coverage, the rest are the highest
    ``pad_weight`` nodes. ``allowed`` restricts the candidate pool.
    """
    return [int(v) for v in greedy_cover(coll, K, pad_weight, allowed)[0]]


def estimate_influence(coll: ERRCollection, seeds, n_prime: float,
                       theta_prime: float | None = None) -> float:
    """(n'/theta') * F_R(S)."""
    if coll.count == 0:
        raise ValueError("empty ERR-set collection")
    tp = coll.theta_prime if theta_prime is None else theta_prime
    return n_prime / tp * coll.coverage(seeds)


@dataclass
class Selection:
    seeds: list[int]
    estimate: float
    sets: int


def evo_imm(graph: IntermediateGraph, params: SamplerParams, rng: np.random.Generator,
            allowed=None) -> Selection:
    coll = sample_err_sets(graph, params, rng, allowed)
    seeds = greedy_node_selection(coll, params.K, graph.node_weight, allowed)
    return Selection(seeds, estimate_influence(coll, seeds, graph.n_prime), coll.count)


# -- baselines and oracle -------------------------------------------------------------

BASELINES = ("IMM-static", "HD", "Earliest")


def baseline_select(kind: str, snapshot: GraphSnapshot, K: int, edge_prob=None,
                    params: SamplerParams | None = None, rng=None) -> list[int]:
    K = min(K, snapshot.node_count)
    if kind == "HD":
        order = np.lexsort((np.arange(snapshot.node_count), -snapshot.degree))
        return sorted(int(v) for v in order[:K])
    if kind == "Earliest":
        return list(range(K))
    if kind == "IMM-static":
        g = IntermediateGraph(snapshot, np.ones(snapshot.node_count), np.asarray(edge_prob, float))
        return evo_imm(g, params or SamplerParams(K), rng).seeds
    raise ValueError(f"unknown baseline {kind!r}")


MAX_BRUTE_COMBINATIONS = 100_000


def brute_force_opt(snapshot: GraphSnapshot, w, K: int, node_weight=None,
                    candidates=None, table: WorldTable | None = None):
    """Exhaustive best K-set under exact expected (weighted) influence.

    Returns (seeds, value). ``candidates`` restricts the seed pool (default:
    every node). Ties keep the lexicographically first set.
    """
    cand = np.arange(snapshot.node_count) if candidates is None else np.asarray(candidates)
    K = min(K, len(cand))
    if math.comb(len(cand), K) > MAX_BRUTE_COMBINATIONS:
        raise ValueError("too many seed combinations for brute force")
    table = table or WorldTable(snapshot, np.asarray(w, float), node_weight)
    best, best_val = None, -math.inf
    for combo in itertools.combinations(cand.tolist(), K):
        val = table.value(combo)
        if val > best_val + 1e-12:
            best, best_val = list(combo), val
    return best, best_val
