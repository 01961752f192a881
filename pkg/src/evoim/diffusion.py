"""Hidden edge-weight random walks and Independent Cascade diffusion.

Truth weights drift by Gaussian steps whose variance decays with edge age.
Each cascade runs on the end-of-trial snapshot with one uniform variate per
edge: an edge fires iff ``u[e] < w[e]``. Sharing the variates between runs
couples them, so a superset of seeds always influences a superset of nodes.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .graph import GraphError, GraphSnapshot

MAX_EXACT_EDGES = 20


def drift_variance(r, birth, k, sigma0):
    """Random-walk step variance ``sigma0 / (r - birth)**k``; zero when ``r <= birth``.

    ``k = inf`` freezes every walk.
    """
    age = np.asarray(r - np.asarray(birth), dtype=float)
    out = np.zeros(np.broadcast(age).shape)
    if math.isinf(k):
        return out
    live = age > 0
    with np.errstate(over="ignore"):
        out[live] = sigma0 / age[live] ** k
    return out


@dataclass
class EdgeTruth:
    """Ground-truth activation probabilities, one slot per directed edge id."""
    w: np.ndarray = field(default_factory=lambda: np.zeros(0))
    birth: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.w)

    def copy(self) -> "EdgeTruth":
        return EdgeTruth(self.w.copy(), self.birth.copy())


def step_truth_weights(truth: EdgeTruth, r: int, k: float, sigma0: float,
                       rng: np.random.Generator, w0: float = 0.05,
                       new_births: np.ndarray | None = None) -> EdgeTruth:
    """Advance existing walks to trial ``r`` and draw weights for new edges.

    ``new_births`` holds the establishment trials of edges appended since the
    last call. Existing weights get ``N(0, sigma0/(r - birth)**k)`` steps, new
    ones start from ``N(w0, sigma0)``; everything is clamped to [0, 1].
    """
    var = drift_variance(r, truth.birth, k, sigma0)
    w = truth.w.copy()
    moving = var > 0
    if moving.any():
        w[moving] += rng.normal(0.0, np.sqrt(var[moving]))
    births = truth.birth
    if new_births is not None and len(new_births):
        fresh = rng.normal(w0, math.sqrt(sigma0), size=len(new_births))
        w = np.concatenate([w, fresh])
        births = np.concatenate([births, np.asarray(new_births, dtype=np.int64)])
    return EdgeTruth(np.clip(w, 0.0, 1.0), births)


@dataclass
class TrialFeedback:
    """What one cascade reveals: influenced nodes, edge flips and observed degrees."""
    trial: int
    influenced: np.ndarray
    triggered: np.ndarray
    outcomes: np.ndarray
    observed_nodes: np.ndarray
    observed_degrees: np.ndarray

    @property
    def edge_outcomes(self) -> dict[int, int]:
        return dict(zip(self.triggered.tolist(), self.outcomes.tolist()))

    @property
    def influenced_count(self) -> int:
        return len(self.influenced)

    @classmethod
    def empty(cls, trial: int) -> "TrialFeedback":
        z = np.zeros(0, dtype=np.int64)
        return cls(trial, z, z, z.astype(np.uint8), z, z)


def run_cascade(snapshot: GraphSnapshot, seeds, w: np.ndarray, rng=None,
                uniforms: np.ndarray | None = None, trial: int | None = None) -> TrialFeedback:
    """Independent Cascade from ``seeds`` over ``snapshot``.

    Every influenced node gets a single chance per outgoing edge; all flips
    are recorded. Pass ``uniforms`` (one per edge) to couple runs, otherwise
    they are drawn from ``rng``.
    """
    n = snapshot.node_count
    seeds = np.unique(np.asarray(list(seeds), dtype=np.int64))
    if len(seeds) and (seeds.min() < 0 or seeds.max() >= n):
        raise GraphError("seed outside snapshot")
    if uniforms is None:
        uniforms = rng.random(snapshot.edge_count)
    w = np.asarray(w)
    if len(w) < snapshot.edge_count or len(uniforms) < snapshot.edge_count:
        raise ValueError("weights/uniforms do not cover every snapshot edge")

    active = np.zeros(n, dtype=bool)
    active[seeds] = True
    queue = deque(seeds.tolist())
    trig, outs = [], []
    ptr, dst_of, eid_of = snapshot.out_ptr, snapshot.out_dst, snapshot.out_eid
    while queue:
        v = queue.popleft()
        for j in range(ptr[v], ptr[v + 1]):
            e = eid_of[j]
            live = uniforms[e] < w[e]
            trig.append(e)
            outs.append(live)
            u = dst_of[j]
            if live and not active[u]:
                active[u] = True
                queue.append(u)

    influenced = np.flatnonzero(active)
    seen = active.copy()
    for v in influenced:
        seen[snapshot.out_dst[snapshot.out_ptr[v]:snapshot.out_ptr[v + 1]]] = True
        seen[snapshot.in_src[snapshot.in_ptr[v]:snapshot.in_ptr[v + 1]]] = True
    observed = np.flatnonzero(seen)
    order = np.argsort(trig, kind="stable")
    return TrialFeedback(
        trial=snapshot.trial if trial is None else trial,
        influenced=influenced,
        triggered=np.asarray(trig, dtype=np.int64)[order],
        outcomes=np.asarray(outs, dtype=np.uint8)[order],
        observed_nodes=observed,
        observed_degrees=snapshot.degree[observed].copy(),
    )


# -- exact expected influence ------------------------------------------------------

@dataclass(frozen=True)
class InfluenceEstimate:
    value: float
    half_width: float = 0.0
    exact: bool = True


class WorldTable:
    """All ``2**|E|`` live-edge worlds of a small snapshot with reach bitmasks.

    Only nodes incident to an edge take part in enumeration; isolated nodes
    can only ever influence themselves.
    """

    def __init__(self, snapshot: GraphSnapshot, w: np.ndarray, node_weight=None):
        E = snapshot.edge_count
        if E > MAX_EXACT_EDGES:
            raise ValueError(f"{E} edges exceed exact-enumeration limit {MAX_EXACT_EDGES}")
        n = snapshot.node_count
        self.node_weight = (np.ones(n) if node_weight is None
                            else np.asarray(node_weight, dtype=float))
        touched = np.unique(np.concatenate([snapshot.src, snapshot.dst]))
        self.local = -np.ones(n, dtype=np.int64)
        self.local[touched] = np.arange(len(touched))
        self.touched = touched
        worlds = np.arange(1 << E, dtype=np.int64)
        prob = np.ones(1 << E)
        for e in range(E):
            bit = (worlds >> e) & 1
            prob *= np.where(bit == 1, w[e], 1.0 - w[e])
        self.prob = prob
        L = len(touched)
        reach = np.empty((1 << E, L), dtype=np.int64)
        for j in range(L):
            reach[:, j] = np.int64(1) << j
        a = self.local[snapshot.src]
        b = self.local[snapshot.dst]
        # Bellman-Ford style closure: whatever b reaches, a reaches via a live a->b
        for _ in range(L):
            changed = False
            for e in range(E):
                live = ((worlds >> e) & 1).astype(bool)
                upd = reach[:, a[e]] | np.where(live, reach[:, b[e]], 0)
                if not changed and np.any(upd != reach[:, a[e]]):
                    changed = True
                reach[:, a[e]] = upd
            if not changed:
                break
        self.reach = reach
        lw = self.node_weight[touched]
        if L <= 20:
            masks = np.arange(1 << L, dtype=np.int64)
            table = np.zeros(1 << L)
            for j in range(L):
                table += lw[j] * ((masks >> j) & 1)
            self._table = table
        else:
            self._table = None
        self._lw = lw

    def _mask_weight(self, masks: np.ndarray) -> np.ndarray:
        if self._table is not None:
            return self._table[masks]
        out = np.zeros(len(masks))
        for j, wj in enumerate(self._lw):
            out += wj * ((masks >> j) & 1)
        return out

    def value(self, seeds) -> float:
        seeds = np.unique(np.asarray(list(seeds), dtype=np.int64))
        loc = self.local[seeds]
        isolated = float(self.node_weight[seeds[loc < 0]].sum())
        loc = loc[loc >= 0]
        if len(loc) == 0:
            return isolated
        mask = np.bitwise_or.reduce(self.reach[:, loc], axis=1)
        return isolated + float(self.prob @ self._mask_weight(mask))


def exact_influence(snapshot: GraphSnapshot, seeds, w: np.ndarray, node_weight=None,
                    mc_samples: int = 0, rng=None) -> InfluenceEstimate:
    """Expected (optionally node-weighted) number of influenced nodes.

    Exact by world enumeration for at most 20 edges. Larger snapshots need
    ``mc_samples > 0``, in which case a Monte-Carlo mean with a 95%
    half-width is returned.
    """
    if snapshot.edge_count <= MAX_EXACT_EDGES:
        return InfluenceEstimate(WorldTable(snapshot, w, node_weight).value(seeds))
    if mc_samples <= 0:
        raise ValueError(
            f"{snapshot.edge_count} edges exceed exact limit; pass mc_samples for Monte-Carlo")
    rng = rng if rng is not None else np.random.default_rng()
    nw = np.ones(snapshot.node_count) if node_weight is None else np.asarray(node_weight)
    vals = np.empty(mc_samples)
    for i in range(mc_samples):
        fb = run_cascade(snapshot, seeds, w, rng)
        vals[i] = nw[fb.influenced].sum()
    hw = 1.96 * vals.std(ddof=1) / math.sqrt(mc_samples) if mc_samples > 1 else math.inf
    return InfluenceEstimate(float(vals.mean()), float(hw), exact=False)
