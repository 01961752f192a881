"""Ground-truth network growth.

Node arrivals follow the Nettide growth law ``dn/dt = beta / t**theta * n * (N - n)``;
each arrival places ``m`` ties by preferential attachment. Also provides the
closed-form expected degree under PA and the synthetic-network (SN)
generator used for desk-scale experiments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import exprel, gammaln

from .graph import EvolvingGraph, GraphError


@dataclass(frozen=True)
class GrowthParams:
    beta: float
    theta: float
    capacity: float
    m: int = 1

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.theta < 0:
            raise ValueError("theta must be nonnegative")
        if self.capacity <= 1:
            raise ValueError("capacity must exceed 1")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("m must be a positive integer")


@dataclass(frozen=True)
class GrowthState:
    t: float
    n: float
    realized: int

    @classmethod
    def start(cls, n0: int, t0: float = 1.0) -> "GrowthState":
        return cls(float(t0), float(n0), int(n0))


# -- growth law ----------------------------------------------------------------

def growth_rate(t, n, beta, theta, capacity):
    return beta * np.power(t, -theta) * n * (capacity - n)


def growth_clock(beta, theta, t1, t2):
    """Integral of ``beta * s**-theta`` over [t1, t2] (vectorised).

    Written via ``exprel`` so that theta -> 1 reduces smoothly to the log case.
    """
    beta, theta = np.asarray(beta, float), np.asarray(theta, float)
    lr = np.log(t2 / t1)
    x = (1.0 - theta) * lr
    return beta * lr * np.power(t1, 1.0 - theta) * exprel(x)


def logistic_advance(n1, capacity, clock):
    """Exact solution of the growth law after a transformed-time step."""
    n1 = np.asarray(n1, float)
    decay = np.exp(-capacity * clock)
    return capacity * n1 / (n1 + (capacity - n1) * decay)


def integrate_growth(params: GrowthParams, state: GrowthState, dt: float,
                     method: str = "auto", steps: int = 1024) -> GrowthState:
    """Advance ``n`` by ``dt`` time units.

    ``method`` is ``"rk4"`` (fixed-step classical Runge-Kutta, ``steps`` steps),
    ``"exact"`` (separable closed form, valid for every theta) or ``"auto"``
    (exact when theta == 0, RK4 otherwise). ``realized`` is left untouched;
    the caller decides how many discrete nodes to emit.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if state.t <= 0 and params.theta > 0:
        raise ValueError("growth clock must start at t0 > 0 when theta > 0")
    N = params.capacity
    if params.beta == 0 or state.n >= N or state.n <= 0:
        return replace(state, t=state.t + dt)
    if method == "auto":
        method = "exact" if params.theta == 0 else "rk4"
    t1, t2 = state.t, state.t + dt
    if method == "exact":
        n = float(logistic_advance(state.n, N, growth_clock(params.beta, params.theta, t1, t2)))
    elif method == "rk4":
        n = _rk4(state.n, t1, dt, steps, params.beta, params.theta, N)
    else:
        raise ValueError(f"unknown method {method!r}")
    return replace(state, t=t2, n=min(max(n, state.n), N))


def _rk4(n, t, dt, steps, beta, theta, N):
    h = dt / steps
    for _ in range(steps):
        k1 = growth_rate(t, n, beta, theta, N)
        k2 = growth_rate(t + h / 2, n + h * k1 / 2, beta, theta, N)
        k3 = growth_rate(t + h / 2, n + h * k2 / 2, beta, theta, N)
        k4 = growth_rate(t + h, n + h * k3, beta, theta, N)
        # monotone and bounded by N even when the step is too stiff
        n = min(max(n + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6, n), N)
        t += h
    return n


# -- preferential attachment -----------------------------------------------------

def expected_degree(d_now, total_degree, new_nodes, m: int = 1):
    """Expected PA degree after ``new_nodes`` arrivals of ``m`` ties each.

    Evaluates ``d * prod_{s=1..S} (1 + 1/(D + 2s - 1))`` with ``S = m * new_nodes``
    through log-gamma, which also gives the natural extension to fractional
    ``S``. Broadcasts over array inputs.
    """
    d = np.asarray(d_now, float)
    D = np.asarray(total_degree, float)
    S = m * np.asarray(new_nodes, float)
    return d * np.exp(log_degree_gain(D, S))


def log_degree_gain(total_degree, slots):
    """log of the node-independent PA factor for ``slots`` new ties."""
    D = np.asarray(total_degree, float)
    S = np.asarray(slots, float)
    a, b = 1.0 + D / 2.0, (D + 1.0) / 2.0
    return gammaln(S + a) - gammaln(a) - gammaln(S + b) + gammaln(b)


class StubSampler:
    """Degree-proportional sampling via a list of tie endpoints (stubs)."""

    def __init__(self, degrees: np.ndarray):
        self.stubs = list(np.repeat(np.arange(len(degrees)), degrees))

    def draw(self, rng: np.random.Generator) -> int:
        return self.stubs[int(rng.integers(len(self.stubs)))]

    def add_tie(self, u: int, v: int) -> None:
        self.stubs.append(u)
        self.stubs.append(v)


def attach_targets(sampler: StubSampler, new_node: int, m: int,
                   rng: np.random.Generator, n_existing: int) -> list[int]:
    """Pick ``m`` distinct PA targets for ``new_node``, updating degrees between slots.

    Self picks and repeated targets are redrawn.
    """
    m = min(m, n_existing)
    targets: list[int] = []
    while len(targets) < m:
        v = sampler.draw(rng)
        if v == new_node or v in targets:
            continue
        targets.append(v)
        sampler.add_tie(new_node, v)
    return targets


@dataclass
class GrowthStep:
    state: GrowthState
    new_nodes: list[int]
    new_edges: list[int]


def grow_one_trial(graph: EvolvingGraph, params: GrowthParams, state: GrowthState,
                   trial: int, rng: np.random.Generator, dt: float = 1.0,
                   bidirectional: bool = True, method: str = "auto") -> GrowthStep:
    """Grow ``graph`` over one trial span under Nettide arrivals and PA ties."""
    if graph.tie_count == 0:
        raise GraphError("preferential attachment needs at least one tie")
    graph.advance(trial)
    nxt = integrate_growth(params, state, dt, method=method)
    cap = int(math.floor(params.capacity))
    delta = int(math.floor(nxt.n)) - int(math.floor(state.n))
    delta = max(0, min(delta, cap - state.realized))
    nxt = replace(nxt, realized=state.realized + delta)
    if delta == 0:
        return GrowthStep(nxt, [], [])
    sampler = StubSampler(graph.degrees())
    new_nodes, new_edges = [], []
    for _ in range(delta):
        v = graph.add_node(trial)
        new_nodes.append(v)
        for u in attach_targets(sampler, v, params.m, rng, v):
            new_edges.extend(graph.add_edge(v, u, trial, bidirectional=bidirectional))
    return GrowthStep(nxt, new_nodes, new_edges)


def seed_graph(n0: int, m: int, rng: np.random.Generator,
               bidirectional: bool = True) -> EvolvingGraph:
    """Initial trial-0 graph of ``n0`` nodes grown by PA from a single tie."""
    if n0 < 2:
        raise ValueError("need at least two initial nodes")
    g = EvolvingGraph()
    g.add_node(0)
    g.add_node(0)
    g.add_edge(1, 0, 0, bidirectional=bidirectional)
    sampler = StubSampler(g.degrees())
    for _ in range(n0 - 2):
        v = g.add_node(0)
        for u in attach_targets(sampler, v, m, rng, v):
            g.add_edge(v, u, 0, bidirectional=bidirectional)
    return g


def generate_sn_network(schedule, rng: np.random.Generator, first_trial: int = 0,
                        bidirectional: bool = True,
                        graph: EvolvingGraph | None = None) -> EvolvingGraph:
    """Synthetic network: each arrival adds one tie to an anchor node.

    The anchor is uniform over existing nodes with probability 1/2 and
    degree-proportional otherwise. ``schedule[i]`` nodes join at trial
    ``first_trial + i``. Starts from a two-node seed tie unless ``graph`` is
    given, in which case it is grown in place.
    """
    if graph is None:
        graph = EvolvingGraph()
        graph.add_node(first_trial)
        graph.add_node(first_trial)
        graph.add_edge(1, 0, first_trial, bidirectional=bidirectional)
    sampler = StubSampler(graph.degrees())
    for i, count in enumerate(schedule):
        trial = first_trial + i
        graph.advance(trial)
        for _ in range(int(count)):
            n = graph.node_count
            if rng.random() < 0.5:
                u = int(rng.integers(n))
            else:
                u = sampler.draw(rng)
            v = graph.add_node(trial)
            graph.add_edge(v, u, trial, bidirectional=bidirectional)
            sampler.add_tie(v, u)
    return graph
