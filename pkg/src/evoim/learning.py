"""Per-edge Gaussian beliefs refined by scalar Kalman steps, with UCB estimates.

Each triggered edge contributes one Bernoulli outcome per trial, treated as a
noisy observation of its weight with the maximal Bernoulli noise variance 1.
Edges not triggered only accumulate drift variance.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import TextIO

import numpy as np

from .diffusion import TrialFeedback, drift_variance

OBS_NOISE = 1.0


@dataclass(frozen=True)
class EdgeBelief:
    mean: float
    var: float
    birth_trial: int
    last_update_trial: int

    @classmethod
    def fresh(cls, w0: float, sigma0: float, birth_trial: int, trial: int) -> "EdgeBelief":
        return cls(w0, sigma0, birth_trial, trial)


def _delta(r, birth, k, sigma0) -> float:
    return float(drift_variance(r, birth, k, sigma0))


def kalman_update(b: EdgeBelief, z: int, r: int, k: float, sigma0: float) -> EdgeBelief:
    q = b.var + OBS_NOISE
    gain = b.var / q
    mean = b.mean + gain * (z - b.mean)
    var = b.var + _delta(r, b.birth_trial, k, sigma0) - gain * b.var
    return replace(b, mean=mean, var=var, last_update_trial=r)


def idle_update(b: EdgeBelief, r: int, k: float, sigma0: float) -> EdgeBelief:
    return replace(b, var=b.var + _delta(r, b.birth_trial, k, sigma0), last_update_trial=r)


def ucb_estimate(b: EdgeBelief, c: float) -> float:
    return min(max(b.mean + c * math.sqrt(b.var), 0.0), 1.0)


class BeliefTable:
    """Vectorised belief store indexed by directed edge id.

    Edges become *known* the first time they are triggered; until then the
    planner uses the prior UCB value ``w0 + c*sqrt(sigma0)``.
    """

    def __init__(self, w0: float = 0.05, sigma0: float = 0.008, k: float = 2.0):
        self.w0, self.sigma0, self.k = w0, sigma0, k
        self.mean = np.zeros(0)
        self.var = np.zeros(0)
        self.birth = np.zeros(0, dtype=np.int64)
        self.last = np.zeros(0, dtype=np.int64)
        self.known = np.zeros(0, dtype=bool)

    def __len__(self) -> int:
        return len(self.mean)

    def grow(self, edge_count: int) -> None:
        extra = edge_count - len(self.mean)
        if extra <= 0:
            return
        self.mean = np.concatenate([self.mean, np.full(extra, self.w0)])
        self.var = np.concatenate([self.var, np.full(extra, self.sigma0)])
        self.birth = np.concatenate([self.birth, np.zeros(extra, dtype=np.int64)])
        self.last = np.concatenate([self.last, np.zeros(extra, dtype=np.int64)])
        self.known = np.concatenate([self.known, np.zeros(extra, dtype=bool)])

    def belief(self, e: int) -> EdgeBelief:
        return EdgeBelief(float(self.mean[e]), float(self.var[e]),
                          int(self.birth[e]), int(self.last[e]))

    def process_feedback(self, fb: TrialFeedback, edge_birth: np.ndarray) -> None:
        """Kalman step on triggered edges, idle step on every other known edge.

        ``edge_birth`` gives establishment trials; it is consulted only when
        an edge is seen for the first time.
        """
        r = fb.trial
        if len(fb.triggered):
            self.grow(int(fb.triggered.max()) + 1)
        trig = fb.triggered
        new = trig[~self.known[trig]]
        if len(new):
            self.known[new] = True
            self.mean[new] = self.w0
            self.var[new] = self.sigma0
            self.birth[new] = np.asarray(edge_birth)[new]
        idle = self.known.copy()
        idle[trig] = False
        idle_ids = np.flatnonzero(idle)
        self.var[idle_ids] += drift_variance(r, self.birth[idle_ids], self.k, self.sigma0)
        self.last[idle_ids] = r

        prev = self.var[trig]
        gain = prev / (prev + OBS_NOISE)
        z = fb.outcomes.astype(float)
        self.mean[trig] += gain * (z - self.mean[trig])
        self.var[trig] = prev + drift_variance(r, self.birth[trig], self.k, self.sigma0) - gain * prev
        self.last[trig] = r

    def ucb(self, edge_count: int, c: float) -> np.ndarray:
        """Planning probabilities for edges ``0..edge_count-1``."""
        out = np.full(edge_count, self.w0 + c * math.sqrt(self.sigma0))
        m = min(edge_count, len(self.mean))
        kn = self.known[:m]
        out[:m][kn] = self.mean[:m][kn] + c * np.sqrt(self.var[:m][kn])
        return np.clip(out, 0.0, 1.0)

    def export_csv(self, stream: TextIO) -> None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["edge", "mean", "var", "birth_trial", "last_update_trial"])
        for e in np.flatnonzero(self.known):
            w.writerow([int(e), repr(float(self.mean[e])), repr(float(self.var[e])),
                        int(self.birth[e]), int(self.last[e])])


def process_feedback(beliefs: dict[int, EdgeBelief], fb: TrialFeedback, r: int,
                     k: float, sigma0: float, w0: float = 0.05,
                     edge_birth=None) -> dict[int, EdgeBelief]:
    """Dictionary form of :meth:`BeliefTable.process_feedback` for small tables."""
    out = {}
    outcomes = fb.edge_outcomes
    for e, z in outcomes.items():
        b = beliefs.get(e)
        if b is None:
            birth = int(edge_birth[e]) if edge_birth is not None else r
            b = EdgeBelief.fresh(w0, sigma0, birth, r)
        out[e] = kalman_update(b, z, r, k, sigma0)
    for e, b in beliefs.items():
        if e not in outcomes:
            out[e] = idle_update(b, r, k, sigma0)
    return out
