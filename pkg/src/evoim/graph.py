"""Temporal directed graph storage, trial snapshots and temporal-CSV I/O.

Nodes and edges only ever arrive, in nondecreasing trial order. Every call to
:meth:`EvolvingGraph.add_edge` creates one *social tie*; a bidirectional tie
is stored as two directed edge records. Node degree counts ties, so the
degree used for preferential attachment ignores direction.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Iterable, TextIO

import numpy as np


class GraphError(ValueError):
    """Raised for operations that would break the graph invariants."""


@dataclass(frozen=True)
class NodeRecord:
    id: int
    join_trial: int
    degree: int


@dataclass(frozen=True)
class EdgeRecord:
    id: int
    src: int
    dst: int
    establish_trial: int


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _csr(keys: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (indptr, order) grouping positions of ``keys`` by value."""
    order = np.argsort(keys, kind="stable")
    counts = np.bincount(keys, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, order


class GraphSnapshot:
    """Read-only view of the graph as of the end of one trial.

    Holds CSR in/out adjacency over the directed edges, plus the tie degree
    of every node. Instances are immutable and safe to share between workers.
    """

    def __init__(self, trial: int, join_trial: np.ndarray, src: np.ndarray,
                 dst: np.ndarray, tie_u: np.ndarray, tie_v: np.ndarray):
        self.trial = int(trial)
        self.node_count = int(len(join_trial))
        self.edge_count = int(len(src))
        self.tie_count = int(len(tie_u))
        n = self.node_count
        self.join_trial = _frozen(np.asarray(join_trial, dtype=np.int64))
        self.src = _frozen(np.asarray(src, dtype=np.int64))
        self.dst = _frozen(np.asarray(dst, dtype=np.int64))
        deg = np.bincount(tie_u, minlength=n) + np.bincount(tie_v, minlength=n)
        self.degree = _frozen(deg.astype(np.int64))

        ptr, order = _csr(self.dst, n)
        self.in_ptr = _frozen(ptr)
        self.in_eid = _frozen(order.astype(np.int64))
        self.in_src = _frozen(self.src[order])
        ptr, order = _csr(self.src, n)
        self.out_ptr = _frozen(ptr)
        self.out_eid = _frozen(order.astype(np.int64))
        self.out_dst = _frozen(self.dst[order])

    def in_edges(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """(source nodes, edge ids) of edges pointing into ``v``."""
        lo, hi = self.in_ptr[v], self.in_ptr[v + 1]
        return self.in_src[lo:hi], self.in_eid[lo:hi]

    def out_edges(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """(target nodes, edge ids) of edges leaving ``v``."""
        lo, hi = self.out_ptr[v], self.out_ptr[v + 1]
        return self.out_dst[lo:hi], self.out_eid[lo:hi]

    def neighbors(self, v: int) -> np.ndarray:
        """Social neighbours of ``v`` regardless of edge direction."""
        return np.union1d(self.in_edges(v)[0], self.out_edges(v)[0])

    def __repr__(self) -> str:
        return (f"GraphSnapshot(trial={self.trial}, nodes={self.node_count}, "
                f"edges={self.edge_count}, ties={self.tie_count})")


class EvolvingGraph:
    """Append-only temporal directed graph with dense integer ids."""

    def __init__(self) -> None:
        self._join: list[int] = []
        self._degree: list[int] = []
        self._src: list[int] = []
        self._dst: list[int] = []
        self._est: list[int] = []
        # one entry per social tie: (u, v, trial, bidirectional, first edge id)
        self._ties: list[tuple[int, int, int, bool, int]] = []
        self._pairs: set[tuple[int, int]] = set()
        self._max_trial = 0
        self._snapshots: dict[int, GraphSnapshot] = {}

    # -- sizes -------------------------------------------------------------
    @property
    def node_count(self) -> int:
        return len(self._join)

    @property
    def edge_count(self) -> int:
        return len(self._src)

    @property
    def tie_count(self) -> int:
        return len(self._ties)

    @property
    def max_trial(self) -> int:
        return self._max_trial

    # -- mutation ----------------------------------------------------------
    def add_node(self, join_trial: int) -> int:
        join_trial = int(join_trial)
        if join_trial < self._max_trial:
            raise GraphError(
                f"join trial {join_trial} precedes recorded trial {self._max_trial}")
        self._join.append(join_trial)
        self._degree.append(0)
        self._touch(join_trial)
        return len(self._join) - 1

    def add_edge(self, src: int, dst: int, establish_trial: int,
                 bidirectional: bool = True) -> list[int]:
        """Add one social tie; returns the new directed edge id(s)."""
        src, dst, establish_trial = int(src), int(dst), int(establish_trial)
        n = len(self._join)
        if not (0 <= src < n and 0 <= dst < n):
            raise GraphError(f"unknown endpoint in edge {src}->{dst}")
        if src == dst:
            raise GraphError(f"self-loop on node {src}")
        if establish_trial < self._max_trial:
            raise GraphError(
                f"edge trial {establish_trial} precedes recorded trial {self._max_trial}")
        if max(self._join[src], self._join[dst]) > establish_trial:
            raise GraphError(f"edge {src}->{dst} established before an endpoint joined")
        pairs = [(src, dst), (dst, src)] if bidirectional else [(src, dst)]
        for p in pairs:
            if p in self._pairs:
                raise GraphError(f"duplicate directed edge {p[0]}->{p[1]}")
        ids = []
        for a, b in pairs:
            self._pairs.add((a, b))
            self._src.append(a)
            self._dst.append(b)
            self._est.append(establish_trial)
            ids.append(len(self._src) - 1)
        self._ties.append((src, dst, establish_trial, bidirectional, ids[0]))
        self._degree[src] += 1
        self._degree[dst] += 1
        self._touch(establish_trial)
        return ids

    def advance(self, trial: int) -> None:
        """Record that ``trial`` has happened, even if nothing joined during it."""
        trial = int(trial)
        if trial < self._max_trial:
            raise GraphError(f"trial {trial} precedes recorded trial {self._max_trial}")
        self._touch(trial)

    def _touch(self, trial: int) -> None:
        self._max_trial = max(self._max_trial, trial)
        # a mutation at trial t can only change snapshots >= t
        for t in [t for t in self._snapshots if t >= trial]:
            del self._snapshots[t]

    # -- queries -----------------------------------------------------------
    def has_edge(self, src: int, dst: int) -> bool:
        return (src, dst) in self._pairs

    def node(self, i: int) -> NodeRecord:
        return NodeRecord(i, self._join[i], self._degree[i])

    def edge(self, i: int) -> EdgeRecord:
        return EdgeRecord(i, self._src[i], self._dst[i], self._est[i])

    def nodes(self) -> list[NodeRecord]:
        return [self.node(i) for i in range(self.node_count)]

    def edges(self) -> list[EdgeRecord]:
        return [self.edge(i) for i in range(self.edge_count)]

    def degrees(self) -> np.ndarray:
        return np.asarray(self._degree, dtype=np.int64)

    def join_trials(self) -> np.ndarray:
        return np.asarray(self._join, dtype=np.int64)

    def edge_trials(self) -> np.ndarray:
        return np.asarray(self._est, dtype=np.int64)

    def edge_endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.asarray(self._src, dtype=np.int64),
                np.asarray(self._dst, dtype=np.int64))

    def nodes_joined(self, trial: int) -> np.ndarray:
        """Ids of nodes whose join trial equals ``trial``."""
        return np.flatnonzero(self.join_trials() == trial)

    def snapshot(self, trial: int) -> GraphSnapshot:
        trial = int(trial)
        if trial > self._max_trial:
            raise GraphError(f"trial {trial} is beyond recorded trial {self._max_trial}")
        snap = self._snapshots.get(trial)
        if snap is None:
            # ids are dense in arrival order, so each snapshot is a prefix
            n = int(np.searchsorted(self._join, trial, side="right"))
            m = int(np.searchsorted(self._est, trial, side="right"))
            ties = [t for t in self._ties if t[2] <= trial]
            tu = np.fromiter((t[0] for t in ties), dtype=np.int64, count=len(ties))
            tv = np.fromiter((t[1] for t in ties), dtype=np.int64, count=len(ties))
            snap = GraphSnapshot(trial, np.asarray(self._join[:n]),
                                 np.asarray(self._src[:m], dtype=np.int64),
                                 np.asarray(self._dst[:m], dtype=np.int64), tu, tv)
            self._snapshots[trial] = snap
        return snap

    def copy(self) -> "EvolvingGraph":
        g = EvolvingGraph()
        g._join = list(self._join)
        g._degree = list(self._degree)
        g._src = list(self._src)
        g._dst = list(self._dst)
        g._est = list(self._est)
        g._ties = list(self._ties)
        g._pairs = set(self._pairs)
        g._max_trial = self._max_trial
        return g

    # -- export --------------------------------------------------------------
    def export_csv(self, stream: TextIO, bidirectional: bool = True) -> None:
        """Write the graph as temporal CSV rows in arrival order.

        Ties whose directionality differs from ``bidirectional`` carry a fifth
        ``bi``/``uni`` field so that re-ingesting reproduces them exactly.
        """
        w = csv.writer(stream, lineterminator="\n")
        ties_by_trial: dict[int, list] = {}
        for t in self._ties:
            ties_by_trial.setdefault(t[2], []).append(t)
        nodes_by_trial: dict[int, list[int]] = {}
        for i, j in enumerate(self._join):
            nodes_by_trial.setdefault(j, []).append(i)
        for trial in sorted(set(nodes_by_trial) | set(ties_by_trial)):
            for i in nodes_by_trial.get(trial, []):
                w.writerow(["node", i, trial])
            for u, v, tr, bi, _ in ties_by_trial.get(trial, []):
                row = ["edge", u, v, tr]
                if bi != bidirectional:
                    row.append("bi" if bi else "uni")
                w.writerow(row)


@dataclass
class IngestReport:
    graph: EvolvingGraph
    node_ids: dict[str, int] = field(default_factory=dict)
    rejected: list[tuple[int, str]] = field(default_factory=list)

    @property
    def rejected_count(self) -> int:
        return len(self.rejected)


def default_bucket(time: str) -> int:
    """One trial per integer time unit."""
    return int(float(time))


def ingest_temporal_csv(lines: Iterable[str] | TextIO,
                        bucket: Callable[[str], int] = default_bucket,
                        bidirectional: bool = True) -> IngestReport:
    """Build an :class:`EvolvingGraph` from temporal CSV records.

    Accepts ``node,<id>,<time>`` and ``edge,<src>,<dst>,<time>[,bi|uni]``
    rows; blank lines and ``#`` comments are skipped. Rows are ordered by
    trial (nodes before edges within a trial, file order otherwise). Bad rows
    are skipped and reported as ``(line number, reason)``.
    """
    if isinstance(lines, str):
        lines = io.StringIO(lines)
    report = IngestReport(EvolvingGraph())
    parsed = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = next(csv.reader([line]))
        kind = fields[0].strip().lower()
        try:
            if kind == "node" and len(fields) == 3:
                parsed.append((bucket(fields[2].strip()), 0, lineno, fields[1].strip(), None, None))
            elif kind == "edge" and len(fields) in (4, 5):
                bi = bidirectional
                if len(fields) == 5:
                    flag = fields[4].strip().lower()
                    if flag not in ("bi", "uni"):
                        raise ValueError(f"bad direction flag {flag!r}")
                    bi = flag == "bi"
                parsed.append((bucket(fields[3].strip()), 1, lineno,
                               fields[1].strip(), fields[2].strip(), bi))
            else:
                raise ValueError(f"unrecognised record {line!r}")
        except ValueError as exc:
            report.rejected.append((lineno, str(exc)))
    parsed.sort(key=lambda p: (p[0], p[1], p[2]))

    g, ids = report.graph, report.node_ids
    for trial, kind, lineno, a, b, bi in parsed:
        if trial < 0:
            report.rejected.append((lineno, f"negative trial {trial}"))
            continue
        if kind == 0:
            if a in ids:
                report.rejected.append((lineno, f"duplicate node {a}"))
                continue
            ids[a] = g.add_node(trial)
            continue
        if a not in ids or b not in ids:
            missing = a if a not in ids else b
            report.rejected.append((lineno, f"edge references unseen node {missing}"))
            continue
        try:
            g.add_edge(ids[a], ids[b], trial, bidirectional=bi)
        except GraphError as exc:
            report.rejected.append((lineno, str(exc)))
    report.rejected.sort()
    return report
