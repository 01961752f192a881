"""Small graph builders shared by the tests."""
import numpy as np

from evoim.graph import EvolvingGraph


def directed(n, edges, trial=0):
    g = EvolvingGraph()
    for _ in range(n):
        g.add_node(trial)
    for a, b in edges:
        g.add_edge(a, b, trial, bidirectional=False)
    return g


def random_graph(rng, n, ties, bidirectional=True):
    g = EvolvingGraph()
    for _ in range(n):
        g.add_node(0)
    made = 0
    while made < ties:
        a, b = (int(x) for x in rng.choice(n, 2, replace=False))
        if g.has_edge(a, b) or g.has_edge(b, a):
            continue
        g.add_edge(a, b, 0, bidirectional=bidirectional)
        made += 1
    return g


def star(leaves):
    return directed(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE: list[str] = []
