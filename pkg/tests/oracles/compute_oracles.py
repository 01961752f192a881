"""Independent reference values for the test-suite, frozen into ../fixtures/oracles.json.

Nothing here imports the package under test. Each value is produced by a
route different from the implementation: closed forms, Monte-Carlo runs of
the underlying stochastic process, or world enumeration through boolean
matrix closure. Rerun with ``python compute_oracles.py`` (about a minute).
"""
import itertools
import json
import math
from pathlib import Path

import mpmath
import numpy as np
from scipy.stats import norm

OUT = Path(__file__).resolve().parent.parent / "fixtures" / "oracles.json"


def logistic_value():
    # dn/dt = beta*n*(N-n), n(0)=10, beta=1e-3, N=1000, run for beta*N*t = 1
    mpmath.mp.dps = 30
    N, n0, beta = mpmath.mpf(1000), mpmath.mpf(10), mpmath.mpf("1e-3")
    t = 1 / (beta * N)
    return float(N / (1 + (N - n0) / n0 * mpmath.exp(-beta * N * t)))


def lemma2_monte_carlo(configs, runs=100_000, seed=1):
    """Mean final degree of one node under stub-level PA.

    Slot s of the arrivals sees D + 2(s-1) stubs plus the arriving node's own
    stub, so the focal node is hit with probability d / (D + 2s - 1).
    """
    rng = np.random.default_rng(seed)
    out = []
    for d0, D, new, m in configs:
        d = np.full(runs, float(d0))
        total = float(D)
        for _ in range(new * m):
            hit = rng.random(runs) * (total + 1) < d
            d += hit
            total += 2
        out.append({"d": d0, "D": D, "new": new, "m": m,
                    "mean": float(d.mean()), "se": float(d.std(ddof=1) / math.sqrt(runs))})
    return out


def clamped_gaussian_mean(mu=0.05, var=0.008):
    s = math.sqrt(var)
    a, b = (0 - mu) / s, (1 - mu) / s
    # E[clip(X, 0, 1)] = E[X; 0<X<1] + P(X >= 1)
    inner = mu * (norm.cdf(b) - norm.cdf(a)) + s * (norm.pdf(a) - norm.pdf(b))
    return float(inner + norm.sf(b))


def posterior_fixture():
    rng = np.random.default_rng(7)
    last = rng.integers(1, 30, size=10)
    inc = rng.integers(0, 6, size=10)
    obs = []
    total = 0
    for i, (a, b) in enumerate(zip(last, inc)):
        obs.append({"node": i, "observed": int(a + b), "last_trial": 1, "last": int(a)})
        total += int(b)
    return {"observations": obs, "posterior": total}


def closure(adj):
    """Transitive-reflexive closure of a stack of boolean adjacency matrices."""
    n = adj.shape[-1]
    reach = adj | np.eye(n, dtype=bool)
    for _ in range(int(math.ceil(math.log2(max(n, 2)))) + 1):
        reach = np.einsum("wij,wjk->wik", reach.astype(np.int32), reach.astype(np.int32)) > 0
    return reach


def worlds(n, edges, probs):
    E = len(edges)
    bits = ((np.arange(2 ** E)[:, None] >> np.arange(E)) & 1).astype(bool)
    p = np.where(bits, probs, 1 - np.asarray(probs)).prod(axis=1)
    adj = np.zeros((2 ** E, n, n), dtype=bool)
    for e, (a, b) in enumerate(edges):
        adj[:, a, b] = bits[:, e]
    return p, closure(adj)


def weighted_influence(p, reach, seeds, weight):
    hit = reach[:, list(seeds), :].any(axis=1)
    return float(p @ (hit.astype(float) @ weight))


def random_instance(rng, n=8, max_edges=12):
    pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
    E = int(rng.integers(6, max_edges + 1))
    idx = rng.choice(len(pairs), size=E, replace=False)
    edges = [pairs[i] for i in sorted(idx)]
    probs = rng.uniform(0.05, 0.9, size=E).round(4)
    return edges, probs


def approximation_instances(count=100, K=2, seed=11):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        edges, probs = random_instance(rng)
        C = rng.uniform(1.0, 3.0, size=8).round(4)
        p, reach = worlds(8, edges, probs)
        best = max((weighted_influence(p, reach, s, C), s)
                   for s in itertools.combinations(range(8), K))
        out.append({"edges": edges, "probs": probs.tolist(), "C": C.tolist(),
                    "opt": best[0], "opt_seeds": list(best[1])})
    return out


def six_node_fixture():
    edges = [(0, 1), (1, 2), (0, 3), (3, 4), (4, 5), (2, 5), (5, 0), (1, 4)]
    probs = [0.6, 0.4, 0.5, 0.3, 0.7, 0.2, 0.25, 0.35]
    C = [1.0, 1.8, 1.2, 2.5, 1.0, 1.4]
    p, reach = worlds(6, edges, probs)
    values = {",".join(map(str, s)): weighted_influence(p, reach, s, np.asarray(C))
              for k in (1, 2) for s in itertools.combinations(range(6), k)}
    return {"edges": edges, "probs": probs, "C": C, "values": values}


def dag_monte_carlo(runs=1_000_000, seed=5):
    """Random 10-edge DAG; Monte-Carlo influence of seed {0} by topological sweep."""
    rng = np.random.default_rng(seed)
    n = 7
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    idx = sorted(rng.choice(len(pairs), size=10, replace=False))
    edges = [pairs[i] for i in idx]
    probs = rng.uniform(0.1, 0.9, size=10).round(4)
    total, sq = 0.0, 0.0
    chunk = 200_000
    for _ in range(runs // chunk):
        live = rng.random((chunk, 10)) < probs
        act = np.zeros((chunk, n), dtype=bool)
        act[:, 0] = True
        for v in range(1, n):
            for e, (a, b) in enumerate(edges):
                if b == v:
                    act[:, v] |= act[:, a] & live[:, e]
        size = act.sum(axis=1)
        total += size.sum()
        sq += (size.astype(float) ** 2).sum()
    mean = total / runs
    sd = math.sqrt(sq / runs - mean ** 2)
    return {"edges": edges, "probs": probs.tolist(), "seeds": [0], "mean": mean,
            "se": sd / math.sqrt(runs)}


def pa_future_oracle(futures=100, seed=3):
    """Realised degree gains of the top nodes of a fixed toy graph over one trial.

    Toy graph: node i >= 1 ties to floor((i-1)/3) (a ternary tree, 300 nodes).
    Arrivals follow the logistic law with beta=2e-6, N=1e5 from n0=300 over
    one unit of time, counted by floor differencing; each arrival ties to one
    existing node chosen proportionally to degree.
    """
    n0, beta, N = 300, 2e-6, 1e5
    u, v = [], []
    for i in range(1, n0):
        u.append(i)
        v.append((i - 1) // 3)
    deg = np.bincount(u + v, minlength=n0)
    n1 = N / (1 + (N - n0) / n0 * math.exp(-beta * N * 1.0))
    arrivals = int(math.floor(n1)) - n0
    top = np.argsort(-deg, kind="stable")[:10]
    rng = np.random.default_rng(seed)
    gain = np.zeros(len(top))
    for _ in range(futures):
        stubs = list(np.repeat(np.arange(n0), deg))
        cur = deg.astype(float).copy().tolist()
        for k in range(arrivals):
            new = n0 + k
            t = stubs[int(rng.integers(len(stubs)))]
            stubs += [new, t]
            cur[t] += 1
            cur.append(1)
        gain += np.asarray(cur)[top] - deg[top]
    return {"n0": n0, "beta": beta, "N": N, "arrivals": arrivals, "top": top.tolist(),
            "mean_gain": (gain / futures).tolist()}


def main():
    lemma_cfgs = [(2, 10, 50, 1), (1, 40, 120, 1), (5, 30, 40, 2), (3, 200, 300, 1), (10, 60, 25, 3)]
    data = {
        "logistic_n": logistic_value(),
        "lemma2": lemma2_monte_carlo(lemma_cfgs),
        "clamped_mean": clamped_gaussian_mean(),
        "posterior_fixture": posterior_fixture(),
        "approx_instances": approximation_instances(),
        "six_node": six_node_fixture(),
        "dag": dag_monte_carlo(),
        "pa_future": pa_future_oracle(),
    }
    OUT.write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
