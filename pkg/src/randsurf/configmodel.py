"""Configuration-model multigraphs, diameters, and two estimators of the
probability that the diameter equals 3."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from numba import njit

from .combinatorics import sample_cycle_type, sample_pairing
from .rng import RngStream, as_generator
from .stats import wilson_ci
from .surface import MultiGraph, multigraph_from_legs

DIAMETER_BINS = ("0", "1", "2", "3", ">=4", "inf")


@dataclass(frozen=True)
class DegreeSequence:
    degrees: tuple

    def __post_init__(self):
        d = tuple(int(x) for x in self.degrees)
        object.__setattr__(self, "degrees", d)
        if any(x < 1 for x in d):
            raise ValueError("degrees must be positive")
        if sum(d) % 2:
            raise ValueError("degree sum must be even")


def sample_config_model(degrees, rng) -> MultiGraph:
    """Uniform pairing of the legs; leg labels follow the given vertex order."""
    if not isinstance(degrees, DegreeSequence):
        degrees = DegreeSequence(tuple(degrees))
    deg = np.asarray(degrees.degrees, dtype=np.int64)
    owner = np.repeat(np.arange(deg.size), deg)
    partner = sample_pairing(int(deg.sum()), rng)
    return multigraph_from_legs(owner, partner, np.arange(deg.size))


def diameter(graph: MultiGraph) -> float:
    """Largest graph distance between two vertices; math.inf if disconnected."""
    V = graph.num_vertices
    if V <= 1:
        return 0
    adj = graph.neighbors()
    best = 0
    for s in range(V):
        dist = [-1] * V
        dist[s] = 0
        q = deque([s])
        seen = 1
        while q:
            u = q.popleft()
            for w in adj[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    seen += 1
                    q.append(w)
        if seen < V:
            return math.inf
        best = max(best, max(dist))
    return best


def _bin(d) -> str:
    if d == math.inf:
        return "inf"
    return str(int(d)) if d <= 3 else ">=4"


def diameter_experiment(n: int, replicas: int, rng=0, confidence: float = 0.95) -> dict:
    """Diameter law of the configuration model on the cycle type of S_2n.

    Replica i uses ``RngStream(seed, i)`` when ``rng`` is an integer seed.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    counts = {b: 0 for b in DIAMETER_BINS}
    for i in range(replicas):
        gen = _replica_gen(rng, i)
        degs = sample_cycle_type(2 * n, gen).parts
        counts[_bin(diameter(sample_config_model(degs, gen)))] += 1
    hist = {b: c / replicas for b, c in counts.items()}
    ci = {b: wilson_ci(c, replicas, confidence) for b, c in counts.items()}
    two3 = counts["2"] + counts["3"]
    return {
        "n": n,
        "replicas": replicas,
        "counts": counts,
        "histogram": hist,
        "ci": ci,
        "p_2_or_3": two3 / replicas,
        "p_2_or_3_ci": wilson_ci(two3, replicas, confidence),
        "xi_hat": hist["3"],
        "ci_95": ci["3"],
    }


def _replica_gen(rng, i: int) -> np.random.Generator:
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng), i).gen
    if isinstance(rng, RngStream):
        return rng.child(i).gen
    return as_generator(rng)


# ---------------------------------------------------------------- limit model

@dataclass(frozen=True)
class LimitModelParams:
    A: int = 30
    delta: float = 1e-6
    replicas: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.A < 0:
            raise ValueError("A must be non-negative")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.replicas < 1:
            raise ValueError("replicas must be positive")


@njit(cache=True)
def _bad_pair_kernel(cum, counts, u, offsets):
    """cum: (R, K) cumulative stick ends; counts: (R, A) small-vertex counts;
    u: (R, S) uniforms, one block per degree i of size offsets[i+1]-offsets[i].

    A replica is bad when two small vertices have no stick in common.
    """
    R, A = counts.shape
    K = cum.shape[1]
    out = np.zeros(R, dtype=np.bool_)
    maxv = 0
    for r in range(R):
        t = 0
        for i in range(A):
            t += counts[r, i]
        if t > maxv:
            maxv = t
    for r in range(R):
        # collect the stick sets of each vertex as bitsets over sticks (sorted arrays)
        nv = 0
        for i in range(A):
            nv += counts[r, i]
        if nv < 2:
            continue
        degs = np.empty(nv, dtype=np.int64)
        starts = np.empty(nv, dtype=np.int64)
        v = 0
        for i in range(A):
            base = offsets[i]
            for c in range(counts[r, i]):
                degs[v] = i + 1
                starts[v] = base + c * (i + 1)
                v += 1
        sticks = np.empty(u.shape[1], dtype=np.int64)
        for v in range(nv):
            for k in range(degs[v]):
                x = u[r, starts[v] + k]
                # locate x among the stick intervals, -1 for dust beyond the last stick
                lo = 0
                hi = K
                while lo < hi:
                    mid = (lo + hi) // 2
                    if cum[r, mid] > x:
                        hi = mid
                    else:
                        lo = mid + 1
                s = lo
                if s >= K or (s > 0 and cum[r, s] == cum[r, s - 1]):
                    s = -1 - starts[v] - k  # unique dust id: never shared
                sticks[starts[v] + k] = s
        bad = False
        for v in range(nv):
            if bad:
                break
            for w in range(v + 1, nv):
                share = False
                for k in range(degs[v]):
                    sv = sticks[starts[v] + k]
                    if sv < 0:
                        continue
                    for l in range(degs[w]):
                        if sticks[starts[w] + l] == sv:
                            share = True
                            break
                    if share:
                        break
                if not share:
                    bad = True
                    break
        out[r] = bad
    return out


def xi_limit_model(params: LimitModelParams, sensitivity: Sequence[int] = (5, 10, 20, 40),
                   batch: int = 20_000) -> dict:
    """Estimate the probability that two small vertices share no neighbour.

    Small vertices of degree i <= A arrive as independent Poisson(1/i) counts;
    each leg lands in a PD(1) stick chosen by a uniform.  The sensitivity table
    reruns the estimator with the same seed at other cutoffs.
    """
    cutoffs = sorted(set([params.A, *[a for a in sensitivity if a >= 0]]))
    top = max(cutoffs)
    bad = {a: 0 for a in cutoffs}
    done = 0
    b = 0
    while done < params.replicas:
        R = min(batch, params.replicas - done)
        if top == 0:
            done += R
            b += 1
            continue
        flags = _limit_batch_cut(top, cutoffs, params.delta, R, params.seed, b)
        for a in cutoffs:
            bad[a] += int(flags[a].sum()) if a > 0 else 0
        done += R
        b += 1
    N = params.replicas
    est = bad[params.A] / N
    return {
        "params": {"A": params.A, "delta": params.delta, "replicas": N, "seed": params.seed},
        "replicas": N,
        "xi_hat": est,
        "ci_95": wilson_ci(bad[params.A], N),
        "sensitivity": [{"A": a, "estimate": bad[a] / N, "ci_95": wilson_ci(bad[a], N)} for a in cutoffs],
    }


def _limit_batch_cut(top, cutoffs, delta, R, seed, b):
    from .combinatorics import sample_pd1_batch

    root = RngStream(seed, b)
    sticks = sample_pd1_batch(R, root.child(0), delta)
    cum = np.cumsum(sticks, axis=1)
    counts = np.zeros((R, top), dtype=np.int64)
    blocks = []
    offsets = [0]
    for i in range(1, top + 1):
        g = root.child(i).gen
        counts[:, i - 1] = g.poisson(1.0 / i, size=R)
        cmax = int(counts[:, i - 1].max())
        blocks.append(g.random((R, cmax * i)))
        offsets.append(offsets[-1] + cmax * i)
    u = np.concatenate(blocks, axis=1)
    offs = np.asarray(offsets, dtype=np.int64)
    out = {}
    for a in cutoffs:
        if a == 0:
            out[a] = np.zeros(R, dtype=bool)
            continue
        c = counts.copy()
        c[:, a:] = 0
        out[a] = _bad_pair_kernel(cum, c, u, offs)
    return out
