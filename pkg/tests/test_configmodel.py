import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import poisson

from randsurf.combinatorics import sample_cycle_type, sample_pairing
from randsurf.configmodel import (DegreeSequence, LimitModelParams, diameter, diameter_experiment,
                                  sample_config_model, xi_limit_model)
from randsurf.enumeration import exact_diameter_law
from randsurf.rng import RngStream
from randsurf.stats import chi_square
from randsurf.surface import MultiGraph, multigraph_from_legs


def test_degree_sequence_validation():
    with pytest.raises(ValueError):
        DegreeSequence((1, 2))
    with pytest.raises(ValueError):
        DegreeSequence((0, 2))
    assert DegreeSequence([3, 1]).degrees == (3, 1)


def test_single_edge_and_loop():
    g = sample_config_model([1, 1], 0)
    assert g.count(1, 2) == 1 and diameter(g) == 1
    g = sample_config_model([2], 0)
    assert g.count(1, 1) == 2 and diameter(g) == 0


def test_two_vertices_of_degree_two():
    cnt = Counter()
    for i in range(30_000):
        g = sample_config_model([2, 2], RngStream(40, i))
        cnt["double" if g.count(1, 2) == 2 else "loops"] += 1
    res = chi_square([cnt["double"], cnt["loops"]], [2 / 3, 1 / 3])
    assert res.p_value > 0.01 and cnt["double"] + cnt["loops"] == 30_000


def test_diameter_examples():
    assert diameter(multigraph_from_legs(np.array([0, 0, 0, 0]), np.array([1, 0, 3, 2]), np.arange(1))) == 0
    assert diameter(multigraph_from_legs(np.array([0, 1]), np.array([1, 0]), np.arange(2))) == 1
    two_loops = multigraph_from_legs(np.array([0, 0, 1, 1]), np.array([1, 0, 3, 2]), np.arange(2))
    assert diameter(two_loops) == math.inf


def _random_graph(seed):
    g = RngStream(41, seed).gen
    degs = sample_cycle_type(int(g.integers(2, 60)) * 2, g).parts
    owner = np.repeat(np.arange(len(degs)), degs)
    return owner, sample_pairing(owner.size, g), degs


@given(st.integers(0, 10 ** 6))
@settings(max_examples=60, deadline=None)
def test_diameter_relabel_and_loop_invariance(seed):
    owner, alpha, degs = _random_graph(seed)
    base = multigraph_from_legs(owner, alpha, np.arange(len(degs)))
    d = diameter(base)
    g = np.random.default_rng(seed)
    # relabel the vertices through the tie-break keys
    relabelled = multigraph_from_legs(owner, alpha, g.permutation(len(degs)))
    assert diameter(relabelled) == d
    # extra loops change degrees but not distances
    edges = dict(base.edges)
    degrees = base.degrees.copy()
    for v in range(base.num_vertices):
        extra = 2 * int(g.integers(0, 3))
        if extra:
            edges[(v, v)] = edges.get((v, v), 0) + extra
            degrees[v] += extra
    looped = MultiGraph(degrees, edges, base.root, base.vertex_of)
    assert diameter(looped) == d


def test_exact_diameter_law_small():
    assert exact_diameter_law(1).probs == {"0": Fraction(1, 2), "1": Fraction(1, 2)}
    # by hand over S_4: types (4):6, (3,1):8, (2,2):3, (2,1,1):6, (1^4):1
    want = {"0": Fraction(6, 24), "1": Fraction(8 + 2, 24), "2": Fraction(4, 24), "inf": Fraction(1 + 2 + 1, 24)}
    assert exact_diameter_law(2).probs == want


def test_diameter_experiment_matches_exact_law_n2():
    law = exact_diameter_law(2)
    res = diameter_experiment(2, 20_000, 42)
    keys = law.support()
    assert set(k for k, c in res["counts"].items() if c) <= set(keys)
    assert chi_square([res["counts"][k] for k in keys], [float(law[k]) for k in keys]).p_value > 0.01


def test_diameter_experiment_shape():
    res = diameter_experiment(50, 200, 1)
    assert sum(res["counts"].values()) == 200
    assert res["xi_hat"] == res["histogram"]["3"]
    lo, hi = res["ci_95"]
    assert lo <= res["xi_hat"] <= hi
    assert diameter_experiment(50, 200, 1) == res
    with pytest.raises(ValueError):
        diameter_experiment(1, 10)


def test_diameter_two_or_three_at_desk_scale():
    res = diameter_experiment(10_000, 2000, 0)
    assert res["p_2_or_3"] >= 0.95
    assert 0.2 <= res["xi_hat"] <= 0.4


def test_every_small_vertex_meets_a_large_one():
    """Vertices see a vertex of degree >= 1% of the legs (a loop counts for the vertex itself)."""
    n = 10_000
    thr = 0.01 * 2 * n
    bad = 0
    R = 2000
    for i in range(R):
        g = RngStream(43, i).gen
        G = sample_config_model(sample_cycle_type(2 * n, g).parts, g)
        adj = G.neighbors()
        loops = {i for (i, j) in G.edges if i == j}
        for v in range(G.num_vertices):
            near = any(G.degrees[w] >= thr for w in adj[v]) or (v in loops and G.degrees[v] >= thr)
            if not near:
                bad += 1
                break
    assert bad / R <= 0.02


def test_small_part_counts_are_independent_poisson():
    n = 10_000
    R = 5000
    g = RngStream(44, 0).gen
    cells = Counter()
    for _ in range(R):
        cp = sample_cycle_type(2 * n, g)
        cells[(min(cp.count(1), 3), min(cp.count(2), 2), min(cp.count(3), 1))] += 1

    def capped(lam, cap):
        p = [poisson.pmf(k, lam) for k in range(cap)]
        return p + [1 - sum(p)]

    p1, p2, p3 = capped(1.0, 3), capped(0.5, 2), capped(1 / 3, 1)
    keys = [(a, b, c) for a in range(4) for b in range(3) for c in range(2)]
    probs = [p1[a] * p2[b] * p3[c] for a, b, c in keys]
    assert chi_square([cells[k] for k in keys], probs).p_value > 0.01


def test_limit_model_params_validation():
    with pytest.raises(ValueError):
        LimitModelParams(A=-1)
    with pytest.raises(ValueError):
        LimitModelParams(delta=0)
    with pytest.raises(ValueError):
        LimitModelParams(replicas=0)


def test_limit_model_without_small_vertices():
    assert xi_limit_model(LimitModelParams(A=0, replicas=1000), sensitivity=())["xi_hat"] == 0


def test_limit_model_monotone_in_cutoff():
    res = xi_limit_model(LimitModelParams(A=30, replicas=20_000, seed=3), sensitivity=(5, 10, 20, 40))
    est = [row["estimate"] for row in res["sensitivity"]]
    assert [row["A"] for row in res["sensitivity"]] == [5, 10, 20, 30, 40]
    assert all(a <= b for a, b in zip(est, est[1:]))
    assert res["xi_hat"] == est[3]


def test_limit_model_desk_scale():
    res = xi_limit_model(LimitModelParams(A=30, delta=1e-6, replicas=100_000, seed=0))
    assert 0.2 <= res["xi_hat"] <= 0.4
    assert res["ci_95"][0] <= res["xi_hat"] <= res["ci_95"][1]


@pytest.mark.slow
def test_limit_model_agrees_with_finite_n():
    finite = diameter_experiment(100_000, 2000, 5)["xi_hat"]
    res = xi_limit_model(LimitModelParams(A=40, replicas=100_000, seed=5), sensitivity=(10, 20))
    for row in res["sensitivity"]:
        assert abs(row["estimate"] - finite) <= 0.05, row
