"""The acceptance suite: every check returns verdict records
``{check, statistic, threshold, pass}``.

``run_suite("fast")`` runs the exact checks only; ``"full"`` adds the
statistical ones at their committed sizes and seeds.
"""
from __future__ import annotations

import math
import time
from collections import Counter, defaultdict
from fractions import Fraction
from typing import Callable, Dict, List

import numpy as np
from scipy import stats as sps

from . import _kernels as K
from .combinatorics import (connected_pair_fraction, poisson_parity_pmf, poisson_pmf, rooted_map_counts,
                            sample_pairing, sample_pd1_batch)
from .configmodel import LimitModelParams, diameter_experiment, xi_limit_model
from .enumeration import (exact_gluing_law, exact_peeling_law, exact_presampled_law,
                          rooted_counts_by_enumeration)
from .peeling import (closure_ratios, monitors, run, strategy_min_hole, strategy_red_vertex,
                      strategy_uniform)
from .rng import RngStream
from .stats import chi_square, ks_statistic, tv_empirical_vs_pmf, verdict, wilson_ci
from .surface import Configuration, glue, graph_of, sample_gluing, sample_uniform_map, triangle_triples

TRIANGLES_N = 9999  # 3 must divide n for an all-triangle configuration


def beta_1_half_cdf(x):
    return 1.0 - np.sqrt(1.0 - np.clip(x, 0.0, 1.0))


def _strategies(seed: int):
    return [
        ("min-hole", strategy_min_hole),
        ("uniform", lambda: strategy_uniform(RngStream(seed, 1))),
        ("red-vertex", lambda: strategy_red_vertex(RngStream(seed, 2))),
    ]


# ---------------------------------------------------------------- 1-4 exact

def check_counts() -> List[Dict]:
    t = time.time()
    rec = rooted_map_counts(4)
    brute = [rooted_counts_by_enumeration(n) for n in (1, 2, 3, 4)]
    dt = time.time() - t
    ok = rec == brute == [2, 10, 74, 706] and dt < 120
    return [verdict("1.rooted_map_counts_vs_enumeration", {"recursion": rec, "enumeration": brute,
                                                          "seconds": round(dt, 2)},
                    "exact equality, < 120 s", ok)]


def check_connectivity() -> List[Dict]:
    worst = Fraction(0)
    for n in range(10, 101):
        f = connected_pair_fraction(n)
        worst = max(worst, abs(f - (1 - Fraction(1, 2 * n))) * n * n)
    return [verdict("2.connected_fraction_expansion", float(worst), 3.0, worst <= 3)]


EXACT_CONFIGS = [(4,), (3, 3), (2, 2), (1, 1, 2)]
SMALL_CONFIGS = [(2,), (1, 1), (4,), (3, 3), (2, 2), (1, 1, 2), (6,), (1, 2, 3), (2, 4), (1, 5), (1, 1, 1, 3),
                 (1, 1, 4), (3, 1, 2), (2, 2, 2), (1, 1, 1, 1, 2)]


def check_glue_peel(seed: int = 0, fuzz: int = 10_000) -> List[Dict]:
    from .enumeration import iter_pairings

    mismatches = 0
    total = 0
    for per in EXACT_CONFIGS:
        c = Configuration(per)
        for alpha in iter_pairings(c.total_perimeter):
            ref = glue(c, alpha)[1].key()
            for name, make in _strategies(seed):
                for mode_strategy in (make(),):
                    log = run(c, mode_strategy, "presampled", pairing=alpha)
                    total += 1
                    mismatches += log.summary.key() != ref
    out = [verdict("3.glue_peel_exhaustive", mismatches, 0, mismatches == 0, runs=total)]
    gen = RngStream(seed, 3).gen
    bad = 0
    for i in range(fuzz):
        n = int(gen.integers(1, 101))
        per = _random_config(n, gen)
        c = Configuration(per)
        alpha = sample_pairing(c.total_perimeter, gen)
        ref = glue(c, alpha)[1].key()
        for name, make in _strategies(seed + i):
            log = run(c, make(), "presampled", pairing=alpha)
            bad += int(log.summary.key() != ref or log.X[-1] != sum(p[0] for p in ref))
    out.append(verdict("3.glue_peel_fuzz", bad, 0, bad == 0, instances=fuzz))
    return out


def _random_config(n: int, gen) -> tuple:
    """Random perimeters with total 2n."""
    left = 2 * n
    per = []
    while left > 0:
        p = int(gen.integers(1, min(left, 8) + 1))
        per.append(p)
        left -= p
    return tuple(per)


def check_modes(seed: int = 0, runs: int = 100_000) -> List[Dict]:
    out = []
    bad = 0
    for per in SMALL_CONFIGS:
        c = Configuration(per)
        if c.half_total > 3:
            continue
        ref = exact_gluing_law(c)
        for name, make in _strategies(seed):
            a = exact_peeling_law(c, make)
            b = exact_presampled_law(c, make)
            bad += not (a == b == ref)
    out.append(verdict("4.mode_equivalence_exact", bad, 0, bad == 0))
    c = Configuration((3, 3, 4))
    for k, (name, make) in enumerate(_strategies(seed)):
        tallies = []
        for j, mode in enumerate(("presampled", "on-the-fly")):
            cnt = Counter()
            strat = make()
            rng = RngStream(seed, 100 + 2 * k + j).gen
            for _ in range(runs):
                cnt[run(c, strat, mode, rng).summary.key()] += 1
            tallies.append(cnt)
        keys = sorted(set(tallies[0]) | set(tallies[1]))
        table = np.array([[t[key] for key in keys] for t in tallies], dtype=float)
        # pool rare outcomes so that expected cell counts stay >= 5
        keep = table.sum(axis=0) >= 10
        if not keep.all():
            table = np.column_stack([table[:, keep], table[:, ~keep].sum(axis=1)])
        p = float(sps.chi2_contingency(table)[1])
        out.append(verdict(f"4.mode_equivalence_chi2[{name}]", p, 0.01, p > 0.01, runs=runs,
                           config="3,3,4"))
    return out


# ---------------------------------------------------------------- 5-10 statistical

def check_vertex_universality(seed: int = 0, gluings: int = 10_000, tau_runs: int = 10_000) -> List[Dict]:
    n = TRIANGLES_N
    c = Configuration.triangles(n)
    parity = "odd" if (c.half_total + c.count) % 2 else "even"
    lam = math.log(n)
    V = np.empty(gluings, dtype=np.int64)
    conn = 0
    for i in range(gluings):
        lm, s = sample_gluing(c, RngStream(seed, i))
        V[i] = s.V
        conn += s.connected
    tv = tv_empirical_vs_pmf(V, lambda k: poisson_parity_pmf(lam, parity, k))
    out = [verdict("5.vertex_count_tv_parity_poisson", tv, 0.15, tv <= 0.15, mean_V=float(V.mean()),
                   poisson_mean=lam, parity=parity, connected_fraction=conn / gluings)]
    X = np.empty(tau_runs, dtype=np.int64)
    for i in range(tau_runs):
        log = run(c, strategy_min_hole(), "on-the-fly", RngStream(seed + 1, i), stop_at_tau=True)
        X[i] = log.X_at(log.tau)
    lam3 = math.log(3)
    tv2 = tv_empirical_vs_pmf(X, lambda k: poisson_pmf(lam3, k))
    out.append(verdict("5.X_tau_tv_poisson_log3", tv2, 0.15, tv2 <= 0.15, mean=float(X.mean())))
    return out


def check_euler_independence(seed: int = 0, maps: int = 10_000, n: int = 10_000) -> List[Dict]:
    V = np.empty(maps)
    F = np.empty(maps)
    for i in range(maps):
        lm = sample_uniform_map(n, RngStream(seed, i))
        V[i] = K.count_cycles(lm.sigma)
        F[i] = K.count_cycles(lm.phi)
    s = math.sqrt(math.log(n))
    a = (V - math.log(n)) / s
    b = (F - math.log(n)) / s
    r = float(np.corrcoef(a, b)[0, 1])
    return [verdict("6.euler_VF_correlation", abs(r), 0.1, abs(r) <= 0.1)]


def check_diameter(seed: int = 0, n: int = 10_000, replicas: int = 2000, xi_replicas: int = 100_000) -> List[Dict]:
    d = diameter_experiment(n, replicas, seed)
    xi = xi_limit_model(LimitModelParams(A=30, delta=1e-6, replicas=xi_replicas, seed=seed))
    p23 = d["p_2_or_3"]
    p3 = d["xi_hat"]
    gap = abs(xi["xi_hat"] - p3)
    return [
        verdict("7.diameter_2_or_3", p23, 0.95, p23 >= 0.95, ci=d["p_2_or_3_ci"]),
        verdict("7.diameter_eq_3", p3, [0.2, 0.4], 0.2 <= p3 <= 0.4, ci=d["ci_95"]),
        verdict("7.xi_limit_vs_finite", gap, 0.05, gap <= 0.05, xi_limit=xi["xi_hat"], xi_ci=xi["ci_95"],
                sensitivity=xi["sensitivity"]),
    ]


def red_runs(seed: int, runs: int, n: int = TRIANGLES_N, track: int = 1):
    """Red-vertex peeling of triangles, on the fly; yields trajectory logs."""
    c = Configuration.triangles(n)
    for i in range(runs):
        yield run(c, strategy_red_vertex(RngStream(seed, 2 * i)), "on-the-fly", RngStream(seed, 2 * i + 1),
                  track=track)


def check_closures_and_monitors(seed: int = 0, runs: int = 10_000) -> List[Dict]:
    n = TRIANGLES_N
    r1 = np.empty(runs)
    r2 = np.empty(runs)
    sig = np.empty(runs)
    swallowed_early = 0
    supL = np.empty(runs)
    lct = np.empty(runs)
    dL = 0
    dLB = 0
    for i, log in enumerate(red_runs(seed, runs, n)):
        r = closure_ratios(log, 2)
        r1[i], r2[i] = r
        s = log.labels[0]
        sig[i] = math.inf if s[1] < 0 else s[1] / n
        if s[2] >= 0 and s[2] <= 0.9 * n:
            kind = log.event(int(s[2])).kind
            if kind in ("weak-closure", "loop-closure"):
                swallowed_early += 1
        m = monitors(log)
        supL[i] = m["sup_L"]
        lct[i] = m["first_loop_closure"]
        dL = max(dL, m["max_dL"])
        dLB = max(dLB, m["max_dLB"])
    ks1 = ks_statistic(r1, beta_1_half_cdf)
    ks2 = ks_statistic(r2, beta_1_half_cdf)
    rho = float(np.corrcoef(r1, r2)[0, 1])
    ks_sig = ks_statistic(np.minimum(sig, 1.0), beta_1_half_cdf)
    p_sup = float(np.mean(supL >= math.sqrt(n)))
    p_lct = float(np.mean(lct <= 0.9 * n))
    p_sw = swallowed_early / runs
    return [
        verdict("8.closure_ratio1_ks", ks1, 0.05, ks1 <= 0.05),
        verdict("8.closure_ratio2_ks", ks2, 0.05, ks2 <= 0.05, atom_at_1=float(np.mean(r2 == 1.0))),
        verdict("8.closure_ratio_correlation", abs(rho), 0.05, abs(rho) <= 0.05),
        verdict("8.label_hit_time_ks", ks_sig, 0.05, ks_sig <= 0.05),
        verdict("10.per_step_bounds", {"max_dL": dL, "max_dLB": dLB}, 2, dL <= 2 and dLB <= 2),
        verdict("10.sup_L_ge_sqrt_n", p_sup, 0.01, p_sup <= 0.01),
        verdict("10.first_loop_closure_le_0.9n", p_lct, 0.05, p_lct <= 0.05),
        verdict("10.label_swallowed_before_0.9n", p_sw, 0.02, p_sw <= 0.02),
    ]


def pd_oracle(draws: int = 1_000_000, seed: int = 0, k: int = 2, chunk: int = 50_000) -> dict:
    """Monte Carlo moments of PD(1) from stick breaking: E max, E sum X^2,
    E[X_i X_j] and E[X_i X_j X_l] for ranks up to k."""
    s_max = 0.0
    s_sq = 0.0
    pair = np.zeros((k, k))
    trip = np.zeros((k, k, k))
    done = 0
    c = 0
    while done < draws:
        R = min(chunk, draws - done)
        x = sample_pd1_batch(R, RngStream(seed, c).gen)
        if x.shape[1] < k:
            x = np.pad(x, ((0, 0), (0, k - x.shape[1])))
        top = x[:, :k]
        s_max += top[:, 0].sum()
        s_sq += (x * x).sum()
        pair += np.einsum("ri,rj->ij", top, top)
        trip += np.einsum("ri,rj,rl->ijl", top, top, top)
        done += R
        c += 1
    return {"E_max": s_max / draws, "E_sum_sq": s_sq / draws, "pair": pair / draws, "triple": trip / draws}


def check_pd_universality(seed: int = 0, gluings: int = 10_000) -> List[Dict]:
    n = TRIANGLES_N
    c = Configuration.triangles(n)
    two_n = 2.0 * n
    loop = np.empty(gluings)
    t11 = np.empty(gluings)
    root = np.empty(gluings)
    trip = np.zeros((2, 2, 2))
    for i in range(gluings):
        lm, s = sample_gluing(c, RngStream(seed, i))
        g = graph_of(lm)
        loop[i] = g.loop_mass() / two_n
        t11[i] = g.count(1, 1) / two_n
        root[i] = g.degrees[g.root] / two_n
        trip += triangle_triples(lm, g, 2)
    trip /= gluings
    orc = pd_oracle(seed=seed + 7)
    lm_mean = float(loop.mean())
    d11 = abs(float(t11.mean()) - orc["pair"][0, 0])
    ks_root = ks_statistic(root, lambda x: np.clip(x, 0.0, 1.0))
    dtrip = float(np.max(np.abs(trip - orc["triple"])))
    return [
        verdict("9.loop_mass_mean", lm_mean, [0.48, 0.52], 0.48 <= lm_mean <= 0.52),
        verdict("9.edge_11_vs_pd_oracle", d11, 0.02, d11 <= 0.02, oracle=float(orc["pair"][0, 0])),
        verdict("9.root_degree_ks_uniform", ks_root, 0.05, ks_root <= 0.05),
        verdict("9.triangle_triples_vs_pd_oracle", dtrip, 0.02, dtrip <= 0.02,
                empirical=trip.round(5).tolist(), oracle=orc["triple"].round(5).tolist()),
    ]


FAST = [check_counts, check_connectivity, check_glue_peel, check_modes]
FULL = FAST + [check_vertex_universality, check_euler_independence, check_diameter,
               check_closures_and_monitors, check_pd_universality]


def run_suite(suite: str = "fast", seed: int = 0, progress: Callable = None) -> List[Dict]:
    if suite not in ("fast", "full"):
        raise ValueError("suite must be 'fast' or 'full'")
    checks = FAST if suite == "fast" else FULL
    out = []
    for chk in checks:
        t = time.time()
        kwargs = {} if chk in (check_counts, check_connectivity) else {"seed": seed}
        if suite == "fast" and chk is check_modes:
            kwargs["runs"] = 20_000
        res = chk(**kwargs)
        for r in res:
            r["seconds"] = round(time.time() - t, 2)
            if progress:
                progress(r)
        out.extend(res)
    return out
