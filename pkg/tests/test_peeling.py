import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randsurf.combinatorics import sample_pairing
from randsurf.enumeration import exact_gluing_law, exact_peeling_law, exact_presampled_law, iter_pairings
from randsurf.peeling import (KIND_NAMES, PeelStrategy, RedVertexStrategy, SurfaceState, closure_ratios,
                              closure_report, init_state, kind_code, monitors, peel_step, run,
                              strategy_min_hole, strategy_red_vertex, strategy_uniform, track_labels)
from randsurf.rng import RngStream
from randsurf.stats import chi_square
from randsurf.surface import Configuration, glue, involution_from_pairs

CREATES = {"merge-components": 0, "split-hole": 0, "genus-merge": 0, "strong-closure": 1, "weak-closure": 1,
           "loop-closure": 1, "bigon-closure": 2, "loop-loop-merge": 1}

configs = st.lists(st.integers(1, 8), min_size=1, max_size=10).map(
    lambda p: Configuration(tuple(p + [1] if sum(p) % 2 else p)))


def strategies(seed):
    return [strategy_min_hole(), strategy_uniform(seed), strategy_red_vertex(seed),
            strategy_red_vertex(seed, resample="vertex")]


def test_init_state_examples():
    s = init_state(Configuration((3, 5)))
    assert (s.H, s.boundary_size) == (2, 8)
    s = init_state(Configuration((1, 1)))
    assert (s.H, s.L) == (2, 2)
    s = init_state(Configuration((2,)))
    assert (s.H, s.B, s.X) == (1, 1, 0)
    s.check_invariants()


def test_peel_step_merge_components():
    s = init_state(Configuration((3, 5)))
    _, ev = peel_step(s, 0, 4)
    assert ev.kind == "merge-components" and ev.vertices_created == 0
    assert s.holes() and [len(h) for h in s.holes()] == [3 + 5 - 2]
    assert s.components == 1
    s.check_invariants()


def test_peel_step_strong_closure_adjacent():
    s = init_state(Configuration((5, 1)))
    _, ev = peel_step(s, 0, 1)  # partner immediately after
    assert ev.kind == "strong-closure" and ev.vertices_created == 1
    assert sorted(len(h) for h in s.holes()) == [1, 3] and s.X == 1
    s = init_state(Configuration((5, 1)))
    _, ev = peel_step(s, 1, 0)
    assert ev.kind == "weak-closure" and s.X == 1


def test_peel_step_bigon_and_loops():
    s = init_state(Configuration((2,)))
    _, ev = peel_step(s, 0, 1)
    assert ev.kind == "bigon-closure" and ev.vertices_created == 2 and s.H == 0 and s.X == 2
    s = init_state(Configuration((1, 1)))
    _, ev = peel_step(s, 0, 1)
    assert ev.kind == "loop-loop-merge" and ev.vertices_created == 1 and s.H == 0


def test_peel_step_split_and_genus():
    s = init_state(Configuration((6,)))
    _, ev = peel_step(s, 0, 3)
    assert ev.kind == "split-hole" and sorted(len(h) for h in s.holes()) == [2, 2]
    assert kind_code("plain-same-hole-split") == kind_code("split-hole")
    _, ev = peel_step(s, 1, 4)
    assert ev.kind == "genus-merge" and s.H == 1
    s.check_invariants()


def test_peel_step_errors():
    s = init_state(Configuration((4,)))
    with pytest.raises(ValueError):
        peel_step(s, 1, 1)
    peel_step(s, 0, 2)
    with pytest.raises(ValueError):
        peel_step(s, 0, 1)


def test_run_examples():
    log = run(Configuration((2,)), strategy_min_hole(), "presampled", 0)
    assert len(log) == 1 and log.event(1).kind == "bigon-closure" and log.summary.V == 2
    log = run(Configuration((1, 1)), strategy_uniform(0), "on-the-fly", 0)
    assert len(log) == 1 and log.event(1).kind == "loop-loop-merge" and log.summary.V == 1
    log = run(Configuration((1, 1)), strategy_red_vertex(0), "on-the-fly", 0)
    assert log.event(1).kind == "loop-closure"


@given(configs, st.integers(0, 10 ** 6), st.sampled_from(["presampled", "on-the-fly"]))
@settings(max_examples=150, deadline=None)
def test_trajectory_invariants(config, seed, mode):
    n = config.half_total
    for strat in strategies(seed):
        log = run(config, strat, mode, seed, track=1)
        assert len(log) == n
        H = log.H
        dH = np.diff(H)
        assert set(dH.tolist()) <= {-2, -1, 0, 1}
        for i, e in enumerate(log.iter_events(), start=1):
            assert e.vertices_created == CREATES[e.kind]
            assert e.pi >= 1
            if dH[i - 1] >= 0:
                assert e.partner_pi is None  # same hole
        assert np.all(np.diff(log.L) <= 2) and np.all(np.diff(log.L + log.B) <= 2)
        assert log.X[-1] == log.summary.V
        created = np.array([e.vertices_created for e in log.iter_events()])
        closing = log.steps_of("strong-closure", "weak-closure", "loop-closure", "bigon-closure", "loop-loop-merge")
        assert np.array_equal(np.nonzero(created >= 1)[0] + 1, closing)
        th = log.closure_times()
        assert np.all(np.diff(th) > 0)


@given(configs, st.integers(0, 10 ** 6))
@settings(max_examples=100, deadline=None)
def test_state_invariants_every_step(config, seed):
    gen = np.random.default_rng(seed)
    s = init_state(config)
    strat = strategy_red_vertex(seed)
    strat.place_initial(s)
    n = config.half_total
    s.check_invariants()
    while not s.finished:
        a, flag = strat.select(s)
        others = [int(x) for x in s.boundary() if x != a]
        peel_step(s, a, others[int(gen.integers(len(others)))], resampled=flag)
        s.check_invariants()
        assert s.boundary_size == 2 * n - 2 * s.step


@pytest.mark.parametrize("per", [(4,), (3, 3), (2, 2), (1, 1, 2)])
def test_glue_peel_equality_exhaustive(per):
    c = Configuration(per)
    for alpha in iter_pairings(c.total_perimeter):
        ref = glue(c, alpha)[1].key()
        for seed in range(3):
            for strat in strategies(seed):
                assert run(c, strat, "presampled", pairing=alpha).summary.key() == ref


def test_glue_peel_equality_fuzz():
    g = RngStream(20, 0).gen
    for i in range(2000):
        n = int(g.integers(1, 101))
        left, per = 2 * n, []
        while left:
            p = int(g.integers(1, min(left, 9) + 1))
            per.append(p)
            left -= p
        c = Configuration(tuple(per))
        alpha = sample_pairing(2 * n, g)
        ref = glue(c, alpha)[1].key()
        for strat in strategies(i)[:3]:
            assert run(c, strat, "presampled", pairing=alpha).summary.key() == ref


@pytest.mark.parametrize("per", [(4,), (3, 3), (2, 2), (1, 1, 2), (6,), (1, 2, 3), (1, 1, 1, 3)])
def test_mode_equivalence_exact(per):
    c = Configuration(per)
    ref = exact_gluing_law(c)
    for make in (strategy_min_hole, lambda: strategy_uniform(0), lambda: strategy_red_vertex(0),
                 lambda: strategy_red_vertex(0, "vertex")):
        assert exact_peeling_law(c, make) == ref
        assert exact_presampled_law(c, make) == ref


def test_custom_strategy_runs_through_generic_path():
    class LargestSide(PeelStrategy):
        name = "largest"

        def options(self, state):
            return [(int(state.boundary()[-1]), Fraction(1))]

    c = Configuration((3, 3, 4, 2))
    g = RngStream(21, 0).gen
    for _ in range(50):
        alpha = sample_pairing(12, g)
        assert run(c, LargestSide(), "presampled", pairing=alpha).summary.key() == glue(c, alpha)[1].key()
    assert exact_peeling_law(Configuration((3, 3)), LargestSide) == exact_gluing_law(Configuration((3, 3)))


def test_min_hole_choices():
    s = init_state(Configuration((5, 3)))
    assert s.min_hole_dart() == 5
    s = init_state(Configuration((3, 3)))
    assert s.min_hole_dart() == 0


def test_min_hole_tau_close_to_polygon_count():
    c = Configuration.triangles(3000)
    late = 0
    for i in range(1000):
        log = run(c, strategy_min_hole(), "on-the-fly", RngStream(22, i), stop_at_tau=True)
        assert log.tau >= c.count - 1
        late += log.tau >= 1.2 * c.count + 50
    assert late / 1000 <= 0.05


def test_uniform_selection_is_uniform():
    c = Configuration((3, 3, 4))
    s = init_state(c)
    strat = strategy_uniform(RngStream(23, 0))
    cnt = Counter(strat.select(s)[0] for _ in range(100_000))
    assert set(cnt) == set(range(10))
    assert chi_square([cnt[d] for d in range(10)], [0.1] * 10).p_value > 0.01


def _split_merge_law(perims):
    """One step of uniform peeling on holes ``perims``: the peeled side is
    uniform, its partner uniform among the S-1 others."""
    S = sum(perims)
    law = Counter()
    for idx, p in enumerate(perims):
        rest = perims[:idx] + perims[idx + 1:]
        w = Fraction(p, S) / (S - 1)
        # partner in the same hole at distance k+1 leaves parts k and p-2-k
        for k in range(p - 1):
            parts = [x for x in (k, p - 2 - k) if x > 0]
            law[tuple(sorted(rest + parts))] += w
        for j, q in enumerate(rest):
            others = rest[:j] + rest[j + 1:]
            merged = [p + q - 2] if p + q - 2 > 0 else []
            law[tuple(sorted(others + merged))] += w * q
    return law


@pytest.mark.parametrize("per", [(4,) * 10, (1, 2, 3, 4, 5, 6, 7, 12), (20, 20)])
def test_uniform_peeling_split_merge_spot_check(per):
    c = Configuration(per)
    law = _split_merge_law(list(per))
    assert sum(law.values()) == 1
    cnt = Counter()
    strat = strategy_uniform(RngStream(24, sum(per) + len(per)))
    gen = RngStream(25, len(per)).gen
    for _ in range(20_000):
        s = init_state(c)
        a, _ = strat.select(s)
        from randsurf import _peelcore as C
        b = int(C.uniform_partner(s.D, s.sc, a, gen.random()))
        peel_step(s, a, b)
        cnt[tuple(sorted(len(h) for h in s.holes()))] += 1
    keys = sorted(law)
    assert set(cnt) <= set(keys)
    assert chi_square([cnt[k] for k in keys], [float(law[k]) for k in keys]).p_value > 0.01


def test_uniform_peeling_split_merge_later_state():
    """Spot-check a transition from a state reached after a few steps (n = 20)."""
    c = Configuration((4,) * 10)
    base = init_state(c)
    for a, b in [(0, 4), (8, 13), (16, 2)]:
        peel_step(base, a, b)
    perims = sorted(len(h) for h in base.holes())
    law = _split_merge_law(perims)
    strat = strategy_uniform(RngStream(26, 0))
    gen = RngStream(26, 1).gen
    from randsurf import _peelcore as C
    cnt = Counter()
    for _ in range(20_000):
        s = base.copy()
        a, _ = strat.select(s)
        peel_step(s, a, int(C.uniform_partner(s.D, s.sc, a, gen.random())))
        cnt[tuple(sorted(len(h) for h in s.holes()))] += 1
    keys = sorted(law)
    assert chi_square([cnt[k] for k in keys], [float(law[k]) for k in keys]).p_value > 0.01


def test_red_initial_marker_uniform():
    c = Configuration((3, 3, 4))
    cnt = Counter(run(c, strategy_red_vertex(RngStream(27, i)), "on-the-fly", i).red0 for i in range(20_000))
    assert set(cnt) == set(range(10))
    assert chi_square([cnt[d] for d in range(10)], [0.1] * 10).p_value > 0.01


def test_red_strong_closure_frequency():
    n = 20
    c = Configuration.squares(n)
    hits = np.zeros(n)
    trials = np.zeros(n)
    for i in range(100_000):
        log = run(c, strategy_red_vertex(RngStream(28, i)), "on-the-fly", RngStream(29, i))
        not_loop = log.pi != 1
        strong = np.isin(log.kinds, [kind_code("strong-closure"), kind_code("bigon-closure")])
        trials += not_loop
        hits += strong & not_loop
    for i in range(n - 1):  # the last step is forced
        p = 1 / (2 * (n - i) - 1)
        se = math.sqrt(p * (1 - p) / trials[i])
        assert abs(hits[i] / trials[i] - p) <= 4.5 * se, i
    assert hits[n - 1] == trials[n - 1]


def test_loop_closure_needs_red_on_a_loop():
    g = RngStream(30, 0).gen
    for i in range(300):
        c = Configuration((1, 1, 1, 1, 2, 3, 3))
        log = run(c, strategy_red_vertex(RngStream(31, i)), "on-the-fly", g)
        for e in log.iter_events():
            if e.kind == "loop-closure":
                assert e.pi == 1 and e.partner_pi == 1
            if e.kind == "loop-loop-merge":
                raise AssertionError("under the red rule a loop pair is always a loop closure")


def test_red_resampling_only_after_closure():
    g = RngStream(32, 0).gen
    for i in range(200):
        log = run(Configuration.triangles(30), strategy_red_vertex(RngStream(33, i)), "on-the-fly", g)
        ev = list(log.iter_events())
        assert not ev[0].red_resampled
        for prev, cur in zip(ev, ev[1:]):
            closed_red = prev.kind in ("strong-closure", "bigon-closure", "loop-closure")
            assert cur.red_resampled == closed_red


def test_resample_rules_agree_statistically():
    c = Configuration((3, 3, 4, 2))
    a = Counter(run(c, strategy_red_vertex(RngStream(34, i)), "on-the-fly", RngStream(35, i))
                .summary.key() for i in range(5000))
    b = Counter(run(c, strategy_red_vertex(RngStream(34, i), "vertex"), "on-the-fly", RngStream(35, i))
                .summary.key() for i in range(5000))
    keys = sorted(set(a) | set(b))
    from scipy.stats import chi2_contingency
    table = np.array([[a[k] for k in keys], [b[k] for k in keys]])
    table = table[:, table.sum(axis=0) >= 10]
    assert chi2_contingency(table)[1] > 0.01


def test_closure_report_basics():
    log = run(Configuration.triangles(99), strategy_red_vertex(1), "on-the-fly", 2, track=2)
    rep = closure_report(log)
    assert rep["theta"][0] == 0
    assert all(a < b for a, b in zip(rep["theta"], rep["theta"][1:]))
    assert all(0 < r <= 1 for r in rep["ratios"])
    assert len(rep["sigma"]) == 4
    r = closure_ratios(log, 2)
    assert r[0] == pytest.approx(rep["ratios"][0])


def test_closure_ratios_missing_time_is_n():
    log = run(Configuration((2,)), strategy_red_vertex(0), "on-the-fly", 0)
    assert log.closure_times().tolist() == [1]
    assert closure_ratios(log, 3).tolist() == [1.0, 1.0, 1.0]


def test_track_labels_bigon():
    for seed in range(20):
        log = run(Configuration((2,)), strategy_red_vertex(seed), "on-the-fly", seed, track=1)
        assert len(set(log.label_vertices.tolist())) == 2
    s = init_state(Configuration((2,)))
    corners = track_labels(s, 1, 0)
    assert sorted(corners.tolist()) == [0, 1]
    with pytest.raises(ValueError):
        track_labels(init_state(Configuration((2,))), 2, 0)


def test_labels_sigma_and_swallow_consistency():
    for seed in range(200):
        log = run(Configuration.triangles(60), strategy_red_vertex(seed), "on-the-fly", seed + 1, track=3)
        for corner, sigma, sw in log.labels:
            if sigma >= 0:
                assert sw == -1 and sigma <= log.n
            else:
                assert sw >= 1
                assert log.event(int(sw)).vertices_created >= 1


def test_monitors_examples():
    log = run(Configuration((1, 1, 1, 1, 2, 2, 4)), strategy_uniform(3), "on-the-fly", 4)
    m = monitors(log)
    assert m["sup_L"] >= 4 and m["sup_B"] >= 2
    assert m["max_dL"] <= 2 and m["max_dLB"] <= 2
    assert m["peeled_loops"] == int(np.sum(log.pi == 1))


def test_state_copy_is_independent():
    s = init_state(Configuration((3, 3)))
    t = s.copy()
    peel_step(t, 0, 3)
    assert s.step == 0 and t.step == 1
    s.check_invariants()
    t.check_invariants()


def test_trajectory_csv():
    log = run(Configuration((4,)), strategy_min_hole(), "presampled", pairing=involution_from_pairs([(1, 2), (3, 4)], 4))
    lines = log.to_csv().strip().split("\n")
    assert lines[0] == "step,kind,peeled,partner,pi,H,L,B,X,red_resampled"
    assert lines[1].startswith("1,strong-closure,1,2,4,")
    assert len(lines) == 3
