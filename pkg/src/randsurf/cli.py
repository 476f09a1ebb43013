"""Command-line front end.

    randsurf [--seed S] [--replicas R] [--format json|csv] [--out PATH] <command> ...

Configuration specs: ``triangles:n``, ``squares:n``, ``cycle-type:n`` (a fresh
uniform cycle type of S_2n per replica), ``unicellular:n`` (one 2n-gon),
``list:p1,p2,...`` and ``file:path`` (one perimeter per line).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from collections import Counter
from typing import Callable, Dict, List, Optional

import numpy as np

from . import _kernels as K
from .combinatorics import poisson_parity_pmf, rooted_map_counts
from .configmodel import LimitModelParams, diameter_experiment, xi_limit_model
from .enumeration import exact_gluing_law, exact_unicellular_vertex_law, MAX_UNICELLULAR_N
from .peeling import (closure_ratios, closure_report, monitors, run, strategy_min_hole, strategy_red_vertex,
                      strategy_uniform)
from .rng import RngStream
from .stats import ks_statistic, mean_ci, tv_empirical_vs_pmf, wilson_ci
from .surface import Configuration, goodness_report, graph_of, sample_gluing, sample_uniform_map
from .verify import beta_1_half_cdf, run_suite


# ---------------------------------------------------------------- config specs

class ConfigSpec:
    def __init__(self, text: str):
        self.text = text
        kind, _, arg = text.partition(":")
        if not arg:
            raise argparse.ArgumentTypeError(f"bad configuration spec {text!r}")
        self.kind = kind
        self.fixed: Optional[Configuration] = None
        try:
            if kind == "triangles":
                self.fixed = Configuration.triangles(int(arg))
            elif kind == "squares":
                self.fixed = Configuration.squares(int(arg))
            elif kind == "unicellular":
                self.fixed = Configuration.unicellular(int(arg))
            elif kind == "list":
                self.fixed = Configuration(tuple(int(x) for x in arg.split(",") if x.strip()))
            elif kind == "file":
                with open(arg) as fh:
                    self.fixed = Configuration(tuple(int(line) for line in fh if line.strip()))
            elif kind == "cycle-type":
                self.n = int(arg)
                if self.n < 1:
                    raise ValueError("n must be positive")
            else:
                raise ValueError(f"unknown family {kind!r}")
        except (ValueError, OSError) as exc:
            raise argparse.ArgumentTypeError(f"{text}: {exc}") from None

    @property
    def random(self) -> bool:
        return self.fixed is None

    def resolve(self, rng) -> Configuration:
        if self.fixed is not None:
            return self.fixed
        return Configuration.cycle_type(self.n, rng)

    def __str__(self):
        return self.text


# ---------------------------------------------------------------- helpers

def _result(command: str, params: dict, args, estimates: dict, t0: float) -> dict:
    return {
        "command": command,
        "params": params,
        "seed": args.seed,
        "replicas": args.replicas,
        "estimates": estimates,
        "wall_ms": round(1000 * (time.time() - t0), 1),
    }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isinf(x):
            return "inf"
        if math.isnan(x):
            return None
        return x
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _emit(args, payload: dict, rows: Optional[List[dict]] = None) -> None:
    if args.format == "csv":
        if not rows:
            raise SystemExit("this command has no tabular output; use --format json")
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(_jsonable(r))
        text = buf.getvalue()
    else:
        text = json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _mci(values) -> dict:
    m, lo, hi = mean_ci(values)
    return {"mean": m, "ci_95": [lo, hi]}


def _graph_stats(g, two_n: float) -> dict:
    top = (g.degrees[:3] / two_n).tolist()
    top += [0.0] * (3 - len(top))
    return {
        "loop_mass": g.loop_mass() / two_n,
        "top1": top[0],
        "top2": top[1],
        "top3": top[2],
        "deg1": int(np.sum(g.degrees == 1)),
        "deg2": int(np.sum(g.degrees == 2)),
        "deg3": int(np.sum(g.degrees == 3)),
        "root_degree": g.degrees[g.root] / two_n,
    }


def _parity_mixture_tv(V: np.ndarray, parities: List[str], lam: float) -> float:
    frac_odd = sum(p == "odd" for p in parities) / len(parities)

    def pmf(k):
        return frac_odd * poisson_parity_pmf(lam, "odd", k) + (1 - frac_odd) * poisson_parity_pmf(lam, "even", k)

    return tv_empirical_vs_pmf(V, pmf)


# ---------------------------------------------------------------- commands

def cmd_sample(args) -> int:
    t0 = time.time()
    rows = []
    parities = []
    for i in range(args.replicas):
        gen = RngStream(args.seed, i).gen
        c = args.config.resolve(gen)
        lm, s = sample_gluing(c, gen)
        g = graph_of(lm)
        par = "odd" if (c.half_total + c.count) % 2 else "even"
        parities.append(par)
        row = {"replica": i, "V": s.V, "F": s.F, "E": s.E, "genus": s.genus, "components": s.components,
               "connected": s.connected, "parity": par}
        row.update(_graph_stats(g, 2.0 * c.half_total))
        if args.config.random:
            gr = goodness_report(c)
            row.update({"L": gr["L"], "B": gr["B"], "good": gr["L_over_sqrt_n"] < 1 and gr["B_over_n"] < 1})
        rows.append(row)
    V = np.array([r["V"] for r in rows])
    conn = sum(r["connected"] for r in rows)
    n = rows[0]["E"] if rows else 0
    est = {
        "connected_fraction": conn / args.replicas,
        "connected_ci_95": wilson_ci(conn, args.replicas),
        "V_mean": _mci(V),
        "V_histogram": dict(sorted(Counter(V.tolist()).items())),
        "tv_V_vs_parity_poisson_log_n": _parity_mixture_tv(V, parities, math.log(n)) if n > 1 else None,
        "genus_mean": float(np.mean([r["genus"] for r in rows])),
        "loop_mass_mean": _mci([r["loop_mass"] for r in rows]),
    }
    if args.config.random:
        est["not_good_replicas"] = [r["replica"] for r in rows if not r["good"]]
    payload = _result("sample", {"config": str(args.config)}, args, est, t0)
    if args.format == "json" and args.replicas <= 100:
        payload["per_replica"] = rows
    _emit(args, payload, rows)
    return 0


def _make_strategy(name: str, rng, resample: str):
    if name == "min-hole":
        return strategy_min_hole()
    if name == "uniform":
        return strategy_uniform(rng)
    return strategy_red_vertex(rng, resample)


def cmd_peel(args) -> int:
    t0 = time.time()
    logs_info = []
    ratios = []
    sigmas = []
    rows_csv = None
    for i in range(args.replicas):
        root = RngStream(args.seed, i)
        c = args.config.resolve(root.child(0).gen)
        strat = _make_strategy(args.algorithm, root.child(1), args.resample)
        log = run(c, strat, args.mode, root.child(2), track=args.track, label_rng=root.child(3).gen)
        tau = log.tau
        info = {
            "replica": i,
            "n": log.n,
            "steps": len(log),
            "summary": log.summary.to_dict(),
            "tau": tau,
            "X_tau": log.X_at(tau) if tau != math.inf else None,
            "polygons": c.count,
            "monitors": monitors(log),
        }
        if args.algorithm == "red-vertex":
            rep = closure_report(log)
            info["closure"] = {"theta": rep["theta"][:11], "closures": len(rep["closures"]),
                               "sigma": rep["sigma"], "ratios": rep["ratios"][:10]}
            ratios.append(closure_ratios(log, 2))
            sigmas.extend(s / log.n if s != math.inf else math.inf for s in log.sigma())
        logs_info.append(info)
        if i == 0 and args.trajectory:
            with open(args.trajectory, "w") as fh:
                fh.write(log.to_csv())
        if i == 0:
            rows_csv = [dict(zip(["step", "kind", "peeled", "partner", "pi", "H", "L", "B", "X", "red_resampled"],
                                 line.split(","))) for line in log.to_csv().strip().split("\n")[1:]]
    est = {}
    taus = [x["tau"] for x in logs_info]
    est["tau_over_polygons"] = [t / x["polygons"] if t != math.inf and x["polygons"] else None
                                for t, x in zip(taus[:20], logs_info[:20])]
    est["final_V"] = _mci([x["summary"]["V"] for x in logs_info])
    if ratios:
        r = np.array(ratios)
        est["ks_ratio1_beta_1_half"] = ks_statistic(r[:, 0], beta_1_half_cdf)
        est["ks_ratio2_beta_1_half"] = ks_statistic(r[:, 1], beta_1_half_cdf)
        if len(r) > 2:
            est["corr_ratio1_ratio2"] = float(np.corrcoef(r[:, 0], r[:, 1])[0, 1])
        if sigmas:
            s = np.array(sigmas, dtype=float)
            est["sigma_swallowed_fraction"] = float(np.mean(np.isinf(s)))
            est["ks_sigma_beta_1_half"] = ks_statistic(np.minimum(s, 1.0), beta_1_half_cdf)
    params = {"config": str(args.config), "algorithm": args.algorithm, "mode": args.mode, "track": args.track}
    payload = _result("peel", params, args, est, t0)
    payload["runs"] = logs_info[:100]
    _emit(args, payload, rows_csv)
    return 0


def cmd_diameter(args) -> int:
    t0 = time.time()
    d = diameter_experiment(args.n, args.replicas, args.seed)
    est = {k: d[k] for k in ("histogram", "counts", "ci", "p_2_or_3", "p_2_or_3_ci", "xi_hat", "ci_95")}
    _emit(args, _result("diameter", {"n": args.n}, args, est, t0),
          [{"diameter": k, "count": v, "fraction": d["histogram"][k]} for k, v in d["counts"].items()])
    return 0


def cmd_xi(args) -> int:
    t0 = time.time()
    p = LimitModelParams(A=args.A, delta=args.delta, replicas=args.replicas, seed=args.seed)
    r = xi_limit_model(p, sensitivity=args.sensitivity)
    est = {"xi_hat": r["xi_hat"], "ci_95": r["ci_95"], "sensitivity": r["sensitivity"]}
    if args.compare_n:
        d = diameter_experiment(args.compare_n, args.compare_replicas, args.seed)
        est["finite_n"] = {"n": args.compare_n, "replicas": args.compare_replicas, "xi_hat": d["xi_hat"],
                           "ci_95": d["ci_95"]}
        est["gap"] = abs(d["xi_hat"] - r["xi_hat"])
    _emit(args, _result("xi", r["params"], args, est, t0),
          [{"A": s["A"], "estimate": s["estimate"]} for s in r["sensitivity"]])
    return 0


def cmd_counts(args) -> int:
    t0 = time.time()
    from .combinatorics import connected_pair_fraction

    c = rooted_map_counts(args.N)
    rows = [{"n": i + 1, "c_n": str(v), "connected_fraction": str(connected_pair_fraction(i + 1))}
            for i, v in enumerate(c)]
    _emit(args, _result("counts", {"N": args.N}, args, {"c": [str(v) for v in c], "table": rows}, t0), rows)
    return 0


def cmd_enumerate(args) -> int:
    t0 = time.time()
    spec = args.config
    if spec.random:
        raise SystemExit("enumerate needs a fixed configuration")
    c = spec.fixed
    est = {}
    if spec.kind == "unicellular" and c.half_total <= MAX_UNICELLULAR_N:
        law = exact_unicellular_vertex_law(c.half_total)
        est["vertex_law"] = law.to_dict()
        est["parity_support_ok"] = all((k - c.half_total - 1) % 2 == 0 for k in law.support())
    else:
        law = exact_gluing_law(c)
        est["summary_law"] = {str(k): str(p) for k, p in law.probs.items()}
        vlaw = law.map(lambda key: sum(part[0] for part in key))
        est["vertex_law"] = vlaw.to_dict()
        est["connected_probability"] = str(sum(p for k, p in law.probs.items() if len(k) == 1))
    rows = [{"V": k, "probability": p} for k, p in est["vertex_law"].items()]
    _emit(args, _result("enumerate", {"config": str(spec)}, args, est, t0), rows)
    return 0


def cmd_verify(args) -> int:
    t0 = time.time()

    def progress(r):
        print(f"[{'PASS' if r['pass'] else 'FAIL'}] {r['check']}", file=sys.stderr, flush=True)

    res = run_suite(args.suite, args.seed, progress)
    ok = all(r["pass"] for r in res)
    payload = _result("verify", {"suite": args.suite}, args, {"all_pass": ok, "verdicts": res}, t0)
    _emit(args, payload, [{"check": r["check"], "pass": r["pass"], "statistic": json.dumps(_jsonable(r["statistic"])),
                           "threshold": json.dumps(_jsonable(r["threshold"]))} for r in res])
    return 0 if ok else 1


def cmd_probe(args) -> int:
    """Polygon gluings against uniform maps with matching vertex parity, statistic by statistic."""
    from scipy import stats as sps

    t0 = time.time()
    n = args.n
    spec = args.config
    left, right = [], []
    for i in range(args.replicas):
        root = RngStream(args.seed, i)
        c = spec.resolve(root.child(0).gen)
        lm, s = sample_gluing(c, root.child(1).gen)
        g = graph_of(lm)
        left.append({"V": s.V, **_graph_stats(g, 2.0 * c.half_total)})
        gen = root.child(2).gen
        if args.against == "self":
            c2 = spec.resolve(gen)
            lm2, s2 = sample_gluing(c2, gen)
            right.append({"V": s2.V, **_graph_stats(graph_of(lm2), 2.0 * c2.half_total)})
            continue
        parity = (c.half_total + c.count) % 2
        while True:
            um = sample_uniform_map(n, gen)
            if K.count_cycles(um.sigma) % 2 == parity:
                break
        gu = graph_of(um)
        right.append({"V": gu.num_vertices, **_graph_stats(gu, 2.0 * n)})
    report = {}
    for key in ("V", "loop_mass", "top1", "top2", "top3", "deg1", "deg2", "deg3"):
        a = np.array([r[key] for r in left], dtype=float)
        b = np.array([r[key] for r in right], dtype=float)
        diff = float(a.mean() - b.mean())
        se = math.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b)) if len(a) > 1 else float("nan")
        entry = {"left_mean": float(a.mean()), "right_mean": float(b.mean()), "gap": diff,
                 "gap_ci_95": [diff - 1.96 * se, diff + 1.96 * se]}
        if key in ("V", "deg1", "deg2", "deg3"):
            ka, ca = np.unique(a, return_counts=True)
            kb, cb = np.unique(b, return_counts=True)
            pa = dict(zip(ka.tolist(), (ca / len(a)).tolist()))
            pb = dict(zip(kb.tolist(), (cb / len(b)).tolist()))
            entry["tv"] = 0.5 * sum(abs(pa.get(k, 0) - pb.get(k, 0)) for k in set(pa) | set(pb))
        else:
            entry["ks"] = float(sps.ks_2samp(a, b).statistic)
        report[key] = entry
    lam = math.log(n)
    report["V"]["left_tv_vs_parity_poisson"] = _parity_mixture_tv(
        np.array([r["V"] for r in left]), ["odd" if r["V"] % 2 else "even" for r in left], lam)
    report["V"]["right_tv_vs_parity_poisson"] = _parity_mixture_tv(
        np.array([r["V"] for r in right]), ["odd" if r["V"] % 2 else "even" for r in right], lam)
    _emit(args, _result("probe-conjecture", {"config": str(spec), "n": n, "against": args.against}, args, report, t0),
          [{"statistic": k, **{kk: vv for kk, vv in v.items() if kk != "gap_ci_95"}} for k, v in report.items()])
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--replicas", type=int, help="number of replicas")
    common.add_argument("--format", choices=("json", "csv"), help="output format (default json)")
    common.add_argument("--out", help="write output to this file instead of stdout")

    p = argparse.ArgumentParser(prog="randsurf", description=__doc__.split("\n\n")[0],
                                formatter_class=argparse.RawDescriptionHelpFormatter, parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", parents=[common], help="glue configurations and summarise the surfaces")
    s.add_argument("config", type=ConfigSpec)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("peel", parents=[common], help="run a peeling exploration")
    s.add_argument("config", type=ConfigSpec)
    s.add_argument("--algorithm", choices=("min-hole", "red-vertex", "uniform"), default="red-vertex")
    s.add_argument("--mode", choices=("presampled", "on-the-fly"), default="on-the-fly")
    s.add_argument("--track", type=int, default=0, help="follow the corners of k random sides")
    s.add_argument("--resample", choices=("corner", "vertex"), default="corner")
    s.add_argument("--trajectory", help="CSV file for the first replica's trajectory")
    s.set_defaults(func=cmd_peel)

    s = sub.add_parser("diameter", parents=[common], help="diameter law of the configuration model")
    s.add_argument("--n", type=int, default=10_000)
    s.set_defaults(func=cmd_diameter, replicas_default=2000)

    s = sub.add_parser("xi", parents=[common], help="limit-model estimate of P(diameter = 3)")
    s.add_argument("--A", type=int, default=30)
    s.add_argument("--delta", type=float, default=1e-6)
    s.add_argument("--sensitivity", type=lambda t: [int(x) for x in t.split(",")], default=[5, 10, 20, 40])
    s.add_argument("--compare-n", type=int, default=0, help="also run the finite-n estimator at this n")
    s.add_argument("--compare-replicas", type=int, default=2000)
    s.set_defaults(func=cmd_xi, replicas_default=100_000)

    s = sub.add_parser("counts", parents=[common], help="rooted map counts from the recursion")
    s.add_argument("--N", type=int, default=10)
    s.set_defaults(func=cmd_counts)

    s = sub.add_parser("enumerate", parents=[common], help="exact laws by exhaustive enumeration")
    s.add_argument("config", type=ConfigSpec)
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    s.add_argument("--suite", choices=("fast", "full"), default="fast")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("probe-conjecture", parents=[common], help="compare polygon gluings with parity-matched uniform maps")
    s.add_argument("config", type=ConfigSpec)
    s.add_argument("--n", type=int, required=True, help="edge count of the uniform maps")
    s.add_argument("--against", choices=("uniform", "self"), default="uniform",
                   help="compare with parity-matched uniform maps, or with fresh draws of the same spec")
    s.set_defaults(func=cmd_probe, replicas_default=200)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if not hasattr(args, "seed"):
        args.seed = 0
    if not hasattr(args, "replicas"):
        args.replicas = getattr(args, "replicas_default", 1)
    if not hasattr(args, "format"):
        args.format = "json"
    if not hasattr(args, "out"):
        args.out = None
    if args.seed < 0 or args.seed >= 1 << 64:
        raise SystemExit("--seed must be an unsigned 64-bit integer")
    if args.replicas < 1:
        raise SystemExit("--replicas must be positive")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
