"""Distances, tests and interval estimates used to turn limit laws into checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Sequence, Tuple, Union

import numpy as np
from scipy import stats as sps

Pmf = Union[Callable[[int], float], Mapping[int, float]]


@dataclass(frozen=True)
class EmpiricalSample:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.size == 0:
            raise ValueError("empty sample")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return int(self.values.size)


def _values(sample) -> np.ndarray:
    v = sample.values if isinstance(sample, EmpiricalSample) else np.asarray(sample)
    if v.size == 0:
        raise ValueError("empty sample")
    return v


def tv_empirical_vs_pmf(sample, pmf: Pmf) -> float:
    """Total variation between the empirical law of integer data and a pmf.

    Mass the pmf puts on values never observed counts fully: it is taken as
    one minus the pmf mass on the observed values.
    """
    v = _values(sample).astype(np.int64)
    keys, counts = np.unique(v, return_counts=True)
    freq = counts / v.size
    get = pmf.get if isinstance(pmf, Mapping) else None
    probs = np.array([(get(int(k), 0.0) if get else pmf(int(k))) for k in keys], dtype=float)
    unobserved = max(0.0, 1.0 - float(probs.sum()))
    return float(min(1.0, 0.5 * (np.abs(freq - probs).sum() + unobserved)))


def ks_statistic(sample, cdf: Callable) -> float:
    v = np.asarray(_values(sample), dtype=float)
    return float(sps.kstest(v, cdf).statistic)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    bins: Tuple[Tuple[int, ...], ...]


def chi_square(observed: Sequence[float], expected_probs: Sequence[float], min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson test; adjacent cells are pooled (from both tails inwards) until each
    expected count reaches ``min_expected``.  Any probability mass missing from
    ``expected_probs`` is added to the last cell."""
    obs = np.asarray(observed, dtype=float)
    p = np.asarray(expected_probs, dtype=float)
    if obs.shape != p.shape or obs.ndim != 1:
        raise ValueError("observed and expected must be 1-d of equal length")
    N = obs.sum()
    if N <= 0:
        raise ValueError("no observations")
    p = p.copy()
    p[-1] += max(0.0, 1.0 - p.sum())
    exp = p * N
    # pool from the left tail, then from the right tail
    groups = [[i] for i in range(len(exp))]
    e = list(exp)
    o = list(obs)

    def pool(i, j):
        groups[i] += groups[j]
        e[i] += e[j]
        o[i] += o[j]
        del groups[j], e[j], o[j]

    while len(e) > 1 and e[0] < min_expected:
        pool(0, 1)
    while len(e) > 1 and e[-1] < min_expected:
        pool(len(e) - 2, len(e) - 1)
    i = 1
    while i < len(e) - 1:
        if e[i] < min_expected:
            pool(i, i + 1)
        else:
            i += 1
    if len(e) < 2:
        raise ValueError("degenerate binning: fewer than two cells")
    e_arr = np.array(e)
    o_arr = np.array(o)
    stat = float(((o_arr - e_arr) ** 2 / e_arr).sum())
    dof = len(e) - 1
    return ChiSquareResult(stat, dof, float(sps.chi2.sf(stat, dof)), tuple(tuple(g) for g in groups))


def wilson_ci(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials")
    z = sps.norm.ppf(0.5 + confidence / 2)
    ph = successes / trials
    den = 1 + z * z / trials
    center = (ph + z * z / (2 * trials)) / den
    half = z * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials)) / den
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return float(lo), float(hi)


def mean_ci(values, confidence: float = 0.95) -> Tuple[float, float, float]:
    v = np.asarray(values, dtype=float)
    m = float(v.mean())
    if v.size < 2:
        return m, m, m
    half = sps.norm.ppf(0.5 + confidence / 2) * float(v.std(ddof=1)) / math.sqrt(v.size)
    return m, m - half, m + half


def pd_edge_moments(graphs, k_max: int) -> dict:
    """Normalised edge-count tables [i, j] / 2n averaged over graphs sharing n.

    Returns means and 95% half-widths of the k_max x k_max tables, the loop
    mass sum_i [i, i] / 2n and the degree fractions deg(v_i) / 2n.
    """
    graphs = list(graphs)
    if not graphs:
        raise ValueError("no graphs")
    E = graphs[0].num_edges
    if any(g.num_edges != E for g in graphs):
        raise ValueError("graphs do not share the same number of edges")
    two_n = 2.0 * E
    tabs = np.stack([g.table(k_max)[:k_max, :k_max] if g.num_vertices >= k_max else
                     np.pad(g.table(), ((0, k_max - g.num_vertices), (0, k_max - g.num_vertices)))
                     for g in graphs]) / two_n
    loop = np.array([g.loop_mass() for g in graphs]) / two_n
    degs = np.stack([np.pad(g.degrees[:k_max], (0, max(0, k_max - g.num_vertices))) for g in graphs]) / two_n
    z = 1.96
    sd = tabs.std(axis=0, ddof=1) if len(graphs) > 1 else np.zeros_like(tabs[0])
    return {
        "mean": tabs.mean(axis=0),
        "half_width": z * sd / math.sqrt(len(graphs)),
        "loop_mass": float(loop.mean()),
        "loop_mass_ci": mean_ci(loop)[1:],
        "degree_fraction": degs.mean(axis=0),
    }


def verdict(check: str, statistic, threshold, passed: bool, **extra) -> Dict:
    out = {"check": check, "statistic": statistic, "threshold": threshold, "pass": bool(passed)}
    out.update(extra)
    return out
