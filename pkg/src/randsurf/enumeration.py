"""Exhaustive oracles for tiny sizes, with exact rational probabilities."""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from fractions import Fraction
from typing import Callable, Dict, Hashable, Iterator, List, Optional

import numpy as np

from . import _kernels as K
from .combinatorics import double_factorial_odd
from .surface import Configuration, glue

MAX_PAIRING_HALF = 8
MAX_PERMUTATION_N = 4
MAX_UNICELLULAR_N = 7


class ExactDistribution:
    """Finite law with Fraction probabilities summing to exactly one."""

    def __init__(self, probs: Dict[Hashable, Fraction]):
        probs = {k: Fraction(v) for k, v in probs.items() if v != 0}
        if sum(probs.values()) != 1:
            raise ValueError("probabilities do not sum to 1")
        self.probs = dict(sorted(probs.items(), key=lambda kv: repr(kv[0])))

    @classmethod
    def from_counts(cls, counts: Dict[Hashable, int]) -> "ExactDistribution":
        total = sum(counts.values())
        return cls({k: Fraction(c, total) for k, c in counts.items()})

    def __getitem__(self, key) -> Fraction:
        return self.probs.get(key, Fraction(0))

    def __eq__(self, other) -> bool:
        return isinstance(other, ExactDistribution) and self.probs == other.probs

    def __repr__(self):
        return f"ExactDistribution({self.probs!r})"

    def support(self):
        return list(self.probs)

    def mean(self, f: Callable = lambda k: k) -> Fraction:
        return sum((p * f(k) for k, p in self.probs.items()), Fraction(0))

    def map(self, f: Callable) -> "ExactDistribution":
        out: Dict[Hashable, Fraction] = defaultdict(Fraction)
        for k, p in self.probs.items():
            out[f(k)] += p
        return ExactDistribution(out)

    def to_dict(self) -> dict:
        return {str(k): str(p) for k, p in self.probs.items()}


def iter_pairings(m: int) -> Iterator[np.ndarray]:
    """All fixed-point-free involutions of {0..m-1}: the smallest free label is
    matched with each other free label in turn."""
    alpha = np.full(m, -1, dtype=np.int64)

    def rec(free: List[int]):
        if not free:
            yield alpha.copy()
            return
        s = free[0]
        for j in range(1, len(free)):
            t = free[j]
            alpha[s] = t
            alpha[t] = s
            yield from rec(free[1:j] + free[j + 1:])
        alpha[s] = -1

    if m % 2:
        raise ValueError("odd number of sides")
    yield from rec(list(range(m)))


def enumerate_pairings(config: Configuration, visitor: Optional[Callable] = None) -> int:
    """Call ``visitor(alpha)`` once per pairing of the sides; return the count."""
    if config.half_total > MAX_PAIRING_HALF:
        raise ValueError(f"enumeration limited to |P| <= {MAX_PAIRING_HALF}")
    count = 0
    for alpha in iter_pairings(config.total_perimeter):
        count += 1
        if visitor is not None:
            visitor(alpha)
    return count


def exact_gluing_law(config: Configuration, key: Callable = lambda lm, s: s.key()) -> ExactDistribution:
    """Law of ``key(map, summary)`` under a uniform pairing."""
    counts: Dict[Hashable, int] = defaultdict(int)

    def visit(alpha):
        lm, s = glue(config, alpha)
        counts[key(lm, s)] += 1

    enumerate_pairings(config, visit)
    return ExactDistribution.from_counts(counts)


def enumerate_permutation_pairs(n: int) -> int:
    """Number of connected pairs (alpha, phi) in I_2n x S_2n."""
    if n < 1 or n > MAX_PERMUTATION_N:
        raise ValueError(f"enumeration limited to 1 <= n <= {MAX_PERMUTATION_N}")
    m = 2 * n
    invs = np.array(list(iter_pairings(m)), dtype=np.int64)
    perms = np.array(list(itertools.permutations(range(m))), dtype=np.int64)
    return int(K.connected_pairs_count(invs, perms))


def rooted_counts_by_enumeration(n: int) -> int:
    """c_n recovered from the connected pair count: count / (2n - 1)!."""
    total = enumerate_permutation_pairs(n)
    q, r = divmod(total, math.factorial(2 * n - 1))
    if r:
        raise ArithmeticError("connected count not divisible by (2n-1)!")
    return q


def exact_unicellular_vertex_law(n: int) -> ExactDistribution:
    if n < 1 or n > MAX_UNICELLULAR_N:
        raise ValueError(f"enumeration limited to 1 <= n <= {MAX_UNICELLULAR_N}")
    m = 2 * n
    phi = np.roll(np.arange(m, dtype=np.int64), -1)
    counts: Dict[int, int] = defaultdict(int)
    for alpha in iter_pairings(m):
        counts[int(K.count_composed_cycles(phi, alpha))] += 1
    return ExactDistribution.from_counts(counts)


def exact_peeling_law(config: Configuration, strategy_factory: Callable, key: Callable = lambda s: s.key()
                      ) -> ExactDistribution:
    """Exact law of the final summary of an on-the-fly exploration.

    The whole decision tree is walked: every strategy option with its
    probability and every partner among the other boundary sides.
    ``strategy_factory()`` must return a fresh strategy exposing
    ``options``/``commit``.
    """
    from .peeling import RedVertexStrategy, init_state, peel_step

    out: Dict[Hashable, Fraction] = defaultdict(Fraction)
    strat = strategy_factory()
    state = init_state(config)

    def rec(st, weight: Fraction):
        if st.finished:
            out[key(st.summary())] += weight
            return
        for d, p in strat.options(st):
            s1 = st.copy()
            if s1.red is None and isinstance(strat, RedVertexStrategy):
                s1.set_red(d)
            others = [int(x) for x in s1.boundary() if x != d]
            q = Fraction(1, len(others))
            for b in others:
                s2 = s1.copy()
                peel_step(s2, d, b)
                rec(s2, weight * p * q)

    rec(state, Fraction(1))
    return ExactDistribution(out)


def exact_presampled_law(config: Configuration, strategy_factory: Callable, key: Callable = lambda s: s.key()
                         ) -> ExactDistribution:
    """Exact law of the final summary of a presampled exploration: every pairing,
    and for each pairing every branch of the strategy's own randomness."""
    from .peeling import RedVertexStrategy, init_state, peel_step

    out: Dict[Hashable, Fraction] = defaultdict(Fraction)
    total = double_factorial_odd(config.half_total)
    strat = strategy_factory()

    def rec(st, alpha, weight):
        if st.finished:
            out[key(st.summary())] += weight
            return
        for d, p in strat.options(st):
            s1 = st.copy()
            if s1.red is None and isinstance(strat, RedVertexStrategy):
                s1.set_red(d)
            peel_step(s1, d, int(alpha[d]))
            rec(s1, alpha, weight * p)

    enumerate_pairings(config, lambda a: rec(init_state(config), a, Fraction(1, total)))
    return ExactDistribution(out)


def _partitions(m: int, largest: Optional[int] = None) -> Iterator[List[int]]:
    largest = m if largest is None else largest
    if m == 0:
        yield []
        return
    for k in range(min(m, largest), 0, -1):
        for rest in _partitions(m - k, k):
            yield [k] + rest


def exact_diameter_law(n: int) -> ExactDistribution:
    """Diameter bin law of the configuration model whose degrees are the cycle
    type of a uniform permutation of 2n elements.

    Cycle types are weighted by their class sizes; every leg pairing is visited.
    """
    from .configmodel import _bin, diameter
    from .surface import multigraph_from_legs

    if n < 1 or n > MAX_PERMUTATION_N:
        raise ValueError(f"enumeration limited to 1 <= n <= {MAX_PERMUTATION_N}")
    m = 2 * n
    probs: Dict[str, Fraction] = defaultdict(Fraction)
    for parts in _partitions(m):
        mult = defaultdict(int)
        for k in parts:
            mult[k] += 1
        size = math.factorial(m)
        for k, a in mult.items():
            size //= k ** a * math.factorial(a)
        weight = Fraction(size, math.factorial(m) * double_factorial_odd(n))
        owner = np.repeat(np.arange(len(parts)), parts)
        for alpha in iter_pairings(m):
            g = multigraph_from_legs(owner, alpha, np.arange(len(parts)))
            probs[_bin(diameter(g))] += weight
    return ExactDistribution(probs)
