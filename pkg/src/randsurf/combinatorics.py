"""Exact integer combinatorics and the random primitives used everywhere else.

Pairings are returned as 0-based partner arrays (``inv[d]`` is the partner of
side ``d``); add one to get the 1-based labels used in serialized output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple

import numpy as np

from ._kernels import pairing_from_uniforms
from .rng import as_generator


def double_factorial_odd(n: int) -> int:
    """Return (2n-1)!! = 1*3*...*(2n-1) as an exact integer."""
    if n < 0:
        raise ValueError("n must be non-negative")
    out = 1
    for k in range(3, 2 * n, 2):
        out *= k
    return out


def rooted_map_counts(N: int) -> List[int]:
    """Counts c_1..c_N of rooted maps with n edges, possibly of any genus.

    c_n = 2n xi_n - sum_{l<n} c_l xi_{n-l}  with  xi_k = (2k-1)!!.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    xi = [1]
    for k in range(1, N + 1):
        xi.append(xi[-1] * (2 * k - 1))
    c = [0] * (N + 1)
    for n in range(1, N + 1):
        s = 2 * n * xi[n]
        for l in range(1, n):
            s -= c[l] * xi[n - l]
        c[n] = s
    return c[1:]


def connected_pair_fraction(n: int) -> Fraction:
    """Exact fraction of pairs (alpha, phi) in I_2n x S_2n that are transitive."""
    c = rooted_map_counts(n)[-1]
    return Fraction(c, 2 * n * double_factorial_odd(n))


# ---------------------------------------------------------------- cycle types

@dataclass(frozen=True)
class CyclePartition:
    parts: Tuple[int, ...]  # decreasing
    total: int

    def __post_init__(self):
        if any(p < 1 for p in self.parts):
            raise ValueError("parts must be positive")
        if sum(self.parts) != self.total:
            raise ValueError("parts do not sum to total")

    def __len__(self):
        return len(self.parts)

    def count(self, size: int) -> int:
        return sum(1 for p in self.parts if p == size)


def sample_cycle_type(m: int, rng) -> CyclePartition:
    """Cycle type of a uniform permutation of S_m.

    The cycle through a fixed point of a uniform permutation of m' points has
    uniform length on {1..m'} and the rest is uniform on the remaining points,
    so parts can be peeled off one at a time.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    gen = as_generator(rng)
    parts = []
    left = m
    while left > 0:
        p = int(gen.integers(1, left + 1))
        parts.append(p)
        left -= p
    parts.sort(reverse=True)
    return CyclePartition(tuple(parts), m)


# ---------------------------------------------------------------- pairings

def sample_pairing(m: int, rng) -> np.ndarray:
    """Uniform fixed-point-free involution of {0..m-1} as a partner array."""
    if m < 2 or m % 2:
        raise ValueError("m must be a positive even integer")
    gen = as_generator(rng)
    u = gen.random(m // 2)
    return pairing_from_uniforms(m, u)


# ---------------------------------------------------------------- PD(1)

@dataclass(frozen=True)
class StickPartition:
    sticks: np.ndarray  # decreasing
    residual_mass: float

    def __post_init__(self):
        s = self.sticks
        if s.size and (np.any(s <= 0) or np.any(np.diff(s) > 0)):
            raise ValueError("sticks must be positive and non-increasing")
        if abs(float(s.sum()) + self.residual_mass - 1.0) > 1e-12:
            raise ValueError("stick mass is not conserved")


def _break_sticks(gen: np.random.Generator, delta: float) -> Tuple[np.ndarray, float]:
    out = []
    rest = 1.0
    while rest >= delta:
        u = gen.random()
        piece = u * rest
        if piece > 0.0:
            out.append(piece)
        rest -= piece
    arr = np.array(out, dtype=np.float64)
    # recompute the residual from the pieces so the mass identity is exact-ish
    return arr, max(0.0, 1.0 - float(arr.sum()))


def sample_pd1(rng, delta: float = 1e-6) -> StickPartition:
    """Stick-breaking draw of PD(1), truncated once the residual drops below delta."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    gen = as_generator(rng)
    arr, rest = _break_sticks(gen, delta)
    arr = np.sort(arr)[::-1].copy()
    return StickPartition(arr, rest)


def sample_pd1_batch(size: int, rng, delta: float = 1e-6) -> np.ndarray:
    """Many truncated PD(1) draws at once, as rows of a (size, K) matrix.

    Each row is sorted decreasingly and padded with zeros; row sums are at
    least ``1 - delta``.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    gen = as_generator(rng)
    # residual after k breaks is prod(1-U_i); log of it is a sum of -Exp(1),
    # so ~ log(1/delta) + a few sqrt's of that many breaks are needed.
    lam = math.log(1.0 / delta)
    cols = int(lam + 8.0 * math.sqrt(lam) + 16)
    while True:
        u = gen.random((size, cols))
        rest = np.cumprod(1.0 - u, axis=1)
        if np.all(rest[:, -1] < delta):
            break
        cols *= 2
    before = np.ones_like(rest)
    before[:, 1:] = rest[:, :-1]
    sticks = u * before
    # drop the pieces broken after the residual first fell below delta
    sticks[before < delta] = 0.0
    sticks.sort(axis=1)
    sticks = sticks[:, ::-1]
    keep = int(np.max(np.count_nonzero(sticks, axis=1)))
    return np.ascontiguousarray(sticks[:, :keep])


# ---------------------------------------------------------------- Poisson laws

def _log_sinh(lam: float) -> float:
    return lam + math.log1p(-math.exp(-2.0 * lam)) - math.log(2.0)


def _log_cosh(lam: float) -> float:
    return lam + math.log1p(math.exp(-2.0 * lam)) - math.log(2.0)


def poisson_parity_pmf(lam: float, parity: str, k: int) -> float:
    """Poisson(lam) conditioned on being odd or even, evaluated at k."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if parity not in ("odd", "even"):
        raise ValueError("parity must be 'odd' or 'even'")
    if k < 0 or (k % 2 == 1) != (parity == "odd"):
        return 0.0
    norm = _log_sinh(lam) if parity == "odd" else _log_cosh(lam)
    return math.exp(k * math.log(lam) - math.lgamma(k + 1) - norm)


def poisson_pmf(lam: float, k: int) -> float:
    if k < 0:
        return 0.0
    if lam == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(lam) - math.lgamma(k + 1) - lam)
