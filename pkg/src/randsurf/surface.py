"""Static gluings: configurations, permutation encoding, Euler data, graphs.

Side labels are 0-based in memory and 1-based in every serialized form.
The vertex permutation is sigma = phi o alpha, i.e. ``sigma[d] = phi[alpha[d]]``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels as K
from .combinatorics import sample_cycle_type, sample_pairing
from .rng import as_generator


# ---------------------------------------------------------------- configuration

@dataclass(frozen=True)
class Configuration:
    perimeters: Tuple[int, ...]

    def __post_init__(self):
        per = tuple(int(p) for p in self.perimeters)
        object.__setattr__(self, "perimeters", per)
        if not per:
            raise ValueError("a configuration needs at least one polygon")
        if any(p < 1 for p in per):
            raise ValueError("perimeters must be positive")
        if sum(per) % 2:
            raise ValueError("total perimeter must be even")

    @property
    def total_perimeter(self) -> int:
        return sum(self.perimeters)

    @property
    def half_total(self) -> int:
        return self.total_perimeter // 2

    @property
    def count(self) -> int:
        return len(self.perimeters)

    @property
    def loops(self) -> int:
        return sum(1 for p in self.perimeters if p == 1)

    @property
    def bigons(self) -> int:
        return sum(1 for p in self.perimeters if p == 2)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.perimeters, dtype=np.int64)

    @classmethod
    def triangles(cls, n: int) -> "Configuration":
        """2n/3 triangles, so n edges after gluing (n must be divisible by 3)."""
        if n < 3 or n % 3:
            raise ValueError("triangles need n divisible by 3")
        return cls((3,) * (2 * n // 3))

    @classmethod
    def squares(cls, n: int) -> "Configuration":
        if n < 2 or n % 2:
            raise ValueError("squares need an even n")
        return cls((4,) * (n // 2))

    @classmethod
    def unicellular(cls, n: int) -> "Configuration":
        return cls((2 * n,))

    @classmethod
    def cycle_type(cls, n: int, rng) -> "Configuration":
        """Perimeters given by the cycle type of a uniform permutation of S_2n."""
        return cls(sample_cycle_type(2 * n, rng).parts)


def goodness_report(config: Configuration) -> dict:
    n = config.half_total
    L, B = config.loops, config.bigons
    return {
        "L": L,
        "B": B,
        "count": config.count,
        "half_total": n,
        "L_over_sqrt_n": L / math.sqrt(n),
        "B_over_n": B / n,
    }


# ---------------------------------------------------------------- maps

def canonical_face_permutation(config) -> np.ndarray:
    """One cycle per polygon, on consecutive labels in polygon order.

    Also accepts a bare sequence of perimeters (parity is not needed here).
    """
    if isinstance(config, Configuration):
        per = config.as_array()
    else:
        per = np.asarray(config, dtype=np.int64)
        if per.ndim != 1 or per.size == 0 or np.any(per < 1):
            raise ValueError("perimeters must be a non-empty list of positive integers")
    m = int(per.sum())
    phi = np.arange(1, m + 1, dtype=np.int64)
    ends = np.cumsum(per)
    starts = ends - per
    phi[ends - 1] = starts
    return phi


def involution_from_pairs(pairs: Iterable[Tuple[int, int]], m: int, one_based: bool = True) -> np.ndarray:
    alpha = np.full(m, -1, dtype=np.int64)
    off = 1 if one_based else 0
    for x, y in pairs:
        x -= off
        y -= off
        if x == y or alpha[x] >= 0 or alpha[y] >= 0:
            raise ValueError("pairs do not form a fixed-point-free involution")
        alpha[x] = y
        alpha[y] = x
    if np.any(alpha < 0):
        raise ValueError("pairs do not cover every side")
    return alpha


def _check_involution(alpha: np.ndarray, m: int) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.int64)
    if alpha.shape != (m,):
        raise ValueError(f"pairing has {alpha.shape[0] if alpha.ndim else 0} sides, expected {m}")
    idx = np.arange(m)
    if alpha.min() < 0 or alpha.max() >= m or np.any(alpha[alpha] != idx) or np.any(alpha == idx):
        raise ValueError("pairing is not a fixed-point-free involution")
    return alpha


@dataclass(frozen=True)
class ComponentSummary:
    V: int
    F: int
    E: int
    genus: int

    def as_tuple(self):
        return (self.V, self.F, self.E, self.genus)


@dataclass(frozen=True)
class MapSummary:
    """Per-component Euler data, components ordered by their smallest side."""

    parts: Tuple[ComponentSummary, ...]

    @property
    def components(self) -> int:
        return len(self.parts)

    @property
    def connected(self) -> bool:
        return len(self.parts) == 1

    @property
    def V(self) -> int:
        return sum(c.V for c in self.parts)

    @property
    def F(self) -> int:
        return sum(c.F for c in self.parts)

    @property
    def E(self) -> int:
        return sum(c.E for c in self.parts)

    @property
    def genus(self) -> int:
        return sum(c.genus for c in self.parts)

    def key(self) -> tuple:
        return tuple(c.as_tuple() for c in self.parts)

    @classmethod
    def from_rows(cls, rows) -> "MapSummary":
        parts = []
        for V, F, E in rows:
            chi = V - E + F
            if chi % 2 or chi > 2:
                raise ArithmeticError(f"non-integral genus (V={V}, E={E}, F={F})")
            parts.append(ComponentSummary(int(V), int(F), int(E), int(2 - chi) // 2))
        return cls(tuple(parts))

    def to_dict(self) -> dict:
        return {
            "components": self.components,
            "V": self.V,
            "F": self.F,
            "E": self.E,
            "genus": self.genus,
            "per_component": [
                {"V": c.V, "F": c.F, "E": c.E, "genus": c.genus} for c in self.parts
            ],
        }


@dataclass(frozen=True, eq=False)
class LabeledMap:
    alpha: np.ndarray
    phi: np.ndarray

    @property
    def n(self) -> int:
        return self.alpha.shape[0] // 2

    @property
    def sigma(self) -> np.ndarray:
        return self.phi[self.alpha]

    def summary(self) -> MapSummary:
        comp, stats = K.map_component_stats(self.alpha, self.phi)
        return MapSummary.from_rows((v, f, d // 2) for v, f, d in stats)

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n,
            "alpha": (self.alpha + 1).tolist(),
            "phi": (self.phi + 1).tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "LabeledMap":
        rec = json.loads(text)
        alpha = np.asarray(rec["alpha"], dtype=np.int64) - 1
        phi = np.asarray(rec["phi"], dtype=np.int64) - 1
        if alpha.shape[0] != 2 * rec["n"] or phi.shape != alpha.shape:
            raise ValueError("inconsistent map record")
        _check_involution(alpha, alpha.shape[0])
        if not np.array_equal(np.sort(phi), np.arange(phi.shape[0])):
            raise ValueError("phi is not a permutation")
        return cls(alpha, phi)


def glue(config: Configuration, pairing) -> Tuple[LabeledMap, MapSummary]:
    phi = canonical_face_permutation(config)
    alpha = _check_involution(pairing, phi.shape[0])
    lm = LabeledMap(alpha, phi)
    return lm, lm.summary()


def sample_gluing(config: Configuration, rng) -> Tuple[LabeledMap, MapSummary]:
    alpha = sample_pairing(config.total_perimeter, rng)
    return glue(config, alpha)


def dual(lm: LabeledMap) -> LabeledMap:
    return LabeledMap(lm.alpha, lm.phi[lm.alpha])


def sample_uniform_map(n: int, rng, *, return_attempts: bool = False):
    """Uniform labeled connected map with n edges, by rejection on (alpha, phi)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = as_generator(rng)
    m = 2 * n
    attempts = 0
    while True:
        attempts += 1
        alpha = sample_pairing(m, gen)
        phi = gen.permutation(m).astype(np.int64)
        if K.is_transitive(alpha, phi):
            lm = LabeledMap(alpha, phi)
            return (lm, attempts) if return_attempts else lm


# ---------------------------------------------------------------- graphs

@dataclass(eq=False)
class MultiGraph:
    """Multigraph with vertices ranked by decreasing degree.

    ``edges[(i, j)]`` (i <= j, 0-based ranks) is the number of edges between
    ranks i and j; on the diagonal it is twice the number of loops.  ``root``
    is the rank of the vertex carrying side label 1 (or leg 0).
    """

    degrees: np.ndarray
    edges: Dict[Tuple[int, int], int]
    root: int = 0
    vertex_of: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def num_vertices(self) -> int:
        return int(self.degrees.shape[0])

    @property
    def num_edges(self) -> int:
        return int(self.degrees.sum()) // 2

    def count(self, i: int, j: int) -> int:
        """Edge count [i, j] with 1-based ranks, as in the usual notation."""
        i, j = sorted((i - 1, j - 1))
        return self.edges.get((i, j), 0)

    def table(self, k: Optional[int] = None) -> np.ndarray:
        """Dense symmetric k x k table of edge counts (0-based ranks)."""
        V = self.num_vertices
        k = V if k is None else k
        out = np.zeros((k, k), dtype=np.int64)
        for (i, j), c in self.edges.items():
            if i < k and j < k:
                out[i, j] = c
                out[j, i] = c
        return out

    def loop_mass(self) -> int:
        return sum(c for (i, j), c in self.edges.items() if i == j)

    def neighbors(self) -> List[List[int]]:
        adj: List[List[int]] = [[] for _ in range(self.num_vertices)]
        for (i, j) in self.edges:
            if i != j:
                adj[i].append(j)
                adj[j].append(i)
        return adj

    def check(self) -> None:
        V = self.num_vertices
        rows = np.zeros(V, dtype=np.int64)
        for (i, j), c in self.edges.items():
            if i > j or c <= 0:
                raise AssertionError("malformed edge table")
            rows[i] += c
            if i != j:
                rows[j] += c
        if not np.array_equal(rows, self.degrees):
            raise AssertionError("row sums differ from degrees")
        if np.any(np.diff(self.degrees) > 0):
            raise AssertionError("degrees not sorted")

    def to_dict(self) -> dict:
        return {
            "degrees": self.degrees.tolist(),
            "root": self.root + 1,
            "edges": [[i + 1, j + 1, c] for (i, j), c in sorted(self.edges.items())],
        }


def multigraph_from_legs(vertex_of_leg: np.ndarray, partner: np.ndarray, tie_key: np.ndarray,
                         root_leg: int = 0) -> MultiGraph:
    """Build a MultiGraph from a leg -> vertex map and a leg pairing.

    ``tie_key[v]`` orders vertices of equal degree (smaller first).
    """
    vertex_of_leg = np.asarray(vertex_of_leg, dtype=np.int64)
    nv = int(tie_key.shape[0])
    deg = np.bincount(vertex_of_leg, minlength=nv).astype(np.int64)
    order = np.lexsort((tie_key, -deg))
    rank = np.empty(nv, dtype=np.int64)
    rank[order] = np.arange(nv)
    legs = np.arange(partner.shape[0])
    half = legs < partner
    u = rank[vertex_of_leg[legs[half]]]
    v = rank[vertex_of_leg[partner[half]]]
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    keys, counts = np.unique(lo * nv + hi, return_counts=True)
    edges: Dict[Tuple[int, int], int] = {}
    for key, c in zip(keys.tolist(), counts.tolist()):
        i, j = divmod(key, nv)
        edges[(i, j)] = 2 * c if i == j else c
    return MultiGraph(deg[order], edges, int(rank[vertex_of_leg[root_leg]]), rank[vertex_of_leg])


def graph_of(lm: LabeledMap) -> MultiGraph:
    """Graph of the map: vertices are the cycles of sigma, edges the alpha-pairs."""
    vid, _ = K.cycle_ids(lm.sigma)
    # cycles are numbered by their smallest dart, so the id is the tie key
    nv = int(vid.max()) + 1
    return multigraph_from_legs(vid, lm.alpha, np.arange(nv))


def triangle_triples(lm: LabeledMap, graph: MultiGraph, k: int) -> np.ndarray:
    """Corner-vertex statistics of a gluing of triangles.

    For each triangle (d1, d2, d3) in face order, take the ranks of the
    vertices at its three corners and average the indicator of
    ``(rank triple) == (i, j, l)`` over the three rotations.  The returned
    k x k x k array is normalised by the number of triangles.
    """
    phi = lm.phi
    m = phi.shape[0]
    if m % 3:
        raise ValueError("not a gluing of triangles")
    firsts = np.arange(0, m, 3)
    if not (np.all(phi[firsts] == firsts + 1) and np.all(phi[firsts + 2] == firsts)):
        raise ValueError("not a canonical gluing of triangles")
    r = graph.vertex_of
    t = np.stack([r[firsts], r[firsts + 1], r[firsts + 2]], axis=1)
    out = np.zeros((k, k, k), dtype=np.float64)
    for s in range(3):
        rot = np.roll(t, s, axis=1)
        ok = np.all(rot < k, axis=1)
        np.add.at(out, (rot[ok, 0], rot[ok, 1], rot[ok, 2]), 1.0)
    return out / (3.0 * firsts.shape[0])
