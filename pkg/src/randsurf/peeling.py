"""Peeling explorations of a gluing.

The exploration starts from the disjoint polygons and glues one pair of
boundary sides per step.  A strategy chooses the side to peel (never looking
at the hidden pairing); the partner is either read from a presampled pairing
or drawn uniformly among the other boundary sides.

Built-in strategies run inside a compiled loop; any object implementing
:class:`PeelStrategy` can be used through the slower step-by-step path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _peelcore as C
from ._kernels import find
from .combinatorics import sample_pairing
from .rng import as_generator
from .surface import Configuration, MapSummary

KIND_NAMES = C.KIND_NAMES
KIND_ALIASES = {"plain-same-hole-split": "split-hole"}
CLOSURE_KINDS = ("strong-closure", "weak-closure", "loop-closure", "bigon-closure")
INF = math.inf


def kind_code(name: str) -> int:
    return KIND_NAMES.index(KIND_ALIASES.get(name, name))


# ---------------------------------------------------------------- state

class SurfaceState:
    """Mutable exploration state.  Use :meth:`copy` to branch."""

    def __init__(self, config: Configuration, *, track_min: bool = True, _arrays=None):
        self.config = config
        if _arrays is None:
            D, Hh, Pg, sc, heap = C.init_arrays(config.as_array(), track_min)
            Lb = np.zeros((0, 3), dtype=np.int64)
            _arrays = (D, Hh, Pg, sc, heap, Lb)
        self.D, self.Hh, self.Pg, self.sc, self.heap, self.Lb = _arrays

    def copy(self) -> "SurfaceState":
        return SurfaceState(self.config, _arrays=tuple(x.copy() for x in
                                                         (self.D, self.Hh, self.Pg, self.sc, self.heap, self.Lb)))

    # counters
    @property
    def n(self) -> int:
        return self.config.half_total

    @property
    def step(self) -> int:
        return int(self.sc[C.STEP])

    @property
    def H(self) -> int:
        return int(self.sc[C.NH_])

    @property
    def L(self) -> int:
        return int(self.sc[C.NL_])

    @property
    def B(self) -> int:
        return int(self.sc[C.NB_])

    @property
    def X(self) -> int:
        return int(self.sc[C.NX_])

    @property
    def boundary_size(self) -> int:
        return int(self.sc[C.BSIZE])

    @property
    def components(self) -> int:
        return int(self.sc[C.COMPONENTS])

    @property
    def red(self) -> Optional[int]:
        r = int(self.sc[C.RED])
        return None if r < 0 else r

    @property
    def finished(self) -> bool:
        return self.boundary_size == 0

    def boundary(self) -> np.ndarray:
        return np.sort(self.D[C.BND, : self.boundary_size])

    def on_boundary(self, d: int) -> bool:
        return 0 <= d < self.D.shape[1] and self.D[C.BPOS, d] >= 0

    def hole_of(self, d: int) -> int:
        return int(self.D[C.HOLE, d])

    def perimeter(self, d: int) -> int:
        return int(self.Hh[C.HSIZE, self.D[C.HOLE, d]])

    def holes(self) -> List[List[int]]:
        """Each hole as its circular sequence of sides, starting at its smallest side."""
        seen = set()
        out = []
        for d in self.boundary():
            d = int(d)
            if d in seen:
                continue
            cyc = [d]
            seen.add(d)
            u = int(self.D[C.NXT, d])
            while u != d:
                cyc.append(u)
                seen.add(u)
                u = int(self.D[C.NXT, u])
            out.append(cyc)
        return out

    def vertex_class(self, corner: int) -> int:
        return int(find(self.D[C.CUF], corner))

    def min_hole_dart(self) -> int:
        if self.sc[C.TRACK_MIN] != 1:
            raise RuntimeError("state was created without minimum tracking")
        return int(C.select_min_hole(self.Hh, self.sc, self.heap))

    def set_red(self, dart: int) -> None:
        if not self.on_boundary(dart):
            raise ValueError("red marker must sit on the boundary")
        C.set_red(self.D, self.sc, self.Lb, dart)

    def summary(self) -> MapSummary:
        if not self.finished:
            raise RuntimeError("exploration not finished")
        rows = C.component_table(self.D, self.Pg)
        return MapSummary.from_rows((v, f, e) for _, v, f, e in rows)

    def check_invariants(self) -> None:
        D, Hh, sc = self.D, self.Hh, self.sc
        m = D.shape[1]
        bnd = self.boundary()
        if bnd.size != m - 2 * self.step or bnd.size != sc[C.BSIZE]:
            raise AssertionError("boundary size is not 2n - 2i")
        holes = self.holes()
        if len(holes) != self.H:
            raise AssertionError("hole count mismatch")
        sizes = [len(h) for h in holes]
        if sizes.count(1) != self.L or sizes.count(2) != self.B:
            raise AssertionError("loop/bigon counters out of sync")
        for cyc in holes:
            h = D[C.HOLE, cyc[0]]
            if any(D[C.HOLE, d] != h for d in cyc) or Hh[C.HSIZE, h] != len(cyc):
                raise AssertionError("hole labels out of sync")
            if sc[C.TRACK_MIN] == 1 and Hh[C.HMIN, h] != min(cyc):
                raise AssertionError("hole minimum out of sync")
            for d in cyc:
                if D[C.PRV, D[C.NXT, d]] != d:
                    raise AssertionError("broken hole links")
        classes = set()
        for d in bnd:
            r = self.vertex_class(int(d))
            if r != self.vertex_class(int(D[C.TAIL0, D[C.NXT, d]])):
                raise AssertionError("corner classes out of sync")
            if r in classes:
                raise AssertionError("vertex visible at two boundary positions")
            if D[C.CLOSED, r]:
                raise AssertionError("closed vertex still on the boundary")
            classes.add(r)
        red = self.red
        if red is not None and not self.on_boundary(red):
            raise AssertionError("red marker off the boundary")


def init_state(config: Configuration, *, track_min: bool = True) -> SurfaceState:
    return SurfaceState(config, track_min=track_min)


@dataclass(frozen=True)
class PeelEvent:
    step: int
    kind: str
    peeled: int
    partner: int
    pi: int
    partner_pi: Optional[int]
    vertices_created: int
    red_resampled: bool
    H: int
    L: int
    B: int
    X: int

    @classmethod
    def from_row(cls, step: int, row) -> "PeelEvent":
        return cls(step, KIND_NAMES[row[C.E_KIND]], int(row[C.E_PEELED]), int(row[C.E_PARTNER]),
                   int(row[C.E_PI]), None if row[C.E_PI2] < 0 else int(row[C.E_PI2]),
                   int(row[C.E_CREATED]), bool(row[C.E_RESAMPLED] == 1),
                   int(row[C.E_H]), int(row[C.E_L]), int(row[C.E_B]), int(row[C.E_X]))


def peel_step(state: SurfaceState, peeled: int, partner: int, *, resampled: bool = False) -> Tuple[SurfaceState, PeelEvent]:
    """Glue two boundary sides in place; returns the same state and the event."""
    if peeled == partner:
        raise ValueError("cannot glue a side to itself")
    if not (state.on_boundary(peeled) and state.on_boundary(partner)):
        raise ValueError("side is not on the boundary")
    row = np.full(C.N_ECOLS, -1, dtype=np.int64)
    C.peel(state.D, state.Hh, state.Pg, state.sc, state.heap, state.Lb, peeled, partner, row)
    row[C.E_RESAMPLED] = 1 if resampled else 0
    return state, PeelEvent.from_row(state.step, row)


# ---------------------------------------------------------------- strategies

class PeelStrategy:
    """Chooses the next side to peel from the visible state only.

    ``options(state)`` lists every possible choice with its exact
    probability; ``commit(state, dart)`` records the choice (e.g. moves a
    marker) and returns whether auxiliary randomness was consumed in a way
    worth logging.  ``select`` draws from ``options`` using the strategy's
    own generator.
    """

    name = "custom"
    code: Optional[int] = None
    gen: Optional[np.random.Generator] = None

    def prepare(self, state: SurfaceState) -> None:
        pass

    def options(self, state: SurfaceState) -> List[Tuple[int, Fraction]]:
        raise NotImplementedError

    def commit(self, state: SurfaceState, dart: int) -> bool:
        return False

    def select(self, state: SurfaceState) -> Tuple[int, bool]:
        opts = self.options(state)
        if len(opts) == 1:
            d = opts[0][0]
        else:
            u = self.gen.random()
            acc = 0.0
            d = opts[-1][0]
            for dart, p in opts:
                acc += float(p)
                if u < acc:
                    d = dart
                    break
        return d, self.commit(state, d)


class MinHoleStrategy(PeelStrategy):
    """Peel the smallest side of a hole of minimal perimeter."""

    name = "min-hole"
    code = C.STRAT_MIN_HOLE

    def options(self, state):
        return [(state.min_hole_dart(), Fraction(1))]


class UniformStrategy(PeelStrategy):
    name = "uniform"
    code = C.STRAT_UNIFORM

    def __init__(self, rng=None):
        self.gen = as_generator(rng)

    def options(self, state):
        bnd = state.boundary()
        p = Fraction(1, len(bnd))
        return [(int(d), p) for d in bnd]


class RedVertexStrategy(PeelStrategy):
    """Peel the side whose head is the red corner; resample the corner when it closes.

    ``resample="vertex"`` draws a uniform boundary vertex instead of a uniform
    boundary corner.  Every vertex still on the boundary is seen at a single
    boundary position, so both rules have the same law; the switch exists to
    run the comparison.
    """

    name = "red-vertex"

    def __init__(self, rng=None, resample: str = "corner"):
        if resample not in ("corner", "vertex"):
            raise ValueError("resample must be 'corner' or 'vertex'")
        self.gen = as_generator(rng)
        self.resample = resample
        self.code = C.STRAT_RED if resample == "corner" else None
        self._initial = True

    def prepare(self, state):
        self._initial = True

    def _candidates(self, state) -> List[int]:
        bnd = [int(d) for d in state.boundary()]
        if self.resample == "corner":
            return bnd
        by_class: Dict[int, int] = {}
        for d in bnd:
            by_class.setdefault(state.vertex_class(d), d)
        return sorted(by_class.values())

    def options(self, state):
        r = state.red
        if r is not None:
            return [(r, Fraction(1))]
        cand = self._candidates(state)
        p = Fraction(1, len(cand))
        return [(d, p) for d in cand]

    def commit(self, state, dart):
        if state.red == dart:
            return False
        state.set_red(dart)
        flagged = not self._initial
        self._initial = False
        return flagged

    def place_initial(self, state) -> None:
        cand = self._candidates(state)
        d = cand[int(self.gen.random() * len(cand))]
        state.set_red(d)
        self._initial = False


def strategy_min_hole() -> PeelStrategy:
    return MinHoleStrategy()


def strategy_uniform(rng=None) -> PeelStrategy:
    return UniformStrategy(rng)


def strategy_red_vertex(rng=None, resample: str = "corner") -> PeelStrategy:
    return RedVertexStrategy(rng, resample)


# ---------------------------------------------------------------- trajectories

@dataclass
class TrajectoryLog:
    n: int
    strategy: str
    mode: str
    events: np.ndarray  # (steps, 11) integer rows
    initial: Tuple[int, int, int]  # H_0, L_0, B_0
    summary: Optional[MapSummary]
    red0: Optional[int] = None
    labels: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.int64))
    label_vertices: Optional[np.ndarray] = None

    def __len__(self):
        return self.events.shape[0]

    def event(self, i: int) -> PeelEvent:
        """Event of step i (1-based)."""
        return PeelEvent.from_row(i, self.events[i - 1])

    def iter_events(self):
        for i in range(len(self)):
            yield self.event(i + 1)

    def _series(self, col, initial):
        return np.concatenate(([initial], self.events[:, col]))

    @property
    def H(self) -> np.ndarray:
        return self._series(C.E_H, self.initial[0])

    @property
    def L(self) -> np.ndarray:
        return self._series(C.E_L, self.initial[1])

    @property
    def B(self) -> np.ndarray:
        return self._series(C.E_B, self.initial[2])

    @property
    def X(self) -> np.ndarray:
        return self._series(C.E_X, 0)

    @property
    def pi(self) -> np.ndarray:
        return self.events[:, C.E_PI]

    @property
    def kinds(self) -> np.ndarray:
        return self.events[:, C.E_KIND]

    def steps_of(self, *names: str) -> np.ndarray:
        codes = [kind_code(s) for s in names]
        return np.nonzero(np.isin(self.kinds, codes))[0] + 1

    def closure_times(self) -> np.ndarray:
        """Strong closure times theta^(1) < theta^(2) < ... (bigon closures included)."""
        return self.steps_of("strong-closure", "bigon-closure")

    @property
    def tau(self) -> float:
        """First step with a single hole; 0 if the start has one hole, inf if never."""
        if self.initial[0] == 1:
            return 0
        hit = np.nonzero(self.events[:, C.E_H] == 1)[0]
        return int(hit[0]) + 1 if hit.size else INF

    def X_at(self, i: float) -> int:
        if i == INF:
            raise ValueError("time is infinite")
        return int(self.X[int(i)])

    def sigma(self) -> List[float]:
        out = []
        for s in self.labels[:, C.L_SIGMA]:
            out.append(INF if s < 0 else int(s))
        return out

    def to_csv(self) -> str:
        lines = ["step,kind,peeled,partner,pi,H,L,B,X,red_resampled"]
        for e in self.iter_events():
            lines.append(f"{e.step},{e.kind},{e.peeled + 1},{e.partner + 1},{e.pi},"
                         f"{e.H},{e.L},{e.B},{e.X},{int(e.red_resampled)}")
        return "\n".join(lines) + "\n"


def _choose_label_corners(config: Configuration, k: int, gen: np.random.Generator) -> np.ndarray:
    m = config.total_perimeter
    if k < 0 or 2 * k > m:
        raise ValueError("need 2k <= number of corners")
    sides = gen.choice(m, size=k, replace=False)
    phi = np.arange(1, m + 1)
    ends = np.cumsum(config.as_array())
    phi[ends - 1] = ends - config.as_array()
    tail = np.empty(m, dtype=np.int64)
    tail[phi] = np.arange(m)
    Lb = np.empty((2 * k, 3), dtype=np.int64)
    Lb[0::2, C.L_CORNER] = tail[sides]
    Lb[1::2, C.L_CORNER] = sides
    Lb[:, C.L_SIGMA] = C.UNRESOLVED
    Lb[:, C.L_SWALLOW] = -1
    return Lb


def track_labels(state: SurfaceState, k: int, rng) -> np.ndarray:
    """Attach labels to both end corners of k distinct uniform sides.

    Must be called before the exploration starts.  Returns the label corners.
    """
    if state.step != 0:
        raise RuntimeError("labels must be placed on the initial polygons")
    state.Lb = _choose_label_corners(state.config, k, as_generator(rng))
    r = state.red
    if r is not None:
        state.set_red(r)
    return state.Lb[:, C.L_CORNER].copy()


def _finish_log(state, config, strategy, mode, ev, red0) -> TrajectoryLog:
    H0 = config.count
    summary = state.summary() if state.finished else None
    lv = None
    if state.Lb.shape[0]:
        lv = np.array([state.vertex_class(int(c)) for c in state.Lb[:, C.L_CORNER]], dtype=np.int64)
    return TrajectoryLog(config.half_total, strategy, mode, ev, (H0, config.loops, config.bigons),
                         summary, red0, state.Lb.copy(), lv)


def run(config: Configuration, strategy: PeelStrategy, mode: str = "presampled", rng=None, *,
        pairing: Optional[np.ndarray] = None, track: int = 0, stop_at_tau: bool = False,
        label_rng=None) -> TrajectoryLog:
    """Explore the gluing of ``config`` with ``strategy``.

    ``rng`` drives the hidden pairing (presampled) or the partner draws
    (on-the-fly); the strategy uses its own generator.  With ``track=k`` the
    end corners of k uniform sides are followed, drawn from ``label_rng``
    (default: the strategy generator).
    """
    if mode not in ("presampled", "on-the-fly"):
        raise ValueError("mode must be 'presampled' or 'on-the-fly'")
    n = config.half_total
    m = 2 * n
    pgen = as_generator(rng)
    if mode == "presampled":
        alpha = sample_pairing(m, pgen) if pairing is None else np.asarray(pairing, dtype=np.int64)
        if alpha.shape != (m,):
            raise ValueError("pairing does not match the configuration")
        up = np.zeros(0)
    else:
        if pairing is not None:
            raise ValueError("a pairing only makes sense in presampled mode")
        alpha = np.zeros(0, dtype=np.int64)
    sgen = strategy.gen if strategy.gen is not None else pgen.spawn(1)[0]
    Lb = np.zeros((0, 3), dtype=np.int64)
    if track:
        Lb = _choose_label_corners(config, track, as_generator(label_rng) if label_rng is not None else sgen)

    if strategy.code is not None:
        us = sgen.random(n + 1) if strategy.code != C.STRAT_MIN_HOLE else np.zeros(1)
        if mode == "on-the-fly":
            up = pgen.random(n)
        ev, steps, D, Pg, sc, red0 = C.run_kernel(
            config.as_array(), strategy.code, C.MODE_PRESAMPLED if mode == "presampled" else C.MODE_ON_THE_FLY,
            alpha, us, up, stop_at_tau, Lb)
        state = SurfaceState.__new__(SurfaceState)
        state.config = config
        state.D, state.Pg, state.sc, state.Lb = D, Pg, sc, Lb
        state.Hh = state.heap = None
        return _finish_log(state, config, strategy.name, mode, ev, None if red0 < 0 else int(red0))

    # generic path
    state = init_state(config, track_min=isinstance(strategy, MinHoleStrategy))
    state.Lb = Lb
    strategy.prepare(state)
    red0 = None
    if isinstance(strategy, RedVertexStrategy):
        strategy.place_initial(state)
        red0 = state.red
    rows = np.full((n, C.N_ECOLS), -1, dtype=np.int64)
    steps = 0
    if not (stop_at_tau and state.H == 1):
        for i in range(n):
            a, flag = strategy.select(state)
            if mode == "presampled":
                b = int(alpha[a])
            else:
                b = int(C.uniform_partner(state.D, state.sc, a, pgen.random()))
            C.peel(state.D, state.Hh, state.Pg, state.sc, state.heap, state.Lb, a, b, rows[i])
            rows[i, C.E_RESAMPLED] = 1 if flag else 0
            steps += 1
            if stop_at_tau and state.H == 1:
                break
    return _finish_log(state, config, strategy.name, mode, rows[:steps], red0)


# ---------------------------------------------------------------- reports

def closure_ratios(log: TrajectoryLog, count: int = 2) -> np.ndarray:
    """(theta^(i) - theta^(i-1)) / (n - theta^(i-1)) for i = 1..count.

    A missing closure time is read as n.  Once a closure time equals n the
    exploration is over and the following ratios are set to 1.
    """
    th = [0] + [int(t) for t in log.closure_times()[:count]]
    while len(th) < count + 1:
        th.append(log.n)
    out = np.empty(count)
    for i in range(1, count + 1):
        rest = log.n - th[i - 1]
        out[i - 1] = (th[i] - th[i - 1]) / rest if rest > 0 else 1.0
    return out


def closure_report(log: TrajectoryLog) -> dict:
    closures = [(int(s), KIND_NAMES[log.kinds[s - 1]]) for s in log.steps_of(*CLOSURE_KINDS)]
    theta = [0] + [int(t) for t in log.closure_times()]
    ratios = []
    for i in range(1, len(theta)):
        ratios.append((theta[i] - theta[i - 1]) / (log.n - theta[i - 1]))
    return {
        "n": log.n,
        "theta": theta,
        "closures": closures,
        "sigma": log.sigma(),
        "ratios": ratios,
    }


def monitors(log: TrajectoryLog) -> dict:
    L = log.L
    B = log.B
    dL = np.diff(L)
    dLB = np.diff(L + B)
    lct = log.steps_of("loop-closure")
    return {
        "sup_L": int(L.max()),
        "sup_B": int(B.max()),
        "peeled_loops": int(np.sum(log.pi == 1)),
        "peeled_bigons": int(np.sum(log.pi == 2)),
        "first_loop_closure": int(lct[0]) if lct.size else INF,
        "max_dL": int(dL.max()) if dL.size else 0,
        "max_dLB": int(dLB.max()) if dLB.size else 0,
    }
