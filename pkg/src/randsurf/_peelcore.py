# Array engine behind the peeling exploration.
#
# Darts are 0..m-1 with canonical polygon labelling.  A boundary dart d has a
# successor NXT[d] in its hole; the "position after d" is the boundary corner
# between d and NXT[d].  Corners are union-find nodes indexed by the dart whose
# head they are, so position-after-d always has class find(d).  Gluing a to b
# merges corner a with the tail of b and the tail of a with corner b.
#
# Every vertex that still touches the boundary does so at exactly one
# position.  This holds initially, and each gluing either merges the
# positions around a and b pairwise, or closes them.  Consequently the set of
# boundary positions and the set of boundary vertices are in bijection, and a
# vertex becomes "true" exactly when its position closes.
import numpy as np
from numba import njit

from ._kernels import find, union

# dart rows
NXT, PRV, HOLE, BPOS, BND, CUF, POLY, TAIL0, CLOSED = range(9)
N_DROWS = 9
# hole rows
HSIZE, HMIN, HSTAMP = range(3)
# polygon / component rows
PUF, VCOUNT, PERIM, FCOUNT = range(4)
# scalars
(STEP, NH_, NL_, NB_, NX_, BSIZE, RED, NEXTHOLE, HEAPSIZE, TRACK_MIN,
 COMPONENTS, NEDGES, LASTSTEP) = range(13)
N_SCALARS = 13
# event columns
(E_KIND, E_PEELED, E_PARTNER, E_PI, E_PI2, E_CREATED, E_RESAMPLED,
 E_H, E_L, E_B, E_X) = range(11)
N_ECOLS = 11
# label columns
L_CORNER, L_SIGMA, L_SWALLOW = range(3)

MERGE_COMPONENTS = 0
SPLIT_HOLE = 1
GENUS_MERGE = 2
STRONG_CLOSURE = 3
WEAK_CLOSURE = 4
LOOP_CLOSURE = 5
BIGON_CLOSURE = 6
LOOP_LOOP_MERGE = 7

KIND_NAMES = (
    "merge-components",
    "split-hole",
    "genus-merge",
    "strong-closure",
    "weak-closure",
    "loop-closure",
    "bigon-closure",
    "loop-loop-merge",
)
CREATES = (0, 0, 0, 1, 1, 1, 2, 1)

STRAT_MIN_HOLE = 0
STRAT_RED = 1
STRAT_UNIFORM = 2
MODE_PRESAMPLED = 0
MODE_ON_THE_FLY = 1

UNRESOLVED = -1
NEVER = -2  # swallowed before meeting the red vertex


@njit(cache=True)
def _heap_push(heap, sc, key, h, stamp):
    i = sc[HEAPSIZE]
    sc[HEAPSIZE] = i + 1
    heap[i, 0] = key
    heap[i, 1] = h
    heap[i, 2] = stamp
    while i > 0:
        p = (i - 1) // 2
        if heap[p, 0] <= heap[i, 0]:
            break
        for c in range(3):
            t = heap[p, c]
            heap[p, c] = heap[i, c]
            heap[i, c] = t
        i = p


@njit(cache=True)
def _heap_pop(heap, sc):
    n = sc[HEAPSIZE] - 1
    sc[HEAPSIZE] = n
    for c in range(3):
        heap[0, c] = heap[n, c]
    i = 0
    while True:
        l = 2 * i + 1
        r = l + 1
        s = i
        if l < n and heap[l, 0] < heap[s, 0]:
            s = l
        if r < n and heap[r, 0] < heap[s, 0]:
            s = r
        if s == i:
            break
        for c in range(3):
            t = heap[s, c]
            heap[s, c] = heap[i, c]
            heap[i, c] = t
        i = s


@njit(cache=True)
def init_arrays(perims, track_min):
    npoly = perims.shape[0]
    m = 0
    for j in range(npoly):
        m += perims[j]
    n = m // 2
    D = np.empty((N_DROWS, m), dtype=np.int64)
    hcap = npoly + n + 1
    Hh = np.zeros((3, hcap), dtype=np.int64)
    Pg = np.zeros((4, npoly), dtype=np.int64)
    sc = np.zeros(N_SCALARS, dtype=np.int64)
    heap = np.zeros((npoly + 2 * n + 4, 3), dtype=np.int64)
    start = 0
    nl = 0
    nb = 0
    for j in range(npoly):
        p = perims[j]
        for k in range(p):
            d = start + k
            nx = start + (k + 1) % p
            pv = start + (k - 1) % p
            D[NXT, d] = nx
            D[PRV, d] = pv
            D[HOLE, d] = j
            D[BPOS, d] = d
            D[BND, d] = d
            D[CUF, d] = d
            D[POLY, d] = j
            D[TAIL0, d] = pv
            D[CLOSED, d] = 0
        Hh[HSIZE, j] = p
        Hh[HMIN, j] = start
        Pg[PUF, j] = j
        Pg[PERIM, j] = p
        Pg[FCOUNT, j] = 1
        if p == 1:
            nl += 1
        elif p == 2:
            nb += 1
        start += p
    sc[STEP] = 0
    sc[NH_] = npoly
    sc[NL_] = nl
    sc[NB_] = nb
    sc[BSIZE] = m
    sc[RED] = -1
    sc[NEXTHOLE] = npoly
    sc[TRACK_MIN] = 1 if track_min else 0
    sc[COMPONENTS] = npoly
    sc[NEDGES] = n
    if track_min:
        for j in range(npoly):
            _heap_push(heap, sc, Hh[HSIZE, j] * (m + 1) + Hh[HMIN, j], j, 0)
    return D, Hh, Pg, sc, heap


@njit(cache=True)
def _bnd_remove(D, sc, d):
    i = D[BPOS, d]
    last = sc[BSIZE] - 1
    e = D[BND, last]
    D[BND, i] = e
    D[BPOS, e] = i
    D[BND, last] = d
    D[BPOS, d] = -1
    sc[BSIZE] = last


@njit(cache=True)
def _count_size(sc, size, sign):
    if size == 1:
        sc[NL_] += sign
    elif size == 2:
        sc[NB_] += sign


@njit(cache=True)
def _touch(Hh, heap, sc, h, m):
    Hh[HSTAMP, h] += 1
    if sc[TRACK_MIN] == 1 and Hh[HSIZE, h] > 0:
        _heap_push(heap, sc, Hh[HSIZE, h] * (m + 1) + Hh[HMIN, h], h, Hh[HSTAMP, h])


@njit(cache=True)
def _walk_min(D, start, count):
    best = start
    u = start
    for _ in range(count):
        if u < best:
            best = u
        u = D[NXT, u]
    return best


@njit(cache=True)
def _close(D, Pg, sc, d, comp):
    r = find(D[CUF], d)
    D[CLOSED, r] = 1
    sc[NX_] += 1
    Pg[VCOUNT, comp] += 1


@njit(cache=True)
def peel(D, Hh, Pg, sc, heap, Lb, a, b, ev):
    """Glue boundary darts a and b; fill the event row ev."""
    m = D.shape[1]
    if a == b:
        raise ValueError("cannot glue a side to itself")
    if a < 0 or b < 0 or a >= m or b >= m or D[BPOS, a] < 0 or D[BPOS, b] < 0:
        raise ValueError("side is not on the boundary")
    stepno = sc[STEP] + 1
    nxt = D[NXT]
    prv = D[PRV]
    hole = D[HOLE]
    cuf = D[CUF]
    ha = hole[a]
    hb = hole[b]
    pa = Hh[HSIZE, ha]
    pb = Hh[HSIZE, hb]
    xk = prv[a]
    x1 = nxt[a]
    ym = prv[b]
    y1 = nxt[b]
    red = sc[RED]
    track = sc[TRACK_MIN] == 1

    union(cuf, a, D[TAIL0, b])
    union(cuf, D[TAIL0, a], b)

    ca = find(Pg[PUF], D[POLY, a])
    cb = find(Pg[PUF], D[POLY, b])
    kind = -1
    created = 0
    new_red = red

    if ha != hb:
        ev[E_PI2] = pb
        if pa == 1 and pb == 1:
            comp = ca
            if ca != cb:
                comp = union(Pg[PUF], ca, cb)
                other = cb if comp == ca else ca
                Pg[VCOUNT, comp] += Pg[VCOUNT, other]
                Pg[PERIM, comp] += Pg[PERIM, other]
                Pg[FCOUNT, comp] += Pg[FCOUNT, other]
                sc[COMPONENTS] -= 1
            _close(D, Pg, sc, a, comp)
            created = 1
            kind = LOOP_LOOP_MERGE
            if red == a or red == b:
                kind = LOOP_CLOSURE
                new_red = -1
            Hh[HSIZE, ha] = 0
            Hh[HSIZE, hb] = 0
            Hh[HSTAMP, ha] += 1
            Hh[HSTAMP, hb] += 1
            sc[NH_] -= 2
            sc[NL_] -= 2
        else:
            if ca == cb:
                kind = GENUS_MERGE
            else:
                kind = MERGE_COMPONENTS
                comp = union(Pg[PUF], ca, cb)
                other = cb if comp == ca else ca
                Pg[VCOUNT, comp] += Pg[VCOUNT, other]
                Pg[PERIM, comp] += Pg[PERIM, other]
                Pg[FCOUNT, comp] += Pg[FCOUNT, other]
                sc[COMPONENTS] -= 1
            if pa == 1:
                nxt[ym] = y1
                prv[y1] = ym
            elif pb == 1:
                nxt[xk] = x1
                prv[x1] = xk
            else:
                nxt[xk] = y1
                prv[y1] = xk
                nxt[ym] = x1
                prv[x1] = ym
            # keep the id of the larger hole; relabel the smaller one
            if pa <= pb:
                keep = hb
                gone = ha
                wstart = x1
                wcount = pa - 1
                kmin = Hh[HMIN, hb]
                kconsumed = kmin == b
            else:
                keep = ha
                gone = hb
                wstart = y1
                wcount = pb - 1
                kmin = Hh[HMIN, ha]
                kconsumed = kmin == a
            u = wstart
            wmin = m
            for _ in range(wcount):
                hole[u] = keep
                if u < wmin:
                    wmin = u
                u = nxt[u]
            newsize = pa + pb - 2
            Hh[HSIZE, keep] = newsize
            Hh[HSIZE, gone] = 0
            Hh[HSTAMP, gone] += 1
            _count_size(sc, pa, -1)
            _count_size(sc, pb, -1)
            _count_size(sc, newsize, 1)
            sc[NH_] -= 1
            if track:
                if kconsumed:
                    # walk the kept part: it starts right after the consumed dart's neighbour
                    start = y1 if keep == hb else x1
                    cnt = (pb if keep == hb else pa) - 1
                    kmin = _walk_min(D, start, cnt) if cnt > 0 else m
                best = kmin if kmin < wmin else wmin
                Hh[HMIN, keep] = best
            _touch(Hh, heap, sc, keep, m)
            if red == a:
                new_red = xk if pb == 1 else ym
            elif red == b:
                new_red = ym if pa == 1 else xk
    else:
        p = pa
        ev[E_PI2] = -1
        comp = ca
        if p == 2:
            kind = BIGON_CLOSURE
            _close(D, Pg, sc, a, comp)
            _close(D, Pg, sc, b, comp)
            created = 2
            Hh[HSIZE, ha] = 0
            Hh[HSTAMP, ha] += 1
            sc[NH_] -= 1
            sc[NB_] -= 1
            if red == a or red == b:
                new_red = -1
        elif b == x1 or a == y1:
            if b == x1:
                kind = STRONG_CLOSURE
                _close(D, Pg, sc, a, comp)
                nxt[xk] = y1
                prv[y1] = xk
                if red == a:
                    new_red = -1
                elif red == b:
                    new_red = xk
                rest = y1
            else:
                kind = WEAK_CLOSURE
                _close(D, Pg, sc, b, comp)
                nxt[ym] = x1
                prv[x1] = ym
                if red == b:
                    new_red = -1
                elif red == a:
                    new_red = ym
                rest = x1
            created = 1
            Hh[HSIZE, ha] = p - 2
            _count_size(sc, p, -1)
            _count_size(sc, p - 2, 1)
            if track and (Hh[HMIN, ha] == a or Hh[HMIN, ha] == b):
                Hh[HMIN, ha] = _walk_min(D, rest, p - 2)
            _touch(Hh, heap, sc, ha, m)
        else:
            kind = SPLIT_HOLE
            nxt[xk] = y1
            prv[y1] = xk
            nxt[ym] = x1
            prv[x1] = ym
            # simultaneous walk to find the shorter of x1..ym and y1..xk
            u = x1
            v = y1
            c = 1
            while True:
                if u == ym:
                    short_start = x1
                    break
                if v == xk:
                    short_start = y1
                    break
                u = nxt[u]
                v = nxt[v]
                c += 1
            nh = sc[NEXTHOLE]
            sc[NEXTHOLE] = nh + 1
            u = short_start
            smin = m
            for _ in range(c):
                hole[u] = nh
                if u < smin:
                    smin = u
                u = nxt[u]
            long_size = p - 2 - c
            long_start = y1 if short_start == x1 else x1
            Hh[HSIZE, nh] = c
            Hh[HMIN, nh] = smin
            Hh[HSTAMP, nh] = 0
            Hh[HSIZE, ha] = long_size
            _count_size(sc, p, -1)
            _count_size(sc, c, 1)
            _count_size(sc, long_size, 1)
            sc[NH_] += 1
            if track:
                old = Hh[HMIN, ha]
                if old == a or old == b or hole[old] != ha:
                    Hh[HMIN, ha] = _walk_min(D, long_start, long_size)
            _touch(Hh, heap, sc, ha, m)
            _touch(Hh, heap, sc, nh, m)
            if red == a:
                new_red = ym
            elif red == b:
                new_red = xk

    _bnd_remove(D, sc, a)
    _bnd_remove(D, sc, b)
    hole[a] = -1
    hole[b] = -1

    # tracked labels: meeting the red vertex first, then swallowing
    if Lb.shape[0] > 0:
        rroot = find(cuf, red) if red >= 0 else -1
        for j in range(Lb.shape[0]):
            if Lb[j, L_SIGMA] != UNRESOLVED:
                continue
            lr = find(cuf, Lb[j, L_CORNER])
            if lr == rroot:
                Lb[j, L_SIGMA] = stepno
            elif D[CLOSED, lr] == 1:
                Lb[j, L_SIGMA] = NEVER
                Lb[j, L_SWALLOW] = stepno

    sc[RED] = new_red
    sc[STEP] = stepno
    ev[E_KIND] = kind
    ev[E_PEELED] = a
    ev[E_PARTNER] = b
    ev[E_PI] = pa
    ev[E_CREATED] = created
    ev[E_H] = sc[NH_]
    ev[E_L] = sc[NL_]
    ev[E_B] = sc[NB_]
    ev[E_X] = sc[NX_]
    return kind


@njit(cache=True)
def set_red(D, sc, Lb, r):
    """Place the red marker on the position after boundary dart r."""
    sc[RED] = r
    if Lb.shape[0] > 0:
        rroot = find(D[CUF], r)
        for j in range(Lb.shape[0]):
            if Lb[j, L_SIGMA] == UNRESOLVED and find(D[CUF], Lb[j, L_CORNER]) == rroot:
                Lb[j, L_SIGMA] = sc[STEP]


@njit(cache=True)
def uniform_boundary(D, sc, u):
    size = sc[BSIZE]
    i = int(u * size)
    if i >= size:
        i = size - 1
    return D[BND, i]


@njit(cache=True)
def uniform_partner(D, sc, a, u):
    size = sc[BSIZE]
    i = int(u * (size - 1))
    if i >= size - 1:
        i = size - 2
    d = D[BND, i]
    if d == a:
        d = D[BND, size - 1]
    return d


@njit(cache=True)
def select_min_hole(Hh, sc, heap):
    while sc[HEAPSIZE] > 0:
        h = heap[0, 1]
        if heap[0, 2] == Hh[HSTAMP, h] and Hh[HSIZE, h] > 0:
            return Hh[HMIN, h]
        _heap_pop(heap, sc)
    return -1


@njit(cache=True)
def run_kernel(perims, strategy, mode, alpha, us, up, stop_at_tau, Lb):
    """Run a full exploration with a built-in strategy.

    Returns (events, steps, D, Pg, sc, initial red or -1).
    """
    track = strategy == STRAT_MIN_HOLE
    D, Hh, Pg, sc, heap = init_arrays(perims, track)
    n = sc[NEDGES]
    ev = np.full((n, N_ECOLS), -1, dtype=np.int64)
    red0 = -1
    if strategy == STRAT_RED and n > 0:
        red0 = uniform_boundary(D, sc, us[0])
        set_red(D, sc, Lb, red0)
    steps = 0
    if stop_at_tau and sc[NH_] == 1:
        return ev[:0], 0, D, Pg, sc, red0
    for i in range(n):
        resampled = 0
        if strategy == STRAT_MIN_HOLE:
            a = select_min_hole(Hh, sc, heap)
        elif strategy == STRAT_RED:
            if sc[RED] < 0:
                set_red(D, sc, Lb, uniform_boundary(D, sc, us[i + 1]))
                resampled = 1
            a = sc[RED]
        else:
            a = uniform_boundary(D, sc, us[i + 1])
        if mode == MODE_PRESAMPLED:
            b = alpha[a]
        else:
            b = uniform_partner(D, sc, a, up[i])
        peel(D, Hh, Pg, sc, heap, Lb, a, b, ev[i])
        ev[i, E_RESAMPLED] = resampled
        steps += 1
        if stop_at_tau and sc[NH_] == 1:
            break
    return ev[:steps], steps, D, Pg, sc, red0


@njit(cache=True)
def component_table(D, Pg):
    """Rows (min dart, V, F, E) per component of the explored surface."""
    npoly = Pg.shape[1]
    m = D.shape[1]
    first = np.full(npoly, -1, dtype=np.int64)
    for d in range(m):
        j = D[POLY, d]
        if first[j] < 0:
            first[j] = d
    count = 0
    for j in range(npoly):
        if find(Pg[PUF], j) == j:
            count += 1
    out = np.zeros((count, 4), dtype=np.int64)
    k = 0
    for j in range(npoly):
        if find(Pg[PUF], j) == j:
            out[k, 0] = first[j]
            out[k, 1] = Pg[VCOUNT, j]
            out[k, 2] = Pg[FCOUNT, j]
            out[k, 3] = Pg[PERIM, j] // 2
            k += 1
    return out
