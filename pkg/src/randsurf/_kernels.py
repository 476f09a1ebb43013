# Compiled inner loops shared by the sampling and gluing code.  All arrays
# are 0-based int64; callers convert to and from 1-based labels.
import numpy as np
from numba import njit


@njit(cache=True)
def find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nx = parent[x]
        parent[x] = root
        x = nx
    return root


@njit(cache=True)
def union(parent, x, y):
    rx = find(parent, x)
    ry = find(parent, y)
    if rx == ry:
        return rx
    # smaller index wins, so roots are deterministic
    if ry < rx:
        rx, ry = ry, rx
    parent[ry] = rx
    return rx


@njit(cache=True)
def pairing_from_uniforms(m, u):
    # Match the smallest unmatched label with a uniform other unmatched label.
    # ``u`` holds m // 2 uniforms in [0, 1).
    inv = np.full(m, -1, dtype=np.int64)
    pool = np.arange(m, dtype=np.int64)
    pos = np.arange(m, dtype=np.int64)
    size = m
    s = 0
    for step in range(m // 2):
        while inv[s] >= 0:
            s += 1
        # remove s from the pool
        k = pos[s]
        last = pool[size - 1]
        pool[k] = last
        pos[last] = k
        size -= 1
        j = int(u[step] * size)
        if j >= size:
            j = size - 1
        t = pool[j]
        last = pool[size - 1]
        pool[j] = last
        pos[last] = j
        size -= 1
        inv[s] = t
        inv[t] = s
    return inv


@njit(cache=True)
def cycle_ids(perm):
    """Label each point with the index of its cycle (cycles numbered by their
    smallest element, in increasing order) and return (ids, lengths)."""
    m = perm.shape[0]
    ids = np.full(m, -1, dtype=np.int64)
    lengths = np.zeros(m, dtype=np.int64)
    c = 0
    for d in range(m):
        if ids[d] >= 0:
            continue
        x = d
        ln = 0
        while ids[x] < 0:
            ids[x] = c
            ln += 1
            x = perm[x]
        lengths[c] = ln
        c += 1
    return ids, lengths[:c]


@njit(cache=True)
def count_cycles(perm):
    m = perm.shape[0]
    seen = np.zeros(m, dtype=np.bool_)
    c = 0
    for d in range(m):
        if seen[d]:
            continue
        c += 1
        x = d
        while not seen[x]:
            seen[x] = True
            x = perm[x]
    return c


@njit(cache=True)
def count_composed_cycles(outer, inner):
    # cycles of d -> outer[inner[d]]
    m = outer.shape[0]
    seen = np.zeros(m, dtype=np.bool_)
    c = 0
    for d in range(m):
        if seen[d]:
            continue
        c += 1
        x = d
        while not seen[x]:
            seen[x] = True
            x = outer[inner[x]]
    return c


@njit(cache=True)
def orbit_labels(alpha, phi):
    """Orbits of <alpha, phi>, numbered by smallest element."""
    m = alpha.shape[0]
    parent = np.arange(m, dtype=np.int64)
    for d in range(m):
        union(parent, d, alpha[d])
        union(parent, d, phi[d])
    comp = np.empty(m, dtype=np.int64)
    remap = np.full(m, -1, dtype=np.int64)
    c = 0
    for d in range(m):
        r = find(parent, d)
        if remap[r] < 0:
            remap[r] = c
            c += 1
        comp[d] = remap[r]
    return comp, c


@njit(cache=True)
def is_transitive(alpha, phi):
    m = alpha.shape[0]
    parent = np.arange(m, dtype=np.int64)
    groups = m
    for d in range(m):
        if find(parent, d) != find(parent, alpha[d]):
            union(parent, d, alpha[d])
            groups -= 1
        if find(parent, d) != find(parent, phi[d]):
            union(parent, d, phi[d])
            groups -= 1
    return groups == 1


@njit(cache=True)
def map_component_stats(alpha, phi):
    """Per-component (vertices, faces, darts) of the map (alpha, phi).

    Vertices are the cycles of sigma = phi o alpha, faces the cycles of phi.
    Returns (comp, stats) with stats[c] = [V, F, darts].
    """
    comp, nc = orbit_labels(alpha, phi)
    m = alpha.shape[0]
    stats = np.zeros((nc, 3), dtype=np.int64)
    seen = np.zeros(m, dtype=np.bool_)
    for d in range(m):
        stats[comp[d], 2] += 1
        if not seen[d]:
            stats[comp[d], 1] += 1
            x = d
            while not seen[x]:
                seen[x] = True
                x = phi[x]
    seen[:] = False
    for d in range(m):
        if not seen[d]:
            stats[comp[d], 0] += 1
            x = d
            while not seen[x]:
                seen[x] = True
                x = phi[alpha[x]]
    return comp, stats


@njit(cache=True)
def connected_pairs_count(involutions, perms):
    total = 0
    for a in range(involutions.shape[0]):
        alpha = involutions[a]
        for p in range(perms.shape[0]):
            if is_transitive(alpha, perms[p]):
                total += 1
    return total


@njit(cache=True)
def locate_sticks(cum, u):
    # index of the interval [cum[k-1], cum[k]) containing u, or -1 beyond cum[-1]
    lo = 0
    hi = cum.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    if lo >= cum.shape[0]:
        return -1
    return lo
