"""Independent reference computations used by the tests.

Nothing here calls the package's search, peeling or membership kernels.
"""
from __future__ import annotations

import math

import numpy as np
import shapely

SQ3 = math.sqrt(3.0)
OFFS = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)]


def pos(a, b):
    return a + 0.5 * b, b * SQ3 / 2


def hexagon(a, b, scale=1.0):
    """Pointy-top unit-spacing hexagon of site (a, b)."""
    x, y = pos(a, b)
    rad = 1 / SQ3
    return shapely.Polygon([(scale * (x + rad * math.cos(math.pi / 6 + k * math.pi / 3)),
                             scale * (y + rad * math.sin(math.pi / 6 + k * math.pi / 3))) for k in range(6)])


def box_sites(R):
    m = int(math.ceil(2 * R)) + 3
    for b in range(-m, m + 1):
        for a in range(-2 * m, 2 * m + 1):
            yield a, b


def half_disk_scan(R: float) -> set:
    """Sites whose hexagon meets the closed upper half-disk of radius R."""
    upper = shapely.box(-4 * R - 4, 0.0, 4 * R + 4, 4 * R + 4)
    out = set()
    origin = shapely.Point(0, 0)
    for a, b in box_sites(R):
        h = hexagon(a, b).intersection(upper)
        if not h.is_empty and h.distance(origin) <= R + 1e-12:
            out.add((a, b))
    return out


def sector_scan(alpha: float, R: float) -> set:
    """Sites whose hexagon meets the closed sector {0 <= arg z <= alpha, |z| <= R}."""
    big = 4 * R + 8
    steps = max(8, int(alpha * 64))
    pts = [(0.0, 0.0)] + [(big * math.cos(alpha * k / steps) / math.cos(alpha / steps / 2),
                           big * math.sin(alpha * k / steps) / math.cos(alpha / steps / 2)) for k in range(steps + 1)]
    # closed sector: a hexagon touching a ray counts, so absorb rounding in the rays
    wedge = shapely.Polygon(pts).buffer(1e-9)
    origin = shapely.Point(0, 0)
    out = set()
    for a, b in box_sites(R):
        h = hexagon(a, b).intersection(wedge)
        if not h.is_empty and h.distance(origin) <= R + 1e-9:
            out.add((a, b))
    return out


def nbrs(s):
    return [(s[0] + da, s[1] + db) for da, db in OFFS]


def min_path_time(weight: dict, sources, targets, passable=None) -> int:
    """Minimum summed weight over all simple paths by exhaustive depth-first search.

    ``weight`` maps every admissible site to 0/1.  ``passable(s)`` says whether a
    path may continue through ``s``; a target that is not passable can only
    end a path.  Branches are cut once their cost reaches the best found, which
    cannot change the minimum since weights are nonnegative.
    """
    targets = set(targets)
    best = [math.inf]
    on_path = set()

    def dfs(u, cost):
        if cost >= best[0]:
            return
        if u in targets:
            best[0] = cost
        if passable is not None and not passable(u):
            return
        on_path.add(u)
        for v in nbrs(u):
            if v in weight and v not in on_path:
                dfs(v, cost + weight[v])
        on_path.discard(u)

    for s in sources:
        dfs(s, weight[s])
    return -1 if best[0] == math.inf else int(best[0])


def bfs_hops(sites: set, sources, targets) -> int:
    """Fewest sites on a path (endpoints included) from sources to targets."""
    targets = set(targets)
    frontier = list(sources)
    seen = set(frontier)
    d = 1
    while frontier:
        if any(s in targets for s in frontier):
            return d
        nxt = []
        for u in frontier:
            for v in nbrs(u):
                if v in sites and v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
        d += 1
    return -1


def components(sites: set) -> int:
    sites = set(sites)
    n = 0
    while sites:
        n += 1
        stack = [sites.pop()]
        while stack:
            u = stack.pop()
            for v in nbrs(u):
                if v in sites:
                    sites.remove(v)
                    stack.append(v)
    return n


def welford_free_var(xs) -> tuple[float, float]:
    xs = np.asarray(xs, dtype=float)
    return float(np.mean(xs)), float(np.var(xs, ddof=1))
