"""Exact first-passage times for 0/1 site weights.

The passage time of a path is the sum of the weights of all its sites,
endpoints included, so a one-site path costs the weight of that site.  All
times are computed by a 0-1 breadth-first search on site weights: the weight
of a site is charged when it is discovered, and because every offer to a site
``v`` equals (predecessor distance) + t(v) with predecessors popped in
nondecreasing order, the first offer is already final.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numba
import numpy as np

from .lattice import DO, DI, IN, RegionError, RegionMask, RegionSpec, SiteCoord, nearest_site
from .percolation import Configuration

UNREACHABLE = -1

# admissibility codes of the ``enter`` array
NO_ENTRY, PASS, ENDPOINT = 0, 1, 2


@numba.njit(cache=True, nogil=True)
def zero_one_bfs(weight, enter, sources, is_target, offsets, early, dist, queue, parent):
    """0-1 BFS on site weights over a flat grid.

    weight : int8 per cell (0/1 on sites)
    enter : uint8 per cell, 0 = never entered, 1 = entered and expanded,
        2 = entered as a path endpoint only
    sources : flat indices; the caller marks them 1 in ``enter``
    is_target : uint8 per cell
    dist : int32 per cell, filled with -1 by the caller; receives distances
    queue : int64 work array of at least one slot per cell
    parent : int64 array of per-cell predecessors, or an empty array

    Returns ``(time, flat)`` of the best target, or ``(-1, -1)``.  With
    ``early`` the search stops at the first target popped; otherwise it runs to
    exhaustion and the best target is the minimum of ``dist`` over targets.
    """
    cap = queue.size
    head = 0
    size = 0
    track = parent.size > 0
    for pas in range(2):
        for s in sources:
            if weight[s] != pas or dist[s] >= 0:
                continue
            dist[s] = weight[s]
            if track:
                parent[s] = -1
            queue[(head + size) % cap] = s
            size += 1
    best = -1
    best_at = -1
    while size > 0:
        u = queue[head]
        head = (head + 1) % cap
        size -= 1
        du = dist[u]
        if is_target[u]:
            if early:
                return du, u
            if best < 0 or du < best:
                best = du
                best_at = u
        if enter[u] == ENDPOINT:
            continue
        for off in offsets:
            v = u + off
            if enter[v] == NO_ENTRY or dist[v] >= 0:
                continue
            w = weight[v]
            dist[v] = du + w
            if track:
                parent[v] = u
            if w == 0:
                head = (head - 1) % cap
                queue[head] = v
            else:
                queue[(head + size) % cap] = v
            size += 1
    return best, best_at


class Workspace:
    """Reusable BFS buffers for repeated searches on masks of one grid size."""

    def __init__(self, ncells: int, witness: bool = False):
        self.dist = np.empty(ncells, dtype=np.int32)
        self.queue = np.empty(ncells, dtype=np.int64)
        self.parent = np.empty(ncells if witness else 0, dtype=np.int64)

    def run(self, weight, enter, sources, is_target, offsets, early=True):
        self.dist.fill(-1)
        return zero_one_bfs(weight, enter, sources, is_target, offsets, early, self.dist, self.queue, self.parent)


@dataclass(frozen=True)
class PassageResult:
    time: int  # UNREACHABLE if no admissible path
    witness_path: tuple[SiteCoord, ...] | None = None

    @property
    def reachable(self) -> bool:
        return self.time != UNREACHABLE


@dataclass(frozen=True)
class PassageProblem:
    config: Configuration
    sources: tuple[SiteCoord, ...]
    targets: tuple[SiteCoord, ...]
    constraint: Callable[[SiteCoord], bool] | None = None  # admissible interior sites

    @property
    def mask(self) -> RegionMask:
        return self.config.mask

    def __post_init__(self):
        if not self.sources or not self.targets:
            raise ValueError("sources and targets must be nonempty")
        for s in self.sources + self.targets:
            if self.mask.code_of(s) != IN:
                raise ValueError(f"{tuple(s)} is not a site of the mask")


def _enter_array(mask: RegionMask, constraint, target_flat: np.ndarray) -> np.ndarray:
    enter = np.zeros(mask.flat_codes.size, dtype=np.uint8)
    if constraint is None:
        enter[mask.site_flat] = PASS
    else:
        c = mask.coords(mask.site_flat)
        ok = np.fromiter((bool(constraint(SiteCoord(int(a), int(b)))) for a, b in c), dtype=bool, count=len(c))
        enter[mask.site_flat[ok]] = PASS
        t = target_flat[enter[target_flat] == NO_ENTRY]
        enter[t] = ENDPOINT
    return enter


def _solve(mask: RegionMask, weight, enter, src, tgt, witness: bool) -> PassageResult:
    is_target = np.zeros(mask.flat_codes.size, dtype=np.uint8)
    is_target[tgt] = 1
    enter[src] = PASS
    ws = Workspace(mask.flat_codes.size, witness)
    t, at = ws.run(weight, enter, np.asarray(src, dtype=np.int64), is_target, mask.offsets, True)
    if t < 0:
        return PassageResult(UNREACHABLE)
    path = None
    if witness:
        seq = []
        u = at
        while u != -1:
            seq.append(mask.coord(u))
            u = ws.parent[u]
        path = tuple(reversed(seq))
    return PassageResult(int(t), path)


def passage_time(problem: PassageProblem, witness: bool = False) -> PassageResult:
    mask = problem.mask
    src = np.array([mask.flat(s) for s in problem.sources], dtype=np.int64)
    tgt = np.array([mask.flat(s) for s in problem.targets], dtype=np.int64)
    enter = _enter_array(mask, problem.constraint, tgt)
    return _solve(mask, problem.config.color_grid(), enter, src, tgt, witness)


def path_time(config: Configuration, path: Sequence[Sequence[int]]) -> int:
    """Summed site weights of ``path``, endpoints included."""
    return sum(config.bit(s) for s in path)


def _require(config: Configuration, spec: RegionSpec):
    if config.mask.spec != spec:
        raise RegionError(f"configuration lives on {config.mask.spec.header()}, expected {spec.header()}")


def _adjacent(mask: RegionMask, code: int) -> tuple[SiteCoord, ...]:
    return tuple(mask.coord(f) for f in mask.sites_adjacent_to(code))


def c_n_plus(n: int, config: Configuration, witness: bool = False) -> int | PassageResult:
    """Passage time from the origin to the sites next to the half-circular boundary."""
    _require(config, RegionSpec.half_disk(n))
    res = passage_time(PassageProblem(config, (SiteCoord(0, 0),), _adjacent(config.mask, DO)), witness)
    return res if witness else res.time


def T_plus(r: int, R: int, config: Configuration, witness: bool = False) -> int | PassageResult:
    """Passage time across the half-annulus, inner boundary to outer boundary."""
    _require(config, RegionSpec.half_annulus(r, R))
    mask = config.mask
    res = passage_time(PassageProblem(config, _adjacent(mask, DI), _adjacent(mask, DO)), witness)
    return res if witness else res.time


def strip_enter(mask: RegionMask) -> np.ndarray:
    """Interior sites strictly between the two lines pass; the top row is endpoint-only."""
    m, n, _ = mask.spec.params
    enter = np.zeros(mask.flat_codes.size, dtype=np.uint8)
    b = mask.coords(mask.site_flat)[:, 1]
    enter[mask.site_flat[(b > 2 * m) & (b < 2 * n)]] = PASS
    enter[mask.site_flat[b == 2 * n]] = ENDPOINT
    return enter


def cylinder_times_grid(mask: RegionMask, weight: np.ndarray, ws: Workspace, enter=None, top=None) -> tuple[int, int]:
    """(t_mn, s_mn) on a strip mask from one search stopped at the far terminal.

    When the terminal pops with distance t every site of H_n closer than t has
    already been settled, so s_mn is the minimum of t and the settled top-row
    distances.
    """
    m, n, _ = mask.spec.params
    if enter is None:
        enter = strip_enter(mask)
    if top is None:
        top = mask.site_flat[mask.coords(mask.site_flat)[:, 1] == 2 * n]
    src = np.array([mask.flat((-m, 2 * m))], dtype=np.int64)
    enter[src] = PASS
    goal = mask.flat((-n, 2 * n))
    is_target = np.zeros(mask.flat_codes.size, dtype=np.uint8)
    is_target[goal] = 1
    t, _ = ws.run(weight, enter, src, is_target, mask.offsets, True)
    d = ws.dist[top]
    d = d[d >= 0]
    s = min(int(t), int(d.min())) if d.size else int(t)
    return int(t), s


def cylinder_times(m: int, n: int, config: Configuration) -> tuple[int, int]:
    """(t_mn, s_mn): source (-m, 2m); target (-n, 2n), resp. the whole line H_n.

    All non-endpoint path sites lie strictly between H_m and H_n.
    """
    mask = config.mask
    if mask.spec.variant != "strip" or mask.spec.params[:2] != (m, n):
        raise RegionError(f"configuration lives on {mask.spec.header()}, expected a strip({m},{n}) mask")
    return cylinder_times_grid(mask, config.color_grid(), Workspace(mask.flat_codes.size))


def sector_time(alpha: float, delta: float, config: Configuration) -> int:
    """Passage time from the site at the apex to the sites next to the circular arc."""
    _require(config, RegionSpec.sector(alpha, delta))
    return passage_time(PassageProblem(config, (SiteCoord(0, 0),), _adjacent(config.mask, DO))).time


def corner_angle(vertices, k: int) -> float:
    """Interior angle of a simple polygon at vertex ``k``."""
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    area2 = np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
    p, q, r = v[(k - 1) % n], v[k], v[(k + 1) % n]
    u, w = p - q, r - q
    # counterclockwise turn from q->r to q->p for a counterclockwise polygon
    ang = math.atan2(w[0] * u[1] - w[1] * u[0], w @ u)
    return (ang if area2 > 0 else -ang) % (2 * math.pi)


def _corner_index(vertices, corner) -> int:
    if isinstance(corner, (int, np.integer)):
        if not 0 <= corner < len(vertices):
            raise ValueError(f"corner index {corner} out of range")
        return int(corner)
    for k, v in enumerate(vertices):
        if abs(v[0] - corner[0]) < 1e-12 and abs(v[1] - corner[1]) < 1e-12:
            return k
    raise ValueError(f"{corner} is not a polygon vertex")


def polygon_corner_sites(mask: RegionMask, corner_a, corner_b) -> tuple[SiteCoord, SiteCoord]:
    verts, delta = mask.spec.params
    ka, kb = _corner_index(verts, corner_a), _corner_index(verts, corner_b)
    pa = (verts[ka][0] / delta, verts[ka][1] / delta)
    pb = (verts[kb][0] / delta, verts[kb][1] / delta)
    return nearest_site(mask, pa), nearest_site(mask, pb)


def polygon_corner_time(polygon, delta: float, corner_a, corner_b, config: Configuration) -> int:
    """Passage time between the lattice sites nearest to two polygon corners."""
    _require(config, RegionSpec.polygon(polygon, delta))
    sa, sb = polygon_corner_sites(config.mask, corner_a, corner_b)
    return passage_time(PassageProblem(config, (sa,), (sb,))).time
