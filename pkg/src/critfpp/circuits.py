"""Disjoint yellow half-circuits, interface half-loops and the colour switch.

On a half-annulus mask the peeling kernel labels every site by its position
relative to the nested yellow half-circuits ``C_1`` (outermost) ... ``C_n``:

* ``mark == -k``: the site belongs to ``C_k``;
* ``mark == k``: the site lies strictly inside ``C_k`` and outside ``C_{k+1}``
  (``k == 0`` is outside ``C_1``, ``k == n`` is between ``C_n`` and the inner
  boundary).

``C_{k+1}`` is taken as the yellow frontier of the region that is blue-reachable
from ``C_k`` (from the outer boundary for ``k == 0``), and peeling stops as soon as
a blue crossing to the inner boundary exists.

Interface curves live on the dual hexagon edges.  The trace keeps the yellow
cell on one fixed side; with inner/left/right boundary cells open it stops at
the first hexagon vertex touching an open cell.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .fpp import PASS, zero_one_bfs
from .lattice import DI, DL, DO, DR, IN, DualEdge, RegionError, RegionMask, SiteCoord, column_flat
from .percolation import BLUE, OPEN, BoundaryColoring, Configuration, OUTER_BLUE

# --------------------------------------------------------------------------
# kernels


@numba.njit(cache=True, nogil=True)
def _adj_code(codes, offsets, s, code):
    for off in offsets:
        if codes[s + off] == code:
            return True
    return False


@numba.njit(cache=True, nogil=True)
def _adj_outer(codes, mark, offsets, s, k):
    """Is site ``s`` next to the current outer delimiter (Δ_o or C_k)?"""
    for off in offsets:
        t = s + off
        if k == 0:
            if codes[t] == DO:
                return True
        elif codes[t] == IN and mark[t] == -k:
            return True
    return False


@numba.njit(cache=True, nogil=True)
def peel(codes, color, site_flat, offsets, mark, vis, stack):
    """Label sites by nested yellow half-circuits; returns their number."""
    for s in site_flat:
        mark[s] = 0
        vis[s] = 0
    k = 0
    while True:
        st_e = 2 * k + 1
        st_q = 2 * k + 2
        # blue sites of W reachable from the outer delimiter
        top = 0
        for s in site_flat:
            if mark[s] == k and color[s] == 0 and _adj_outer(codes, mark, offsets, s, k):
                vis[s] = st_e
                stack[top] = s
                top += 1
        while top > 0:
            top -= 1
            u = stack[top]
            for off in offsets:
                v = u + off
                if codes[v] == IN and mark[v] == k and color[v] == 0 and vis[v] != st_e:
                    vis[v] = st_e
                    stack[top] = v
                    top += 1
        for s in site_flat:
            if _adj_code(codes, offsets, s, DI):
                if vis[s] == st_e and mark[s] == k:
                    return k
                if k > 0 and mark[s] == -k:
                    return k
        # Q: the part of W not blue-reachable from outside, seen from Δ_i
        for s in site_flat:
            if mark[s] == k and vis[s] != st_e and _adj_code(codes, offsets, s, DI):
                vis[s] = st_q
                stack[top] = s
                top += 1
        while top > 0:
            top -= 1
            u = stack[top]
            for off in offsets:
                v = u + off
                if codes[v] == IN and mark[v] == k and vis[v] != st_e and vis[v] != st_q:
                    vis[v] = st_q
                    stack[top] = v
                    top += 1
        # frontier of Q against the outer side: the next circuit
        nf = 0
        for s in site_flat:
            if vis[s] == st_q and mark[s] == k:
                hit = _adj_outer(codes, mark, offsets, s, k)
                if not hit:
                    for off in offsets:
                        t = s + off
                        if codes[t] == IN and vis[t] == st_e and mark[t] == k:
                            hit = True
                            break
                if hit:
                    mark[s] = -(k + 1)
                    nf += 1
        if nf == 0:
            return k
        # strictly inside the new circuit: Q minus the frontier, seen from Δ_i
        for s in site_flat:
            if vis[s] == st_q and mark[s] == k and _adj_code(codes, offsets, s, DI):
                mark[s] = k + 1
                stack[top] = s
                top += 1
        while top > 0:
            top -= 1
            u = stack[top]
            for off in offsets:
                v = u + off
                if codes[v] == IN and vis[v] == st_q and mark[v] == k:
                    mark[v] = k + 1
                    stack[top] = v
                    top += 1
        k += 1


@numba.njit(cache=True, nogil=True)
def trace(eff, offsets, u0, i0, buf_u, buf_i):
    """Trace the interface through edge (u0 yellow, u0 + d_i0 blue) both ways.

    Returns ``(n_edges, end_forward, end_backward, closed)``; the edges are
    written to ``buf_u``/``buf_i`` as (yellow cell, direction to the blue cell),
    backward part reversed first so that the sequence is ordered.  Ends are the
    flat indices of the open cells where the trace stopped.
    """
    cap = buf_u.size
    # backward half, written from the middle of the buffer downwards
    mid = cap // 2
    u = u0
    i = i0
    lo = mid
    end_b = -1
    closed = False
    while True:
        w = u + offsets[(i + 5) % 6]
        c = eff[w]
        if c < 0:
            end_b = w
            break
        if c == 1:
            u = w
            i = (i + 1) % 6
        else:
            i = (i + 5) % 6
        if u == u0 and i == i0:
            closed = True
            break
        lo -= 1
        buf_u[lo] = u
        buf_i[lo] = i
    # reverse the backward part into the front of the buffer
    nb = mid - lo
    for t in range(nb):
        buf_u[t] = buf_u[mid - 1 - t]
        buf_i[t] = buf_i[mid - 1 - t]
    n = nb
    buf_u[n] = u0
    buf_i[n] = i0
    n += 1
    if closed:
        return n, -1, -1, True
    u = u0
    i = i0
    end_f = -1
    while True:
        w = u + offsets[(i + 1) % 6]
        c = eff[w]
        if c < 0:
            end_f = w
            break
        if c == 1:
            u = w
            i = (i + 5) % 6
        else:
            i = (i + 1) % 6
        buf_u[n] = u
        buf_i[n] = i
        n += 1
    return n, end_f, end_b, False


@numba.njit(cache=True, nogil=True)
def _edge_key(u, v, ncell):
    if u < v:
        return u * ncell + v
    return v * ncell + u


@numba.njit(cache=True, nogil=True)
def count_half_loops(eff, codes, offsets, col, buf_u, buf_i, keys):
    """Number of interface curves crossing the column with ends on Δ_l and Δ_r."""
    ncell = eff.size
    found = 0
    for j in range(col.size - 1):
        a = col[j]
        b = col[j + 1]
        ca = eff[a]
        cb = eff[b]
        if ca < 0 or cb < 0 or ca == cb:
            continue
        if ca == 1:
            u0 = a
            i0 = 1
        else:
            u0 = b
            i0 = 4
        n, ef, eb, closed = trace(eff, offsets, u0, i0, buf_u, buf_i)
        if closed:
            continue
        cf = codes[ef]
        cb2 = codes[eb]
        if not ((cf == DL and cb2 == DR) or (cf == DR and cb2 == DL)):
            continue
        kmin = _edge_key(buf_u[0], buf_u[0] + offsets[buf_i[0]], ncell)
        for t in range(1, n):
            kk = _edge_key(buf_u[t], buf_u[t] + offsets[buf_i[t]], ncell)
            if kk < kmin:
                kmin = kk
        dup = False
        for t in range(found):
            if keys[t] == kmin:
                dup = True
                break
        if not dup:
            keys[found] = kmin
            found += 1
    return found


@numba.njit(cache=True, nogil=True)
def switch_flags(mark, site_flat, out):
    """1 where the colour switch flips the site: odd layers and even circuits."""
    for k in range(site_flat.size):
        m = mark[site_flat[k]]
        out[k] = 1 if (m > 0 and m % 2 == 1) or (m < 0 and (-m) % 2 == 0) else 0


@numba.njit(cache=True, nogil=True)
def _set_eff_sites(eff, site_flat, bits):
    for k in range(site_flat.size):
        eff[site_flat[k]] = bits[k]


# --------------------------------------------------------------------------
# exhaustive audit kernel


@numba.njit(cache=True, nogil=True)
def audit_kernel(codes, site_flat, offsets, col, src, tgt_flag, enter, corrupt):
    """Enumerate all configurations of a small half-annulus mask.

    Returns (hist_T, hist_rho, hist_N, n_mismatch_T_rho, n_noninjective,
    n_bad_image).  ``corrupt`` flips one extra site of the image when the level
    is 2 or more (negative control).
    """
    nsite = site_flat.size
    ncell = codes.size
    total = 1 << nsite
    color = np.zeros(ncell, dtype=np.int8)
    eff = np.full(ncell, -1, dtype=np.int8)
    for f in range(ncell):
        if codes[f] == DO:
            eff[f] = 0
    mark = np.zeros(ncell, dtype=np.int32)
    vis = np.zeros(ncell, dtype=np.int32)
    stack = np.empty(ncell, dtype=np.int64)
    dist = np.empty(ncell, dtype=np.int32)
    queue = np.empty(ncell, dtype=np.int64)
    parent = np.empty(0, dtype=np.int64)
    bits = np.empty(nsite, dtype=np.int8)
    img = np.empty(nsite, dtype=np.int8)
    flags = np.empty(nsite, dtype=np.int8)
    buf_u = np.empty(6 * ncell + 8, dtype=np.int64)
    buf_i = np.empty(6 * ncell + 8, dtype=np.int64)
    keys = np.empty(col.size + 1, dtype=np.int64)
    seen = np.zeros(total, dtype=np.uint8)
    hist_t = np.zeros(nsite + 2, dtype=np.int64)
    hist_r = np.zeros(nsite + 2, dtype=np.int64)
    hist_n = np.zeros(col.size + 2, dtype=np.int64)
    bad_tr = 0
    bad_inj = 0
    bad_img = 0
    for c in range(total):
        for k in range(nsite):
            b = (c >> k) & 1
            bits[k] = b
            color[site_flat[k]] = b
        dist[:] = -1
        t, _ = zero_one_bfs(color, enter, src, tgt_flag, offsets, True, dist, queue, parent)
        n = peel(codes, color, site_flat, offsets, mark, vis, stack)
        hist_t[t] += 1
        hist_r[n] += 1
        if t != n:
            bad_tr += 1
        _set_eff_sites(eff, site_flat, bits)
        hist_n[count_half_loops(eff, codes, offsets, col, buf_u, buf_i, keys)] += 1
        switch_flags(mark, site_flat, flags)
        if corrupt and n >= 2:
            flags[0] ^= 1
        code = 0
        for k in range(nsite):
            img[k] = bits[k] ^ flags[k]
            code |= np.int64(img[k]) << k
        if seen[code]:
            bad_inj += 1
        seen[code] = 1
        _set_eff_sites(eff, site_flat, img)
        if count_half_loops(eff, codes, offsets, col, buf_u, buf_i, keys) != n:
            bad_img += 1
    return hist_t, hist_r, hist_n, bad_tr, bad_inj, bad_img


# --------------------------------------------------------------------------
# Python-level API


@dataclass(frozen=True)
class HalfCircuit:
    sites: tuple[SiteCoord, ...]
    color: str = "yellow"


@dataclass(frozen=True)
class CircuitStack:
    circuits: tuple[HalfCircuit, ...]
    site_sets: tuple[frozenset, ...]  # full frontier set of each circuit

    def __len__(self):
        return len(self.circuits)


@dataclass(frozen=True)
class InterfaceCurve:
    dual_edges: tuple[DualEdge, ...]
    end_l: bool
    end_r: bool

    def to_text(self) -> str:
        return "\n".join(f"{e.left_site.a} {e.left_site.b} {e.right_site.a} {e.right_site.b}" for e in self.dual_edges)


def _require_annulus(mask: RegionMask):
    if mask.spec.variant != "half_annulus":
        raise RegionError("half-annulus mask required")


def _bits_of(mask: RegionMask, config: Configuration) -> Configuration:
    if config.mask != mask:
        raise RegionError("configuration does not live on this mask")
    return config


def peel_labels(mask: RegionMask, config: Configuration) -> tuple[int, np.ndarray]:
    """(n, mark) for the peeling of ``config``; ``mark`` is a flat int32 grid."""
    _require_annulus(mask)
    _bits_of(mask, config)
    nc = mask.flat_codes.size
    mark = np.zeros(nc, dtype=np.int32)
    n = peel(mask.flat_codes, config.color_grid(), mask.site_flat, mask.offsets, mark,
             np.zeros(nc, dtype=np.int32), np.empty(nc, dtype=np.int64))
    return int(n), mark


def _order_circuit(mask: RegionMask, flats: np.ndarray) -> tuple[SiteCoord, ...]:
    """Left-to-right lattice path inside a frontier set (BFS from the Δ_l side)."""
    members = set(int(f) for f in flats)
    codes = mask.flat_codes
    offs = [int(o) for o in mask.offsets]
    starts = [f for f in sorted(members) if any(codes[f + o] == DL for o in offs)]
    goal = {f for f in members if any(codes[f + o] == DR for o in offs)}
    prev = {f: -1 for f in starts}
    q = list(starts)
    hit = -1
    for u in q:
        if u in goal:
            hit = u
            break
        for o in offs:
            v = u + o
            if v in members and v not in prev:
                prev[v] = u
                q.append(v)
    if hit < 0:
        raise RegionError("frontier does not join the two side boundaries")
    path = []
    while hit != -1:
        path.append(mask.coord(hit))
        hit = prev[hit]
    return tuple(reversed(path))


def rho_plus(mask: RegionMask, config: Configuration) -> tuple[int, CircuitStack]:
    """Maximal number of disjoint yellow half-circuits, with the peeled stack."""
    n, mark = peel_labels(mask, config)
    circuits, sets = [], []
    for k in range(1, n + 1):
        fl = mask.site_flat[mark[mask.site_flat] == -k]
        circuits.append(HalfCircuit(_order_circuit(mask, fl)))
        sets.append(frozenset(mask.coord(f) for f in fl))
    return n, CircuitStack(tuple(circuits), tuple(sets))


def outermost_yellow_half_circuit(mask: RegionMask, config: Configuration) -> HalfCircuit | None:
    n, stack = rho_plus(mask, config)
    return stack.circuits[0] if n else None


def _check_coloring(coloring: BoundaryColoring):
    c = coloring.colors
    if c.get("o") != BLUE:
        raise ValueError("interface half-loops are defined with the outer boundary blue")
    for k in ("l", "r", "i"):
        if c.get(k, OPEN) != OPEN:
            raise ValueError("left, right and inner boundaries must be open")


def _eff(mask: RegionMask, config: Configuration) -> np.ndarray:
    eff = np.full(mask.flat_codes.size, -1, dtype=np.int8)
    eff[mask.flat_codes == DO] = 0
    eff[mask.site_flat] = config.bits.astype(np.int8)
    return eff


def count_interface_half_loops(mask: RegionMask, config: Configuration,
                               coloring: BoundaryColoring = OUTER_BLUE) -> int:
    _require_annulus(mask)
    _check_coloring(coloring)
    _bits_of(mask, config)
    nc = mask.flat_codes.size
    col = column_flat(mask)
    return int(count_half_loops(_eff(mask, config), mask.flat_codes, mask.offsets, col,
                                np.empty(6 * nc + 8, dtype=np.int64), np.empty(6 * nc + 8, dtype=np.int64),
                                np.empty(col.size + 1, dtype=np.int64)))


def interface_curves(mask: RegionMask, config: Configuration) -> list[InterfaceCurve]:
    """All distinct interface curves crossing the column (diagnostic)."""
    _require_annulus(mask)
    eff = _eff(mask, config)
    nc = eff.size
    col = column_flat(mask)
    bu = np.empty(6 * nc + 8, dtype=np.int64)
    bi = np.empty(6 * nc + 8, dtype=np.int64)
    out, keys = [], set()
    for a, b in zip(col[:-1], col[1:]):
        if eff[a] < 0 or eff[b] < 0 or eff[a] == eff[b]:
            continue
        u0, i0 = (a, 1) if eff[a] == 1 else (b, 4)
        n, ef, eb, closed = trace(eff, mask.offsets, u0, i0, bu, bi)
        edges = tuple(DualEdge.of(mask.coord(bu[t]), mask.coord(bu[t] + mask.offsets[bi[t]])) for t in range(n))
        key = min((e.left_site.b, e.left_site.a, e.right_site.b, e.right_site.a) for e in edges)
        if key in keys:
            continue
        keys.add(key)
        ends = set() if closed else {int(mask.flat_codes[ef]), int(mask.flat_codes[eb])}
        out.append(InterfaceCurve(edges, DL in ends, DR in ends))
    return out


def color_switch(mask: RegionMask, config: Configuration) -> Configuration:
    n, mark = peel_labels(mask, config)
    flags = np.empty(mask.n_sites, dtype=np.int8)
    switch_flags(mark, mask.site_flat, flags)
    return Configuration(mask, (config.bits ^ flags.astype(np.uint8)).astype(np.uint8))


def _inside(mask: RegionMask, delimiter: frozenset) -> set:
    """Sites on the Δ_i side of ``delimiter``, reached from Δ_i without crossing it."""
    codes = mask.flat_codes
    offs = [int(o) for o in mask.offsets]
    block = {mask.flat(s) for s in delimiter}
    seeds = [f for f in mask.sites_adjacent_to(DI).tolist() if f not in block]
    seen = set(seeds)
    q = list(seeds)
    for u in q:
        for o in offs:
            v = u + o
            if codes[v] == IN and v not in block and v not in seen:
                seen.add(v)
                q.append(v)
    return {mask.coord(f) for f in seen}


def between_region(mask: RegionMask, outer, inner) -> frozenset:
    """Sites strictly between two delimiters.

    ``outer`` is a half-circuit (or its site set) or ``"boundary_o"``; ``inner``
    is a half-circuit (or site set) or ``"boundary_i"``.
    """
    _require_annulus(mask)

    def as_set(x):
        return frozenset(SiteCoord(*s) for s in (x.sites if isinstance(x, HalfCircuit) else x))

    if isinstance(outer, str):
        if outer != "boundary_o":
            raise ValueError(outer)
        o_set, o_in = frozenset(), set(mask.sites)
    else:
        o_set = as_set(outer)
        o_in = _inside(mask, o_set)
    if isinstance(inner, str):
        if inner != "boundary_i":
            raise ValueError(inner)
        i_set, i_in = frozenset(), set()
    else:
        i_set = as_set(inner)
        i_in = _inside(mask, i_set)
        if not i_set <= o_in:
            raise ValueError("inner delimiter is not strictly inside the outer one")
    return frozenset(o_in - i_set - i_in)


def audit_arrays(mask: RegionMask):
    """Inputs of :func:`audit_kernel` for a half-annulus mask."""
    _require_annulus(mask)
    enter = np.zeros(mask.flat_codes.size, dtype=np.uint8)
    enter[mask.site_flat] = PASS
    src = mask.sites_adjacent_to(DI)
    tgt = np.zeros(mask.flat_codes.size, dtype=np.uint8)
    tgt[mask.sites_adjacent_to(DO)] = 1
    return mask.flat_codes, mask.site_flat, mask.offsets, column_flat(mask), src, tgt, enter


__all__ = [
    "CircuitStack", "HalfCircuit", "InterfaceCurve", "audit_arrays", "audit_kernel", "between_region",
    "color_switch", "count_interface_half_loops", "interface_curves", "outermost_yellow_half_circuit",
    "peel_labels", "rho_plus",
]
