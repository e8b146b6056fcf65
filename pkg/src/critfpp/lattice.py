"""Triangular lattice, hexagonal dual cells, and the finite regions built on them.

Sites use axial coordinates ``(a, b)`` with Euclidean position
``a*(1, 0) + b*(1/2, sqrt(3)/2)``.  Every site carries a regular hexagon of
apothem 1/2 whose edges bisect the six lattice bonds.  With horizontal bonds
these hexagons are pointy-topped (a vertex straight above the centre).

A :class:`RegionMask` stores its sites and classified external boundary on a
small padded integer grid indexed ``[b - b0, a - a0]``; flat indices into that
grid are what the numba kernels in the other modules operate on.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numba
import numpy as np
from scipy import ndimage

log = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
CIRCUMRADIUS = 1.0 / SQRT3
MAX_SITES = 10**9

NEIGHBOR_OFFSETS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))

# cell codes on the mask grid
OUTSIDE, IN, DL, DR, DI, DO = 0, 1, 2, 3, 4, 5
CLASS_NAMES = {IN: "in", DL: "dl", DR: "dr", DI: "di", DO: "do"}
CLASS_CODES = {v: k for k, v in CLASS_NAMES.items()}

# 6-neighbour structuring element on the [b, a] grid
_STRUCT = np.zeros((3, 3), dtype=bool)
for _da, _db in NEIGHBOR_OFFSETS:
    _STRUCT[1 + _db, 1 + _da] = True
_STRUCT[1, 1] = True


class RegionError(ValueError):
    """Empty or disconnected region, or an invalid region spec."""


class ResourceGuardError(RuntimeError):
    """Refusal to allocate an oversized lattice region."""


class SiteCoord(NamedTuple):
    a: int
    b: int


def neighbors(s: Sequence[int]) -> list[SiteCoord]:
    """The 6 neighbours of ``s``, counterclockwise from ``(1, 0)``."""
    a, b = s
    return [SiteCoord(a + da, b + db) for da, db in NEIGHBOR_OFFSETS]


def position(s: Sequence[int]) -> tuple[float, float]:
    a, b = s
    return (a + 0.5 * b, 0.5 * SQRT3 * b)


def hexagon_vertices(s: Sequence[int]) -> np.ndarray:
    """Counterclockwise vertices (6, 2) of the dual hexagon of ``s``."""
    x, y = position(s)
    ang = np.pi / 6 + np.arange(6) * np.pi / 3
    return np.column_stack([x + CIRCUMRADIUS * np.cos(ang), y + CIRCUMRADIUS * np.sin(ang)])


def canonical_order_key(s: Sequence[int]) -> tuple[int, int]:
    """Sort key of the canonical site order, lexicographic in ``(b, a)``."""
    return (s[1], s[0])


@dataclass(frozen=True)
class DualEdge:
    """Hexagon edge separating two neighbouring sites, stored canonically."""

    left_site: SiteCoord
    right_site: SiteCoord

    @staticmethod
    def of(u: Sequence[int], v: Sequence[int]) -> "DualEdge":
        u, v = SiteCoord(*u), SiteCoord(*v)
        if (v.a - u.a, v.b - u.b) not in NEIGHBOR_OFFSETS:
            raise ValueError(f"{u} and {v} are not neighbours")
        if canonical_order_key(v) < canonical_order_key(u):
            u, v = v, u
        return DualEdge(u, v)

    def endpoints(self) -> np.ndarray:
        """The two hexagon vertices shared by both cells."""
        (x0, y0), (x1, y1) = position(self.left_site), position(self.right_site)
        mx, my = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        # edge is perpendicular to the bond, half-length 1/(2 sqrt 3)
        h = 0.5 * CIRCUMRADIUS
        return np.array([[mx - h * (y1 - y0), my + h * (x1 - x0)],
                         [mx + h * (y1 - y0), my - h * (x1 - x0)]])


# --------------------------------------------------------------------------
# region specifications


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


@dataclass(frozen=True)
class RegionSpec:
    variant: str
    params: tuple

    def __post_init__(self):
        v, p = self.variant, self.params
        if v == "half_disk":
            (n,) = p
            if not (isinstance(n, (int, np.integer)) and n >= 1):
                raise RegionError("half_disk needs a positive integer radius")
        elif v == "half_annulus":
            r, R = p
            if not (isinstance(r, (int, np.integer)) and isinstance(R, (int, np.integer)) and 1 <= r < R):
                raise RegionError("half_annulus needs integers 1 <= r < R")
        elif v == "sector":
            alpha, delta = p
            if not (0.0 < alpha < 2 * math.pi) or not delta > 0:
                raise RegionError("sector needs alpha in (0, 2pi) and delta > 0")
        elif v == "strip":
            m, n, hw = p
            if not (isinstance(m, (int, np.integer)) and isinstance(n, (int, np.integer)) and m < n):
                raise RegionError("strip needs integers m < n")
            if not hw > 0:
                raise RegionError("strip half-width must be positive")
        elif v == "polygon":
            verts, delta = p
            if len(verts) < 3 or not delta > 0:
                raise RegionError("polygon needs >= 3 vertices and delta > 0")
        else:
            raise RegionError(f"unknown region variant {v!r}")

    # constructors
    @staticmethod
    def half_disk(n: int) -> "RegionSpec":
        return RegionSpec("half_disk", (int(n),))

    @staticmethod
    def half_annulus(r: int, R: int) -> "RegionSpec":
        return RegionSpec("half_annulus", (int(r), int(R)))

    @staticmethod
    def sector(alpha: float, delta: float) -> "RegionSpec":
        return RegionSpec("sector", (float(alpha), float(delta)))

    @staticmethod
    def strip(m: int, n: int, halfwidth: float | None = None) -> "RegionSpec":
        if halfwidth is None:
            halfwidth = default_strip_halfwidth(m, n)
        return RegionSpec("strip", (int(m), int(n), float(halfwidth)))

    @staticmethod
    def polygon(vertices, delta: float) -> "RegionSpec":
        verts = tuple((float(x), float(y)) for x, y in vertices)
        return RegionSpec("polygon", (verts, float(delta)))

    def header(self) -> str:
        if self.variant == "polygon":
            verts, delta = self.params
            pts = ";".join(f"{_fmt(x)},{_fmt(y)}" for x, y in verts)
            return f"region polygon {_fmt(delta)} {pts}"
        return "region " + " ".join([self.variant] + [_fmt(x) for x in self.params])

    @property
    def mask_id(self) -> str:
        return self.header()[len("region "):].replace(" ", ":")

    @staticmethod
    def parse(line: str) -> "RegionSpec":
        tok = line.split()
        if len(tok) < 3 or tok[0] != "region":
            raise RegionError(f"bad region header {line!r}")
        v = tok[1]
        if v == "half_disk":
            return RegionSpec.half_disk(int(tok[2]))
        if v == "half_annulus":
            return RegionSpec.half_annulus(int(tok[2]), int(tok[3]))
        if v == "sector":
            return RegionSpec.sector(float(tok[2]), float(tok[3]))
        if v == "strip":
            return RegionSpec.strip(int(tok[2]), int(tok[3]), float(tok[4]))
        if v == "polygon":
            verts = [tuple(float(c) for c in p.split(",")) for p in tok[3].split(";")]
            return RegionSpec.polygon(verts, float(tok[2]))
        raise RegionError(f"unknown region variant {v!r}")


def default_strip_halfwidth(m: int, n: int) -> float:
    """Horizontal half-width of the finite window used for strip regions."""
    return SQRT3 * (n - m)


# --------------------------------------------------------------------------
# region masks


@dataclass(frozen=True, eq=False)
class RegionMask:
    spec: RegionSpec
    origin: tuple[int, int]  # (a0, b0) of grid cell [0, 0]
    codes: np.ndarray  # int8 grid indexed [b - b0, a - a0]
    terminals: tuple[SiteCoord, ...] = field(default=())

    def __eq__(self, other):
        return (isinstance(other, RegionMask) and self.spec == other.spec and self.origin == other.origin
                and self.terminals == other.terminals and np.array_equal(self.codes, other.codes))

    __hash__ = object.__hash__

    @property
    def width(self) -> int:
        return self.codes.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.codes.shape

    @cached_property
    def flat_codes(self) -> np.ndarray:
        return np.ascontiguousarray(self.codes).ravel()

    @cached_property
    def offsets(self) -> np.ndarray:
        w = self.width
        return np.array([da + db * w for da, db in NEIGHBOR_OFFSETS], dtype=np.int64)

    @cached_property
    def site_flat(self) -> np.ndarray:
        """Flat grid indices of the sites, in canonical (b, a) order."""
        return np.flatnonzero(self.flat_codes == IN).astype(np.int64)

    @property
    def n_sites(self) -> int:
        return int(self.site_flat.size)

    def flat(self, s: Sequence[int]) -> int:
        a, b = s
        i, j = b - self.origin[1], a - self.origin[0]
        if not (0 <= i < self.codes.shape[0] and 0 <= j < self.codes.shape[1]):
            return -1
        return i * self.width + j

    def coord(self, flat: int) -> SiteCoord:
        i, j = divmod(int(flat), self.width)
        return SiteCoord(j + self.origin[0], i + self.origin[1])

    def coords(self, flats: np.ndarray) -> np.ndarray:
        """(k, 2) array of ``(a, b)`` for flat indices."""
        i, j = np.divmod(np.asarray(flats, dtype=np.int64), self.width)
        return np.column_stack([j + self.origin[0], i + self.origin[1]])

    def code_of(self, s: Sequence[int]) -> int:
        f = self.flat(s)
        return OUTSIDE if f < 0 else int(self.flat_codes[f])

    def class_of(self, s: Sequence[int]) -> str | None:
        return CLASS_NAMES.get(self.code_of(s))

    def index_of(self, s: Sequence[int]) -> int:
        """Position of site ``s`` in canonical order, or -1."""
        f = self.flat(s)
        if f < 0 or self.flat_codes[f] != IN:
            return -1
        return int(np.searchsorted(self.site_flat, f))

    def _set(self, code: int) -> frozenset:
        return frozenset(SiteCoord(int(a), int(b)) for a, b in self.coords(np.flatnonzero(self.flat_codes == code)))

    @cached_property
    def sites(self) -> frozenset:
        return self._set(IN)

    @cached_property
    def boundary_l(self) -> frozenset:
        return self._set(DL)

    @cached_property
    def boundary_r(self) -> frozenset:
        return self._set(DR)

    @cached_property
    def boundary_i(self) -> frozenset:
        return self._set(DI)

    @cached_property
    def boundary_o(self) -> frozenset:
        return self._set(DO)

    @cached_property
    def bounding_box(self) -> tuple[int, int, int, int]:
        """(a_min, a_max, b_min, b_max) over the sites."""
        c = self.coords(self.site_flat)
        return (int(c[:, 0].min()), int(c[:, 0].max()), int(c[:, 1].min()), int(c[:, 1].max()))

    def sites_adjacent_to(self, code: int) -> np.ndarray:
        """Flat indices (canonical order) of sites with a neighbour of class ``code``."""
        fc = self.flat_codes
        s = self.site_flat
        hit = np.zeros(s.size, dtype=bool)
        for off in self.offsets:
            hit |= fc[s + off] == code
        return s[hit]

    # serialization
    def to_text(self) -> str:
        lines = [self.spec.header()]
        fl = np.flatnonzero(self.flat_codes)
        c = self.coords(fl)
        codes = self.flat_codes[fl]
        order = np.lexsort((c[:, 0], c[:, 1]))
        for k in order:
            lines.append(f"{c[k, 0]} {c[k, 1]} {CLASS_NAMES[int(codes[k])]}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "RegionMask":
        rows = text.strip("\n").split("\n")
        spec = RegionSpec.parse(rows[0])
        entries = []
        for r in rows[1:]:
            a, b, cls = r.split()
            if cls not in CLASS_CODES:
                raise RegionError(f"unknown cell class {cls!r}")
            entries.append((int(a), int(b), CLASS_CODES[cls]))
        arr = np.array(entries, dtype=np.int64).reshape(-1, 3)
        return _assemble(spec, arr[:, 0], arr[:, 1], arr[:, 2].astype(np.int8))


def _assemble(spec: RegionSpec, a: np.ndarray, b: np.ndarray, code: np.ndarray) -> RegionMask:
    """Lay cells out on a grid padded by one OUTSIDE cell on every side."""
    a0, b0 = int(a.min()) - 1, int(b.min()) - 1
    h, w = int(b.max()) - b0 + 2, int(a.max()) - a0 + 2
    grid = np.zeros((h, w), dtype=np.int8)
    grid[b - b0, a - a0] = code
    return RegionMask(spec, (a0, b0), grid, _terminals(spec))


def _terminals(spec: RegionSpec) -> tuple[SiteCoord, ...]:
    if spec.variant == "strip":
        m, n, _ = spec.params
        return (SiteCoord(-m, 2 * m), SiteCoord(-n, 2 * n))
    return ()


# --------------------------------------------------------------------------
# membership predicates

_EPS = 1e-12


@numba.njit(cache=True, nogil=True)
def _clip(xs, ys, n, cx, cy, ox, oy):
    """Sutherland-Hodgman clip of polygon (xs, ys)[:n] to cx*x + cy*y >= 0."""
    m = 0
    for i in range(n):
        j = (i + 1) % n
        fi = cx * xs[i] + cy * ys[i]
        fj = cx * xs[j] + cy * ys[j]
        ini = fi >= -_EPS
        inj = fj >= -_EPS
        if ini:
            ox[m] = xs[i]
            oy[m] = ys[i]
            m += 1
        if ini != inj:
            t = fi / (fi - fj)
            ox[m] = xs[i] + t * (xs[j] - xs[i])
            oy[m] = ys[i] + t * (ys[j] - ys[i])
            m += 1
    return m


@numba.njit(cache=True, nogil=True)
def _dist_origin(xs, ys, n):
    """Distance from the origin to a convex counterclockwise polygon."""
    if n == 0:
        return np.inf
    area2 = 0.0
    for i in range(n):
        j = (i + 1) % n
        area2 += xs[i] * ys[j] - xs[j] * ys[i]
    # a sliver left by clipping against a ray it only touches has no interior
    inside = n >= 3 and area2 > _EPS
    best = np.inf
    for i in range(n):
        j = (i + 1) % n
        ex = xs[j] - xs[i]
        ey = ys[j] - ys[i]
        if ex * (-ys[i]) - ey * (-xs[i]) < -_EPS:
            inside = False
        ll = ex * ex + ey * ey
        t = 0.0
        if ll > 0.0:
            t = min(1.0, max(0.0, -(xs[i] * ex + ys[i] * ey) / ll))
        dx = xs[i] + t * ex
        dy = ys[i] + t * ey
        d = math.sqrt(dx * dx + dy * dy)
        if d < best:
            best = d
    return 0.0 if inside else best


@numba.njit(cache=True, nogil=True)
def _hex_meets_wedge_disk(x, y, t1, t2, R, bx, by, cx_, cy_):
    """Closed hexagon at (x, y) meets {r e^{it}: r <= R, t1 <= t <= t2}, t2 - t1 <= pi."""
    for k in range(6):
        ang = math.pi / 6 + k * math.pi / 3
        bx[k] = x + CIRCUMRADIUS * math.cos(ang)
        by[k] = y + CIRCUMRADIUS * math.sin(ang)
    n = _clip(bx, by, 6, -math.sin(t1), math.cos(t1), cx_, cy_)
    if n == 0:
        return False
    n = _clip(cx_, cy_, n, math.sin(t2), -math.cos(t2), bx, by)
    if n == 0:
        return False
    return _dist_origin(bx, by, n) <= R * (1.0 + 1e-12) + 1e-12


@numba.njit(cache=True, nogil=True)
def _sector_grid(a0, b0, h, w, alpha, R):
    out = np.zeros((h, w), dtype=np.bool_)
    bx = np.empty(16)
    by = np.empty(16)
    cx_ = np.empty(16)
    cy_ = np.empty(16)
    s3 = math.sqrt(3.0)
    if alpha <= math.pi:
        nw = 1
    else:
        nw = 2
    for i in range(h):
        b = b0 + i
        y = 0.5 * s3 * b
        for j in range(w):
            x = a0 + j + 0.5 * b
            d = math.sqrt(x * x + y * y)
            if d > R + CIRCUMRADIUS + 1e-9:
                continue
            hit = False
            for q in range(nw):
                t1 = 0.0 if q == 0 else math.pi
                t2 = alpha if (nw == 1 or q == 1) else math.pi
                if d + CIRCUMRADIUS < R - 1e-9:
                    f1 = -math.sin(t1) * x + math.cos(t1) * y
                    f2 = math.sin(t2) * x - math.cos(t2) * y
                    if f1 > CIRCUMRADIUS + 1e-9 and f2 > CIRCUMRADIUS + 1e-9:
                        hit = True
                        break
                if _hex_meets_wedge_disk(x, y, t1, t2, R, bx, by, cx_, cy_):
                    hit = True
                    break
            out[i, j] = hit
    return out


def _sector_box(alpha: float, R: float) -> tuple[int, int, int, int]:
    bmax = int(math.ceil((R + 1.0) * 2.0 / SQRT3)) + 2
    bmin = -3 if alpha <= math.pi else -bmax
    half = int(math.ceil(R + 1.0)) + 2
    a0 = -half - (bmax + 1) // 2 - 1
    a1 = half + (abs(bmin) + 1) // 2 + 1
    return a0, bmin, bmax - bmin + 1, a1 - a0 + 1


def _guard(estimate: float):
    if estimate > MAX_SITES:
        raise ResourceGuardError(f"region would hold ~{estimate:.3g} sites (limit {MAX_SITES:.0e})")


def sector_membership(alpha: float, R: float):
    """(a0, b0, bool grid) of sites whose hexagon meets the closed sector."""
    _guard(alpha * R * R / SQRT3)
    a0, b0, h, w = _sector_box(alpha, R)
    return a0, b0, _sector_grid(a0, b0, h, w, float(alpha), float(R))


def _hexagon_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = a + 0.5 * b
    y = 0.5 * SQRT3 * b
    ang = np.pi / 6 + np.arange(7) * np.pi / 3
    return np.stack([x[:, None] + CIRCUMRADIUS * np.cos(ang), y[:, None] + CIRCUMRADIUS * np.sin(ang)], axis=-1)


def polygon_membership(vertices, delta: float):
    import shapely

    poly = shapely.Polygon(np.asarray(vertices, dtype=float) / delta)
    if not poly.is_valid:
        raise RegionError("polygon is not simple")
    minx, miny, maxx, maxy = poly.bounds
    _guard(poly.area / (SQRT3 / 2))
    b0 = int(math.floor(miny * 2 / SQRT3)) - 3
    b1 = int(math.ceil(maxy * 2 / SQRT3)) + 3
    a0 = int(math.floor(minx - 0.5 * b1)) - 3
    a1 = int(math.ceil(maxx - 0.5 * b0)) + 3
    bb, aa = np.mgrid[b0:b1 + 1, a0:a1 + 1]
    out = np.zeros(aa.shape, dtype=bool)
    x = aa + 0.5 * bb
    y = 0.5 * SQRT3 * bb
    near = (x >= minx - 1) & (x <= maxx + 1) & (y >= miny - 1) & (y <= maxy + 1)
    hexes = shapely.polygons(_hexagon_array(aa[near].astype(float), bb[near].astype(float)))
    out[near] = shapely.intersects(hexes, poly)
    return a0, b0, out


# --------------------------------------------------------------------------
# construction


def _dilate_ring(member: np.ndarray) -> np.ndarray:
    return ndimage.binary_dilation(member, structure=_STRUCT) & ~member


def _check_connected(member: np.ndarray):
    if not member.any():
        raise RegionError("region is empty")
    _, k = ndimage.label(member, structure=_STRUCT)
    if k != 1:
        raise RegionError(f"region is disconnected ({k} components)")


def _pad(a0, b0, grid, p=2):
    return a0 - p, b0 - p, np.pad(grid, p)


def _classify(spec: RegionSpec, a: np.ndarray, b: np.ndarray, inner_member=None) -> np.ndarray:
    """Class code for each boundary cell ``(a, b)``."""
    x = a + 0.5 * b
    y = 0.5 * SQRT3 * b
    code = np.full(a.shape, DO, dtype=np.int8)
    v = spec.variant
    if v in ("half_disk", "half_annulus", "sector"):
        alpha = math.pi if v != "sector" else spec.params[0]
        phi = np.mod(np.arctan2(y, x), 2 * np.pi)
        in_wedge = (phi <= alpha + 1e-12) | (np.abs(phi - 2 * np.pi) <= 1e-12)
        side = ~in_wedge
        left = side & ((phi - alpha) < (2 * np.pi - phi))
        code[left] = DL
        code[side & ~left] = DR
        if inner_member is not None:
            code[~side & inner_member] = DI
    elif v == "strip":
        m, n, _ = spec.params
        code[:] = np.where(x < 0, DL, DR)
        code[b <= 2 * m] = DI
        code[b >= 2 * n] = DO
    return code


def build_region(spec: RegionSpec) -> RegionMask:
    v = spec.variant
    inner = None
    if v == "half_disk":
        a0, b0, member = sector_membership(math.pi, spec.params[0])
    elif v == "sector":
        alpha, delta = spec.params
        a0, b0, member = sector_membership(alpha, 1.0 / delta)
    elif v == "half_annulus":
        r, R = spec.params
        a0, b0, member = sector_membership(math.pi, R)
        ai, bi, inner_grid = sector_membership(math.pi, r)
        inner = np.zeros_like(member)
        inner[bi - b0:bi - b0 + inner_grid.shape[0], ai - a0:ai - a0 + inner_grid.shape[1]] = inner_grid
        member = member & ~inner
    elif v == "strip":
        m, n, hw = spec.params
        _guard(2 * hw * (n - m) * SQRT3 / (SQRT3 / 2))
        b0 = 2 * m - 3
        b1 = 2 * n + 3
        a0 = int(math.floor(-hw - 0.5 * b1)) - 3
        a1 = int(math.ceil(hw - 0.5 * b0)) + 3
        bb, aa = np.mgrid[b0:b1 + 1, a0:a1 + 1]
        x = aa + 0.5 * bb
        member = (bb > 2 * m) & (bb <= 2 * n) & (np.abs(x) <= hw)
        member[2 * m - b0, -m - a0] = True
    elif v == "polygon":
        a0, b0, member = polygon_membership(*spec.params)
    else:
        raise RegionError(f"unknown region variant {v!r}")

    a0, b0, member = _pad(a0, b0, member)
    if inner is not None:
        inner = np.pad(inner, 2)
    _check_connected(member)
    ring = _dilate_ring(member)
    bi, ai = np.nonzero(ring)
    codes = np.zeros(member.shape, dtype=np.int8)
    codes[member] = IN
    codes[bi, ai] = _classify(spec, ai + a0, bi + b0, None if inner is None else inner[bi, ai])

    # crop to the occupied cells plus a one-cell OUTSIDE margin
    rows = np.flatnonzero(codes.any(axis=1))
    cols = np.flatnonzero(codes.any(axis=0))
    r0, r1, c0, c1 = rows[0] - 1, rows[-1] + 2, cols[0] - 1, cols[-1] + 2
    mask = RegionMask(spec, (a0 + int(c0), b0 + int(r0)), np.ascontiguousarray(codes[r0:r1, c0:c1]), _terminals(spec))
    for t in mask.terminals:
        if mask.code_of(t) != IN:
            raise RegionError(f"terminal {t} is not a region site")
    return mask


def classify_boundary(mask: RegionMask) -> dict[str, frozenset]:
    """The four boundary classes of an assembled mask, keyed l/r/i/o."""
    return {"l": mask.boundary_l, "r": mask.boundary_r, "i": mask.boundary_i, "o": mask.boundary_o}


def nearest_site(mask: RegionMask, point: tuple[float, float]) -> SiteCoord:
    """Region site whose centre is closest to ``point`` (ties: canonical order)."""
    c = mask.coords(mask.site_flat)
    x = c[:, 0] + 0.5 * c[:, 1]
    y = 0.5 * SQRT3 * c[:, 1]
    k = int(np.argmin((x - point[0]) ** 2 + (y - point[1]) ** 2))
    return SiteCoord(int(c[k, 0]), int(c[k, 1]))


def column_flat(mask: RegionMask) -> np.ndarray:
    """Flat indices of the hexagon column over the origin, (0, b) for increasing b.

    Starts at the last non-site cell below the region part of the column and
    ends at the first non-site cell above it.
    """
    if mask.spec.variant not in ("half_annulus", "half_disk"):
        raise RegionError("column defined for half-disk and half-annulus masks")
    out = []
    b = 0
    while mask.code_of((0, b)) != IN:
        b += 1
    out.append(mask.flat((0, b - 1)))
    while mask.code_of((0, b)) == IN:
        out.append(mask.flat((0, b)))
        b += 1
    out.append(mask.flat((0, b)))
    return np.array(out, dtype=np.int64)
