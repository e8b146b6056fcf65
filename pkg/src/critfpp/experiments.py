"""Monte Carlo harness: lattice passage times, renewal counts and formula tables.

Replica ``r`` of an experiment with id ``e`` always draws from the stream
``stream_for(seed, e, r)`` and per-replica results are reduced in replica
order, so every table is a pure function of its parameters and the seed,
whatever the number of workers.

Experiments that compare several regions at one scale (half-disk, strip and
quarter sector) share one Bernoulli field: a bit per cell of the smallest
lattice rectangle containing all the regions, drawn in row-major ``(b, a)``
order, restricted to each region.
"""
from __future__ import annotations

import io
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import shapely

from . import circuits
from .fpp import PASS, Workspace, _corner_index, corner_angle, cylinder_times_grid, polygon_corner_sites, strip_enter
from .hs_formula import LOG_COEF, half_annulus_cross_ratio, expected_crossing_clusters, slope
from .lattice import DI, DO, RegionMask, RegionSpec, ResourceGuardError, build_region
from .radial_sde import RENEWAL_RATE, renewal_count_gen
from .rng import random_bits, stream_for

log = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
CN_VAR_RATE = 2 * SQRT3 / math.pi - 9 / math.pi ** 2
CYL_T_RATE = SQRT3 / math.pi
CYL_T_VAR_RATE = 4 * SQRT3 / math.pi - 18 / math.pi ** 2
CHUNK = 8
MIN_HEXAGONS_ACROSS = 10

AUDIT_SHAPES = {
    "half_annulus_min": (1, 2),
    "half_annulus_2_3": (2, 3),
    "half_annulus_3_4": (3, 4),
    "half_annulus_4_5": (4, 5),
    "half_annulus_1_3": (1, 3),
    "half_annulus_5_6": (5, 6),
}
MAX_AUDIT_SITES = 22


class CoarseResolutionError(ResourceGuardError):
    """Lattice spacing too coarse for a meaningful polygon experiment."""


# --------------------------------------------------------------------------
# estimators and rows


@dataclass
class EstimatorState:
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def add(self, x: float) -> "EstimatorState":
        self.count += 1
        d = x - self.mean
        self.mean += d / self.count
        self.m2 += d * (x - self.mean)
        return self

    def add_many(self, xs: Iterable[float]) -> "EstimatorState":
        for x in xs:
            self.add(float(x))
        return self

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count >= 2 else math.nan

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count >= 2 else math.nan


def merge(e1: EstimatorState, e2: EstimatorState) -> EstimatorState:
    if e1.count == 0:
        return EstimatorState(e2.count, e2.mean, e2.m2)
    if e2.count == 0:
        return EstimatorState(e1.count, e1.mean, e1.m2)
    n = e1.count + e2.count
    d = e2.mean - e1.mean
    mean = (e1.count * e1.mean + e2.count * e2.mean) / n
    return EstimatorState(n, mean, e1.m2 + e2.m2 + d * d * e1.count * e2.count / n)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    scale: float
    estimate: float
    variance: float
    stderr: float
    count: int
    target: float | None = None
    normalized: float | None = None

    @staticmethod
    def from_state(experiment, scale, st: EstimatorState, target=None, normalized=None) -> "ResultRow":
        return ResultRow(experiment, scale, st.mean, st.variance, st.stderr, st.count, target, normalized)

    def ci95(self) -> tuple[float, float]:
        return self.estimate - 1.96 * self.stderr, self.estimate + 1.96 * self.stderr


CSV_HEADER = "experiment,scale,estimate,variance,stderr,count,target,normalized"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def row_line(r: ResultRow) -> str:
    return ",".join([r.experiment, _fmt(r.scale), _fmt(r.estimate), _fmt(r.variance), _fmt(r.stderr),
                     _fmt(r.count), _fmt(r.target), _fmt(r.normalized)])


def to_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO(newline="")
    buf.write(CSV_HEADER + "\n")
    for r in rows:
        buf.write(row_line(r) + "\n")
    return buf.getvalue()


def state_of(xs) -> EstimatorState:
    return EstimatorState().add_many(np.asarray(xs, dtype=float))


def variance_row(experiment, scale, xs, target, norm_by) -> ResultRow:
    """Row whose estimate is the sample variance of ``xs``."""
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    v = float(xs.var(ddof=1))
    sq = (xs - xs.mean()) ** 2
    vv = float(sq.var(ddof=1) / n)
    return ResultRow(experiment, scale, v, vv, math.sqrt(vv), n, target, _ratio(v, norm_by))


def _ratio(x, by):
    # normalized columns are undefined where the normalizer vanishes (log 1)
    return x / by if by else None


# --------------------------------------------------------------------------
# replica runner


def run_replicas(fn: Callable[[np.random.Generator, dict], tuple], reps: int, seed: int, exp_id: str,
                 workers: int = 1, nout: int = 1) -> np.ndarray:
    """Evaluate ``fn(gen, scratch)`` for each replica; returns (reps, nout) floats.

    ``scratch`` is a per-thread dict for reusable buffers.
    """
    out = np.empty((reps, nout))
    local = threading.local()

    def chunk(c0):
        if not hasattr(local, "scratch"):
            local.scratch = {}
        for r in range(c0, min(reps, c0 + CHUNK)):
            out[r] = fn(stream_for(seed, exp_id, r).generator(), local.scratch)

    starts = range(0, reps, CHUNK)
    if workers <= 1:
        for c0 in starts:
            chunk(c0)
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            for f in [ex.submit(chunk, c0) for c0 in starts]:
                f.result()
    return out


def _ws(scratch: dict, key, ncells: int) -> Workspace:
    w = scratch.get(key)
    if w is None:
        w = scratch[key] = Workspace(ncells)
    return w


# --------------------------------------------------------------------------
# per-mask search plans


class _Plan:
    """Precomputed admissibility/source/target arrays for one mask."""

    def __init__(self, mask: RegionMask, sources: np.ndarray, targets: np.ndarray, enter=None):
        self.mask = mask
        nc = mask.flat_codes.size
        if enter is None:
            enter = np.zeros(nc, dtype=np.uint8)
            enter[mask.site_flat] = PASS
        enter[sources] = PASS
        self.enter = enter
        self.src = np.asarray(sources, dtype=np.int64)
        self.tgt = np.zeros(nc, dtype=np.uint8)
        self.tgt[targets] = 1

    def run(self, weight, ws: Workspace) -> int:
        t, _ = ws.run(weight, self.enter, self.src, self.tgt, self.mask.offsets, True)
        return int(t)

    def weight_from_bits(self, bits: np.ndarray, scratch: dict) -> np.ndarray:
        key = ("w", id(self))
        w = scratch.get(key)
        if w is None:
            w = scratch[key] = np.zeros(self.mask.flat_codes.size, dtype=np.int8)
        w[self.mask.site_flat] = bits
        return w


def _origin_plan(mask: RegionMask) -> _Plan:
    return _Plan(mask, np.array([mask.flat((0, 0))]), mask.sites_adjacent_to(DO))


def _annulus_plan(mask: RegionMask) -> _Plan:
    return _Plan(mask, mask.sites_adjacent_to(DI), mask.sites_adjacent_to(DO))


class _Scene:
    """Several masks sharing one Bernoulli field on a common lattice rectangle."""

    def __init__(self, masks: Sequence[RegionMask]):
        self.masks = list(masks)
        a0 = min(m.origin[0] for m in masks)
        b0 = min(m.origin[1] for m in masks)
        a1 = max(m.origin[0] + m.shape[1] for m in masks)
        b1 = max(m.origin[1] + m.shape[0] for m in masks)
        self.origin = (a0, b0)
        self.shape = (b1 - b0, a1 - a0)
        self.slices = [(slice(m.origin[1] - b0, m.origin[1] - b0 + m.shape[0]),
                        slice(m.origin[0] - a0, m.origin[0] - a0 + m.shape[1])) for m in masks]
        _guard_cells(self.shape[0] * self.shape[1])

    def field(self, gen: np.random.Generator) -> np.ndarray:
        h, w = self.shape
        return random_bits(gen, h * w).reshape(h, w).view(np.int8)

    def weight(self, fld: np.ndarray, k: int) -> np.ndarray:
        rs, cs = self.slices[k]
        return np.ascontiguousarray(fld[rs, cs]).ravel()


def _guard_cells(ncells: int):
    if ncells > 10**9:
        raise ResourceGuardError(f"refusing a {ncells:.3g}-cell lattice rectangle")


def _guard_half_disk(n: int):
    est = math.pi * n * n / SQRT3
    if est > 10**9:
        raise ResourceGuardError(f"half-disk of radius {n} would hold ~{est:.3g} sites")


# --------------------------------------------------------------------------
# experiments


def cn_samples(n_list, reps: int, seed: int, workers: int = 1, coupled: bool = False) -> np.ndarray:
    """(reps, len(n_list)) samples of c_n^+.

    With ``coupled`` every replica draws one field on the largest half-disk's
    rectangle and restricts it to each radius, so differences across n are
    far less noisy; replicas stay independent of each other either way.
    """
    ns_ = _ascending(n_list)
    for n in ns_:
        _guard_half_disk(n)
    plans = [_origin_plan(build_region(RegionSpec.half_disk(n))) for n in ns_]
    if coupled:
        scene = _Scene([p.mask for p in plans])

        def one(gen, scratch):
            fld = scene.field(gen)
            res = []
            for k, p in enumerate(plans):
                w = scene.weight(fld, k)
                res.append(p.run(w, _ws(scratch, ("cn", k), w.size)))
            return tuple(res)

        key = "cn_scaling:coupled:" + ",".join(map(str, ns_))
        return run_replicas(one, reps, seed, key, workers, len(plans))
    cols = []
    for n, plan in zip(ns_, plans):
        nsites = plan.mask.n_sites

        def one(gen, scratch, plan=plan, nsites=nsites):
            w = plan.weight_from_bits(random_bits(gen, nsites), scratch)
            return (plan.run(w, _ws(scratch, id(plan), w.size)),)

        cols.append(run_replicas(one, reps, seed, f"cn_scaling:{n}", workers)[:, 0])
    return np.column_stack(cols)


def run_cn_scaling(n_list, reps: int, seed: int, workers: int = 1, coupled: bool = False) -> list[ResultRow]:
    """Mean and variance of c_n^+ per radius, normalized by log n."""
    arr = cn_samples(n_list, reps, seed, workers, coupled)
    rows = []
    for k, n in enumerate(_ascending(n_list)):
        xs = arr[:, k]
        st = state_of(xs)
        ln = math.log(n)
        rows.append(ResultRow.from_state("cn_scaling", n, st, RENEWAL_RATE, _ratio(st.mean, ln)))
        rows.append(variance_row("cn_scaling_var", n, xs, CN_VAR_RATE, ln))
    return rows


def _ascending(xs):
    xs = [int(x) if float(x).is_integer() else float(x) for x in xs]
    if list(xs) != sorted(xs):
        raise ValueError("scale list must be ascending")
    return xs


def cylinder_scene(n: int, halfwidth: float | None = None, with_sector: bool = False):
    """Half-disk(n), strip(0, n) and optionally the quarter sector of radius n on one field."""
    hd = build_region(RegionSpec.half_disk(n))
    st = build_region(RegionSpec.strip(0, n, halfwidth))
    masks = [hd, st]
    if with_sector:
        masks.append(build_region(RegionSpec.sector(math.pi / 2, 1.0 / n)))
    return _Scene(masks)


def _cylinder_values(n_list, reps, seed, workers, exp_prefix, halfwidth=None, with_sector=False):
    out = {}
    for n in _ascending(n_list):
        _guard_half_disk(n)
        scene = cylinder_scene(n, halfwidth, with_sector)
        hd_plan = _origin_plan(scene.masks[0])
        smask = scene.masks[1]
        s_enter = strip_enter(smask)
        top = smask.site_flat[smask.coords(smask.site_flat)[:, 1] == 2 * n]
        sec_plan = _origin_plan(scene.masks[2]) if with_sector else None

        def one(gen, scratch, scene=scene, hd_plan=hd_plan, smask=smask, s_enter=s_enter, top=top,
                sec_plan=sec_plan):
            fld = scene.field(gen)
            w0 = scene.weight(fld, 0)
            c = hd_plan.run(w0, _ws(scratch, ("hd", id(scene)), w0.size))
            w1 = scene.weight(fld, 1)
            t, s = cylinder_times_grid(smask, w1, _ws(scratch, ("st", id(scene)), w1.size), s_enter, top)
            q = math.nan
            if sec_plan is not None:
                w2 = scene.weight(fld, 2)
                q = sec_plan.run(w2, _ws(scratch, ("sec", id(scene)), w2.size))
            return c, t, s, q

        out[n] = run_replicas(one, reps if not callable(reps) else reps(n), seed, f"{exp_prefix}:{n}", workers, 4)
    return out


def _cylinder_rows(vals: dict) -> list[ResultRow]:
    rows = []
    for n, arr in vals.items():
        c, t, s = arr[:, 0], arr[:, 1], arr[:, 2]
        ln = math.log(n)
        st_t, st_s = state_of(t), state_of(s)
        rows.append(ResultRow.from_state("cylinder_t", n, st_t, CYL_T_RATE, _ratio(st_t.mean, ln)))
        rows.append(ResultRow.from_state("cylinder_s", n, st_s, RENEWAL_RATE, _ratio(st_s.mean, ln)))
        rows.append(variance_row("cylinder_t_var", n, t, CYL_T_VAR_RATE, ln))
        rows.append(variance_row("cylinder_s_var", n, s, CN_VAR_RATE, ln))
        # ratio of means with a delta-method standard error
        rt = st_t.mean / st_s.mean
        cov = float(np.cov(t, s, ddof=1)[0, 1]) / len(t)
        vr = rt ** 2 * (st_t.stderr ** 2 / st_t.mean ** 2 + st_s.stderr ** 2 / st_s.mean ** 2
                        - 2 * cov / (st_t.mean * st_s.mean))
        rows.append(ResultRow("cylinder_ratio", n, rt, vr, math.sqrt(max(vr, 0.0)), len(t), 2.0, rt / 2.0))
        rows.append(ResultRow.from_state("cylinder_coupled_gap", n, state_of(np.abs(c - s))))
    return rows


def run_cylinder(n_list, reps: int, seed: int, workers: int = 1, halfwidth: float | None = None) -> list[ResultRow]:
    """t_{0,n}, s_{0,n} and the coupled gap |c_n^+ - s_{0,n}| on a shared field."""
    return _cylinder_rows(_cylinder_values(n_list, reps, seed, workers, "cylinder", halfwidth))


def run_sector(alpha_list, delta_list, reps: int, seed: int, workers: int = 1) -> list[ResultRow]:
    """Sector passage times; all angles at one spacing share a field."""
    rows = []
    for delta in sorted(delta_list, reverse=True):
        masks = [build_region(RegionSpec.sector(a, delta)) for a in alpha_list]
        scene = _Scene(masks)
        plans = [_origin_plan(m) for m in masks]

        def one(gen, scratch, scene=scene, plans=plans):
            fld = scene.field(gen)
            res = []
            for k, p in enumerate(plans):
                w = scene.weight(fld, k)
                res.append(p.run(w, _ws(scratch, ("sec", id(p)), w.size)))
            return tuple(res)

        arr = run_replicas(one, reps, seed, f"sector:{delta!r}", workers, len(plans))
        rows.extend(_sector_rows(alpha_list, delta, arr))
    return rows


def _sector_rows(alpha_list, delta, arr) -> list[ResultRow]:
    rows = []
    ld = -math.log(delta)
    means = {}
    for k, a in enumerate(alpha_list):
        st = state_of(arr[:, k])
        means[a] = st.mean
        rows.append(ResultRow.from_state(f"sector_{a:.6g}", ld, st, SQRT3 / (2 * a), st.mean / ld))
    if math.pi / 2 in means and math.pi in means:
        k1, k2 = list(alpha_list).index(math.pi / 2), list(alpha_list).index(math.pi)
        x, y = arr[:, k1], arr[:, k2]
        r = x.mean() / y.mean()
        cov = float(np.cov(x, y, ddof=1)[0, 1]) / len(x)
        vr = r ** 2 * (x.var(ddof=1) / len(x) / x.mean() ** 2 + y.var(ddof=1) / len(y) / y.mean() ** 2
                       - 2 * cov / (x.mean() * y.mean()))
        rows.append(ResultRow("sector_ratio", ld, r, vr, math.sqrt(max(vr, 0.0)), len(x), 2.0, r / 2.0))
    return rows


def run_polygon(polygon, corners, delta_list, reps: int, seed: int, workers: int = 1) -> list[ResultRow]:
    """Corner-to-corner passage time in a polygon, normalized by -log δ."""
    ka, kb = (_corner_index(polygon, c) for c in corners)
    ta, tb = corner_angle(polygon, ka), corner_angle(polygon, kb)
    target = SQRT3 / (2 * ta) + SQRT3 / (2 * tb)
    rows = []
    poly = shapely.Polygon(polygon)
    # narrowest extent of the polygon: twice the largest inscribed radius
    width = 2.0 * shapely.distance(shapely.Point(*poly.representative_point().coords[0]), poly.exterior)
    width = max(width, 2.0 * poly.area / poly.length)
    for delta in sorted(delta_list, reverse=True):
        if width / delta < MIN_HEXAGONS_ACROSS:
            raise CoarseResolutionError(f"delta={delta} leaves fewer than {MIN_HEXAGONS_ACROSS} hexagons across")
        mask = build_region(RegionSpec.polygon(polygon, delta))
        sa, sb = polygon_corner_sites(mask, ka, kb)
        plan = _Plan(mask, np.array([mask.flat(sa)]), np.array([mask.flat(sb)]))
        ns = mask.n_sites

        def one(gen, scratch, plan=plan, ns=ns):
            w = plan.weight_from_bits(random_bits(gen, ns), scratch)
            return (plan.run(w, _ws(scratch, id(plan), w.size)),)

        xs = run_replicas(one, reps, seed, f"polygon:{delta!r}", workers)[:, 0]
        st = state_of(xs)
        ld = -math.log(delta)
        rows.append(ResultRow.from_state("polygon", ld, st, target, st.mean / ld))
    return rows


def t_plus_samples(r: int, R: int, reps: int, seed: int, workers: int = 1, exp_id: str | None = None) -> np.ndarray:
    """Independent samples of T^+(r, R); replica k equals T_plus on sample_config."""
    plan = _annulus_plan(build_region(RegionSpec.half_annulus(r, R)))
    ns = plan.mask.n_sites

    def one(gen, scratch):
        w = plan.weight_from_bits(random_bits(gen, ns), scratch)
        return (plan.run(w, _ws(scratch, id(plan), w.size)),)

    return run_replicas(one, reps, seed, exp_id or f"t_plus:{r}:{R}", workers)[:, 0]


def renewal_samples(threshold: float, reps: int, seed: int, exp_id: str, workers: int = 1) -> np.ndarray:
    def one(gen, scratch):
        return (renewal_count_gen(threshold, gen),)

    return run_replicas(one, reps, seed, exp_id, workers)[:, 0]


def run_t_plus_stabilization(r: int, ratio: int, tau_list, reps: int, seed: int, workers: int = 1,
                             renewal_reps: int = 10**5) -> list[ResultRow]:
    """Mean T^+(τ r, τ R) against the renewal count at -log ε = log(R/r)."""
    rows = []
    for tau in _ascending(tau_list):
        xs = t_plus_samples(tau * r, tau * r * ratio, reps, seed, workers, f"t_plus_stab:{tau}")
        rows.append(ResultRow.from_state("t_plus_stabilization", tau, state_of(xs)))
    ns = renewal_samples(math.log(ratio), renewal_reps, seed, f"renewal:{ratio}", workers)
    target = rows[-1].estimate if rows else None
    st = state_of(ns)
    rows.append(ResultRow.from_state("renewal_EN", math.log(ratio), st, target, st.mean / target if target else None))
    return rows


def normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def ks_normal(xs) -> float:
    """Kolmogorov-Smirnov distance between the empirical law of ``xs`` and N(0, 1)."""
    x = np.sort(np.asarray(xs, dtype=float))
    n = x.size
    vals, first = np.unique(x, return_index=True)
    last = np.append(first[1:], n)
    cdf = np.array([normal_cdf(v) for v in vals])
    # the empirical CDF jumps from first/n to last/n at each distinct value
    return float(max(np.max(last / n - cdf), np.max(cdf - first / n)))


def run_clt_renewal(minus_log_eps: float, reps: int, seed: int, workers: int = 1) -> float:
    """KS distance of the standardized renewal count N(ε) from N(0, 1)."""
    if reps < 100:
        raise ValueError("the renewal CLT check needs at least 100 replicas")
    ns = renewal_samples(float(minus_log_eps), reps, seed, f"clt_renewal:{float(minus_log_eps)!r}", workers)
    z = (ns - ns.mean()) / ns.std(ddof=1)
    return ks_normal(z)


def run_renewal_slope(minus_log_eps_list, reps: int, seed: int, workers: int = 1) -> list[ResultRow]:
    rows = []
    for L in minus_log_eps_list:
        ns = renewal_samples(float(L), reps, seed, f"renewal_slope:{float(L)!r}", workers)
        st = state_of(ns)
        rows.append(ResultRow.from_state("renewal_slope", L, st, RENEWAL_RATE, st.mean / L))
    return rows


def survival_fit(samples, x_grid, p_min: float = 1e-3, p_max: float = 1.0):
    """Empirical survival on ``x_grid`` and a least-squares line through its log.

    Only grid points with ``p_min <= P(T >= x) <= p_max`` enter the fit.
    Returns (survival, slope, intercept, r2, used mask).
    """
    s = np.asarray(samples)
    surv = np.array([np.mean(s >= x) for x in x_grid])
    use = (surv >= p_min) & (surv <= p_max)
    xg = np.asarray(x_grid, dtype=float)[use]
    y = np.log(surv[use])
    if xg.size < 2:
        return surv, math.nan, math.nan, math.nan, use
    b, a = np.polyfit(xg, y, 1)
    resid = y - (a + b * xg)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else math.nan
    return surv, float(b), float(a), r2, use


def run_tail(r: int, R: int, x_grid, reps: int, seed: int, workers: int = 1) -> list[ResultRow]:
    xs = t_plus_samples(r, R, reps, seed, workers, f"tail:{r}:{R}")
    surv, b, a, r2, use = survival_fit(xs, x_grid)
    rows = []
    for x, p in zip(x_grid, surv):
        v = p * (1 - p)
        rows.append(ResultRow("tail_survival", x, float(p), v, math.sqrt(v / reps), reps))
    rows.append(ResultRow("tail_fit_slope", R, b, math.nan, math.nan, int(use.sum()), None, r2))
    return rows


def run_hs_slope(log_r_list) -> list[ResultRow]:
    rows = []
    for L in log_r_list:
        rows.append(ResultRow("hs_slope", float(L), slope(log_r=float(L)), 0.0, 0.0, 1, LOG_COEF,
                              slope(log_r=float(L)) / LOG_COEF))
    return rows


def hs_table(log_r_list) -> list[tuple[float, float, float, float, float]]:
    """(R, λ, 1 - λ, expected crossing clusters, slope) per log R."""
    out = []
    for L in log_r_list:
        cr = half_annulus_cross_ratio(log_r=float(L))
        v = expected_crossing_clusters(cr)
        out.append((math.exp(float(L)), cr.value, cr.complement, v, v / float(L)))
    return out


@dataclass
class AuditReport:
    shape: str
    n_sites: int
    configs: int
    hist_t: list
    hist_rho: list
    hist_n: list
    t_rho_mismatches: int
    injectivity_failures: int
    image_failures: int

    @property
    def passed(self) -> bool:
        return (self.t_rho_mismatches == 0 and self.injectivity_failures == 0 and self.image_failures == 0
                and self.hist_t == self.hist_n and sum(self.hist_t) == self.configs == sum(self.hist_n))

    def text(self) -> str:
        return (f"{'PASS' if self.passed else 'FAIL'} {self.shape} sites={self.n_sites} configs={self.configs} "
                f"T+={self.hist_t} N+={self.hist_n} T+!=rho+:{self.t_rho_mismatches} "
                f"noninjective:{self.injectivity_failures} bad_image:{self.image_failures}")


def _trim(h) -> list:
    h = [int(x) for x in h]
    while len(h) > 1 and h[-1] == 0:
        h.pop()
    return h


def audit_mask(name: str, mask: RegionMask, corrupt: bool = False) -> AuditReport:
    if mask.n_sites > MAX_AUDIT_SITES:
        raise ResourceGuardError(f"{name} has {mask.n_sites} sites; exhaustive audits stop at {MAX_AUDIT_SITES}")
    ht, hr, hn, b1, b2, b3 = circuits.audit_kernel(*circuits.audit_arrays(mask), corrupt)
    L = max(len(_trim(ht)), len(_trim(hn)), len(_trim(hr)))
    pad = lambda h: (_trim(h) + [0] * L)[:L]  # noqa: E731
    return AuditReport(name, mask.n_sites, 1 << mask.n_sites, pad(ht), pad(hr), pad(hn), int(b1), int(b2), int(b3))


def run_equivalence_audit(mask_shapes: Sequence[str] = tuple(AUDIT_SHAPES), corrupt: bool = False) -> list[AuditReport]:
    out = []
    for name in mask_shapes:
        if name not in AUDIT_SHAPES:
            raise ValueError(f"unknown audit shape {name!r}; known: {', '.join(AUDIT_SHAPES)}")
        out.append(audit_mask(name, build_region(RegionSpec.half_annulus(*AUDIT_SHAPES[name])), corrupt))
    return out


# --------------------------------------------------------------------------
# experiment specs

KINDS = ("cn_scaling", "cylinder", "t_plus_stabilization", "clt_renewal", "tail", "sector", "polygon",
         "equivalence_audit", "renewal_slope", "hs_slope")


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    params: dict = field(default_factory=dict)
    reps: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> list[ResultRow]:
    p, k = spec.params, spec.kind
    if k == "cn_scaling":
        return run_cn_scaling(p["n"], spec.reps, spec.seed, workers, p.get("coupled", False))
    if k == "cylinder":
        return run_cylinder(p["n"], spec.reps, spec.seed, workers, p.get("halfwidth"))
    if k == "t_plus_stabilization":
        return run_t_plus_stabilization(p.get("r", 1), p.get("ratio", 2), p["tau"], spec.reps, spec.seed, workers,
                                        p.get("renewal_reps", spec.reps))
    if k == "clt_renewal":
        return [ResultRow("clt_renewal_ks", float(x), run_clt_renewal(x, spec.reps, spec.seed, workers), math.nan,
                          math.nan, spec.reps, 0.0) for x in p.get("minus_log_eps", [500.0])]
    if k == "tail":
        return run_tail(p.get("r", 1), p.get("R", 64), p.get("x_grid", list(range(1, 16))), spec.reps, spec.seed,
                        workers)
    if k == "sector":
        return run_sector(p["alpha"], p["delta"], spec.reps, spec.seed, workers)
    if k == "polygon":
        return run_polygon(p["polygon"], p.get("corners", (0, 2)), p["delta"], spec.reps, spec.seed, workers)
    if k == "renewal_slope":
        return run_renewal_slope(p.get("minus_log_eps", [50.0, 100.0, 200.0]), spec.reps, spec.seed, workers)
    if k == "hs_slope":
        return run_hs_slope(p.get("log_r", [20.0, 50.0, 100.0]))
    if k == "equivalence_audit":
        reps = run_equivalence_audit(p.get("shapes", tuple(AUDIT_SHAPES)))
        return [ResultRow("equivalence_audit", a.n_sites, float(a.passed), 0.0, 0.0, a.configs) for a in reps]
    raise ValueError(k)


__all__ = [
    "AUDIT_SHAPES", "AuditReport", "EstimatorState", "ExperimentSpec", "KINDS", "ResultRow", "CSV_HEADER", "merge",
    "run_clt_renewal", "run_cn_scaling", "run_cylinder", "run_equivalence_audit", "run_experiment", "run_hs_slope",
    "run_polygon", "run_renewal_slope", "run_sector", "run_t_plus_stabilization", "run_tail", "to_csv",
    "cn_samples", "ks_normal", "normal_cdf", "survival_fit", "t_plus_samples", "renewal_samples", "hs_table",
]
