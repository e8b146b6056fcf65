import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from critfpp.experiments import (AUDIT_SHAPES, CSV_HEADER, CoarseResolutionError, EstimatorState, ExperimentSpec,
                                 ResultRow, _Scene, _cylinder_values, _origin_plan, cn_samples, hs_table, ks_normal, merge, normal_cdf,
                                 run_clt_renewal, run_cn_scaling, run_cylinder, run_equivalence_audit,
                                 run_experiment, run_polygon, run_renewal_slope, run_sector,
                                 run_t_plus_stabilization, run_tail, survival_fit, t_plus_samples, to_csv)
from critfpp.fpp import T_plus, Workspace, c_n_plus
from critfpp.lattice import RegionSpec, ResourceGuardError, build_region
from critfpp.percolation import sample_config
from critfpp.rng import stream_for

from oracles import welford_free_var

SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]
floats = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=0, max_size=40)


def state(xs):
    return EstimatorState().add_many(xs)


def close(a, b, rel=1e-9):
    return math.isclose(a, b, rel_tol=rel, abs_tol=1e-9)


def test_merge_with_empty_is_identity():
    a = state([1.0, 2.0, 4.0])
    for m in (merge(a, EstimatorState()), merge(EstimatorState(), a)):
        assert (m.count, m.mean, m.m2) == (a.count, a.mean, a.m2)


@settings(max_examples=100)
@given(floats, floats)
def test_merge_commutes(xs, ys):
    ab, ba = merge(state(xs), state(ys)), merge(state(ys), state(xs))
    assert ab.count == ba.count
    assert close(ab.mean, ba.mean) and close(ab.m2, ba.m2)


@settings(max_examples=50)
@given(floats, floats, floats)
def test_merge_associates(xs, ys, zs):
    a, b, c = state(xs), state(ys), state(zs)
    l, r = merge(merge(a, b), c), merge(a, merge(b, c))
    assert close(l.mean, r.mean) and close(l.m2, r.m2, 1e-8)


def test_split_merge_matches_sequential():
    xs = np.random.default_rng(3).normal(5.0, 2.0, 10**4)
    seq = state(xs)
    split = merge(state(xs[:3777]), state(xs[3777:]))
    assert split.count == seq.count
    assert close(split.mean, seq.mean) and close(split.m2, seq.m2) and close(split.variance, seq.variance)
    mean, var = welford_free_var(xs)
    assert close(seq.mean, mean) and close(seq.variance, var)


def test_stderr_definition():
    s = state([0.0, 1.0, 1.0, 3.0, 7.0])
    row = ResultRow.from_state("x", 1, s)
    assert row.stderr == pytest.approx(math.sqrt(row.variance / row.count), rel=1e-15)
    lo, hi = row.ci95()
    assert lo < row.estimate < hi


def test_variance_undefined_below_two():
    assert math.isnan(state([1.0]).variance)


def test_csv_format():
    rows = [ResultRow("a", 128, 1.5, 0.25, 0.05, 100, 0.2756644477108961, 0.3),
            ResultRow("b", 2.0, 3.0, math.nan, math.nan, 1)]
    text = to_csv(rows)
    lines = text.split("\n")
    assert lines[0] == CSV_HEADER
    assert lines[1] == "a,128,1.5,0.25,0.05,100,0.2756644477108961,0.3"
    assert lines[2] == "b,2,3,nan,nan,1,,"
    assert lines[-1] == "" and "\r" not in text
    assert all(len(ln.split(",")) == 8 for ln in lines[:-1])


def test_cn_rows_deterministic_across_workers():
    a = to_csv(run_cn_scaling([4, 8], 40, seed=5, workers=1))
    b = to_csv(run_cn_scaling([4, 8], 40, seed=5, workers=8))
    assert a == b
    c = to_csv(run_cn_scaling([4, 8], 40, seed=5, workers=3, coupled=True))
    assert c == to_csv(run_cn_scaling([4, 8], 40, seed=5, workers=1, coupled=True))


def test_cn_samples_match_reference_path():
    xs = cn_samples([6], 30, seed=11)[:, 0]
    mask = build_region(RegionSpec.half_disk(6))
    ref = [c_n_plus(6, sample_config(mask, stream_for(11, "cn_scaling:6", r))) for r in range(30)]
    assert xs.tolist() == ref


def test_cn_n1_bounds():
    rows = run_cn_scaling([1], 200, seed=1)
    xs = cn_samples([1], 200, seed=1)[:, 0]
    assert np.all(xs >= 0) and np.all(xs == np.round(xs))
    assert 0 <= rows[0].estimate <= build_region(RegionSpec.half_disk(1)).n_sites
    assert rows[0].target == pytest.approx(math.sqrt(3) / (2 * math.pi))
    assert rows[1].target == pytest.approx(0.19077, abs=1e-5)


def test_scale_list_must_ascend():
    with pytest.raises(ValueError):
        run_cn_scaling([8, 4], 2, seed=0)


def test_half_disk_guard():
    with pytest.raises(ResourceGuardError):
        run_cn_scaling([40000], 1, seed=0)


def test_cylinder_s_never_exceeds_t():
    vals = _cylinder_values([8, 16], 60, 2, 1, "cyl_test")
    for arr in vals.values():
        c, t, s = arr[:, 0], arr[:, 1], arr[:, 2]
        assert np.all(s <= t) and np.all(s >= 0) and np.all(c >= 0)


def test_cylinder_rows():
    rows = run_cylinder([8], 60, seed=2)
    kinds = [r.experiment for r in rows]
    assert kinds == ["cylinder_t", "cylinder_s", "cylinder_t_var", "cylinder_s_var", "cylinder_ratio",
                     "cylinder_coupled_gap"]
    by = {r.experiment: r for r in rows}
    assert by["cylinder_t"].target == pytest.approx(math.sqrt(3) / math.pi)
    assert by["cylinder_t_var"].target == pytest.approx(0.38153, abs=1e-5)
    assert by["cylinder_ratio"].estimate == pytest.approx(by["cylinder_t"].estimate / by["cylinder_s"].estimate)


def test_sector_rows_nonnegative():
    rows = run_sector([math.pi / 2, math.pi], [1 / 8, 1 / 16], 40, seed=3)
    assert all(r.estimate >= 0 for r in rows)
    ratios = [r for r in rows if r.experiment == "sector_ratio"]
    assert len(ratios) == 2


def test_sector_pi_matches_half_disk_on_shared_field():
    # the α = π mask is the half-disk, so the two experiments agree on a shared field
    rows = run_sector([math.pi / 2, math.pi], [1 / 8], 30, seed=4)
    assert [r.experiment for r in rows] == ["sector_1.5708", "sector_3.14159", "sector_ratio"]
    assert build_region(RegionSpec.sector(math.pi, 1 / 8)).sites == build_region(RegionSpec.half_disk(8)).sites
    masks = [build_region(RegionSpec.sector(math.pi, 1 / 8)), build_region(RegionSpec.half_disk(8))]
    scene = _Scene(masks)
    plans = [_origin_plan(m) for m in masks]
    for r in range(30):
        fld = scene.field(stream_for(4, "pi_vs_disk", r).generator())
        ts = [p.run(scene.weight(fld, k), Workspace(scene.weight(fld, k).size)) for k, p in enumerate(plans)]
        assert ts[0] == ts[1]


def test_polygon_target_and_trend():
    rows = run_polygon(SQUARE, (0, 2), [1 / 16, 1 / 64], 200, seed=6)
    assert rows[0].target == pytest.approx(1.10266, abs=1e-5)
    coarse, fine = rows
    assert fine.estimate > coarse.estimate


def test_polygon_too_coarse_refused():
    with pytest.raises(CoarseResolutionError):
        run_polygon(SQUARE, (0, 2), [0.2], 5, seed=0)
    with pytest.raises(ValueError):
        run_polygon(SQUARE, ((0.5, 0.5), 2), [0.05], 5, seed=0)


def test_t_plus_samples_match_reference_path():
    xs = t_plus_samples(3, 9, 40, seed=8)
    mask = build_region(RegionSpec.half_annulus(3, 9))
    ref = [T_plus(3, 9, sample_config(mask, stream_for(8, "t_plus:3:9", r))) for r in range(40)]
    assert xs.tolist() == ref


def test_t_plus_stabilization_bounds():
    rows = run_t_plus_stabilization(1, 2, [2, 4, 8], 200, seed=9, renewal_reps=2000)
    assert [r.experiment for r in rows] == ["t_plus_stabilization"] * 3 + ["renewal_EN"]
    for r in rows[:3]:
        # T+ over one scale ratio of 2 is rarely more than a few units
        assert 0 <= r.estimate <= 2 * math.log2(2)
    assert rows[-1].target == rows[2].estimate


def test_clt_refuses_few_reps():
    with pytest.raises(ValueError):
        run_clt_renewal(50.0, 99, seed=0)


def test_clt_ks_in_unit_interval():
    ks = run_clt_renewal(30.0, 200, seed=1)
    assert 0.0 <= ks <= 1.0


def test_normal_cdf_matches_scipy():
    for x in np.linspace(-8, 8, 33):
        assert normal_cdf(x) == pytest.approx(stats.norm.cdf(x), abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=60))
def test_ks_matches_scipy_with_ties(xs):
    ref = stats.kstest(np.asarray(xs, dtype=float), "norm").statistic
    assert ks_normal(xs) == pytest.approx(ref, abs=1e-12)


def test_renewal_slope_rows():
    rows = run_renewal_slope([20.0], 300, seed=2)
    assert rows[0].target == pytest.approx(0.275664, abs=1e-6)
    assert rows[0].estimate > 0


def test_survival_fit_basic():
    rng = np.random.default_rng(0)
    xs = rng.geometric(0.5, 10**5) - 1
    surv, slope, icpt, r2, use = survival_fit(xs, np.arange(0, 12))
    assert np.all(np.diff(surv) <= 0)
    assert slope == pytest.approx(math.log(0.5), abs=0.02)
    assert r2 > 0.99
    assert np.all(surv[use] >= 1e-3)


def test_tail_rows():
    rows = run_tail(1, 16, list(range(1, 8)), 400, seed=3)
    surv = [r.estimate for r in rows if r.experiment == "tail_survival"]
    assert np.all(np.diff(surv) <= 0)
    fit = rows[-1]
    assert fit.experiment == "tail_fit_slope" and fit.estimate < 0


def test_audit_minimal_shape_passes():
    (rep,) = run_equivalence_audit(["half_annulus_min"])
    assert rep.passed
    assert sum(rep.hist_t) == sum(rep.hist_n) == 2 ** rep.n_sites == rep.configs
    assert rep.text().startswith("PASS half_annulus_min")


def test_audit_detects_corrupted_flip_rule():
    (rep,) = run_equivalence_audit(["half_annulus_1_3"], corrupt=True)
    assert not rep.passed
    assert rep.injectivity_failures > 0 or rep.image_failures > 0
    assert rep.text().startswith("FAIL")


def test_audit_shapes_within_limit():
    for r, R in AUDIT_SHAPES.values():
        assert build_region(RegionSpec.half_annulus(r, R)).n_sites <= 22
    with pytest.raises(ValueError):
        run_equivalence_audit(["no_such_shape"])


def test_audit_refuses_large_masks():
    from critfpp.experiments import audit_mask
    with pytest.raises(ResourceGuardError):
        audit_mask("big", build_region(RegionSpec.half_annulus(6, 8)))


def test_experiment_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec("nope")
    with pytest.raises(ValueError):
        ExperimentSpec("tail", reps=0)


def test_run_experiment_dispatch():
    rows = run_experiment(ExperimentSpec("hs_slope", {"log_r": [20.0]}))
    assert rows[0].experiment == "hs_slope" and rows[0].target == pytest.approx(0.137832, abs=1e-6)
    rows = run_experiment(ExperimentSpec("cn_scaling", {"n": [2, 4]}, reps=10, seed=1))
    assert len(rows) == 4
    R, lam, comp, value, slope = hs_table([20.0])[0]
    assert R == pytest.approx(math.exp(20.0)) and slope == pytest.approx(value / 20.0)
    assert comp < 1e-7 and lam + comp == pytest.approx(1.0)
