import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from critfpp.radial_sde import (MEAN_Z, RENEWAL_RATE, VAR_Z, ThetaParams, count_renewals, diffusion, drift, mgf_Z,
                                moments_Z, renewal_count, renewal_count_gen, s_survival, sample_hitting_times,
                                sample_Z, sample_Z_exact, sample_Z_sde, z_cdf, z_survival)
from critfpp.rng import RngStream, stream_for

from conftest import SEED


def _density_z(z):
    # -d/dz P(Z > z), by central differences of the exact survival function
    h = 1e-6 * max(1.0, z)
    return (z_survival(z - h) - z_survival(z + h)) / (2 * h)


def test_closed_form_constants():
    mean, var = moments_Z()
    assert mean == pytest.approx(3.6275987284684357, rel=1e-14)
    assert var == pytest.approx(9.106705397522, rel=1e-11)
    assert RENEWAL_RATE == pytest.approx(1 / MEAN_Z, rel=1e-14)


def test_drift_at_pi():
    assert drift(math.pi, 6.0) == pytest.approx(0.0, abs=1e-15)
    for k in (4.5, 24 / 5, 8.0):
        assert drift(math.pi, k) == pytest.approx(0.8 * (3 - k / 2), rel=1e-12)


@given(st.floats(1e-3, 2 * math.pi - 1e-3))
def test_drift_kappa6_is_cot(theta):
    assert drift(theta, 6.0) == pytest.approx(0.4 / math.tan(theta / 2), rel=1e-12, abs=1e-12)


def test_drift_singular_at_ends():
    with pytest.raises(ValueError):
        drift(0.0)
    with pytest.raises(ValueError):
        drift(2 * math.pi)
    assert diffusion(6.0) == pytest.approx(math.sqrt(24 / 5))


def test_mgf_values():
    assert mgf_Z(0.0) == pytest.approx(1.0, abs=1e-15)
    assert mgf_Z(1 / 3 - 1e-9) > 1e6
    with pytest.raises(ValueError):
        mgf_Z(1 / 3)
    assert mgf_Z(-1.0) == pytest.approx(0.13968660883705145, rel=1e-12)


def test_mgf_derivatives_give_moments():
    h = 1e-6
    d1 = (mgf_Z(h) - mgf_Z(-h)) / (2 * h)
    assert d1 == pytest.approx(MEAN_Z, abs=1e-4)
    h = 1e-4
    d2 = (mgf_Z(h) - 2 * mgf_Z(0) + mgf_Z(-h)) / h ** 2
    assert d2 - d1 ** 2 == pytest.approx(VAR_Z, abs=1e-3)


def test_exact_law_is_a_distribution():
    assert z_survival(0.0) == 1.0
    # far tail: leading exponential term of the spectral expansion
    lam0 = 0.15 - 1 / 60
    w0 = 3 * math.sqrt(3) / (10 * math.pi)
    assert z_survival(200.0) == pytest.approx(w0 / lam0 * math.exp(-lam0 * 500.0), rel=1e-12)
    zs = np.linspace(0.05, 60, 400)
    surv = np.array([z_survival(z) for z in zs])
    assert np.all(np.diff(surv) <= 1e-15)
    assert np.allclose(z_cdf(zs), 1 - surv)


def test_exact_law_moments_by_quadrature():
    mean = integrate.quad(z_survival, 0, 80, limit=200)[0]
    second = integrate.quad(lambda z: 2 * z * z_survival(z), 0, 80, limit=200)[0]
    assert mean == pytest.approx(MEAN_Z, rel=1e-9)
    assert second - mean ** 2 == pytest.approx(VAR_Z, rel=1e-8)


@pytest.mark.parametrize("lam", [-1.0, -0.5, 0.25])
def test_mgf_matches_quadrature_of_exact_density(lam):
    val = integrate.quad(lambda z: math.exp(lam * z) * _density_z(z), 1e-3, 600, limit=800)[0]
    assert val == pytest.approx(mgf_Z(lam), rel=1e-6)


def test_exact_sampler_moments():
    z = sample_Z_exact(stream_for(SEED, "exact_z", 0).generator(), 10**6)
    assert np.all(z > 0)
    se = math.sqrt(VAR_Z / z.size)
    assert abs(z.mean() - MEAN_Z) < 4 * se
    assert np.mean(np.exp(-z)) == pytest.approx(mgf_Z(-1.0), rel=0.02)


def test_sde_mean(sde_z):
    assert np.all(sde_z > 0)
    assert sde_z.mean() == pytest.approx(3.62760, rel=0.02)


def test_sde_variance(sde_z):
    assert sde_z.var(ddof=1) == pytest.approx(9.1067, rel=0.05)


def test_sde_mgf_minus_one(sde_z):
    assert np.mean(np.exp(-sde_z)) == pytest.approx(mgf_Z(-1.0), rel=0.02)


def test_sde_law_matches_exact_cdf(sde_z):
    x = np.sort(sde_z)
    n = x.size
    grid = x[:: 97]
    emp = np.searchsorted(x, grid, side="right") / n
    assert np.max(np.abs(emp - z_cdf(grid))) < 0.01


def test_sde_halving_dt_is_within_noise(sde_z):
    coarse = sample_Z_sde(ThetaParams(6.0, 2e-4, stream_for(SEED, "sde_z_coarse", 0)), 10**5)
    se = math.sqrt(coarse.var(ddof=1) / coarse.size + sde_z.var(ddof=1) / sde_z.size)
    assert abs(coarse.mean() - sde_z.mean()) < 3 * se


def test_hitting_time_positive_and_reproducible():
    p = ThetaParams(6.0, 1e-3, RngStream(3, 3))
    a = sample_hitting_times(p, 50)
    b = sample_hitting_times(p, 50)
    assert np.array_equal(a, b) and np.all(a > 0)
    assert sample_Z(p).value == pytest.approx(0.4 * a[0])


def test_z_refused_off_kappa6():
    with pytest.raises(ValueError):
        sample_Z(ThetaParams(5.0, 1e-3))
    with pytest.raises(ValueError):
        ThetaParams(4.0)
    with pytest.raises(ValueError):
        ThetaParams(6.0, scheme="milstein")


def test_euler_scheme_is_not_degenerate():
    # the literal scheme is biased low by a few percent, but it must not absorb on the first step
    z = sample_Z_sde(ThetaParams(6.0, 1e-3, RngStream(1, 1), scheme="euler"), 2000)
    assert np.all(z > 0)
    assert z.mean() == pytest.approx(MEAN_Z, rel=0.10)


def test_count_renewals():
    z = np.array([1.0, 2.0, 3.0])
    assert count_renewals(z, 0.5) == 0
    assert count_renewals(z, 1.0) == 1
    assert count_renewals(z, 3.5) == 2
    with pytest.raises(ValueError):
        count_renewals(z, 6.0)


def test_renewal_near_one_is_zero():
    for r in range(200):
        assert renewal_count(1 - 1e-9, RngStream(1, r)) == 0


def test_renewal_monotone_in_epsilon():
    for r in range(20):
        counts = [renewal_count(eps, RngStream(7, r)) for eps in (1e-1, 1e-3, 1e-10, 1e-40)]
        assert counts == sorted(counts)


def test_renewal_lln():
    ns = np.array([renewal_count_gen(200.0, stream_for(SEED, "renewal_lln", r).generator()) for r in range(10**4)])
    assert ns.mean() / 200 == pytest.approx(0.275664, rel=0.05)


def test_renewal_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        renewal_count(1.0, RngStream(0, 0))
