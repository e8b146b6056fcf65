"""Radial angle diffusion, the conformal-radius decrement Z and its renewal count.

The angle process solves ``dθ = μ_κ(θ) dt - sqrt(4κ/5) dW`` on [0, 2π], reflected
at 0 and absorbed at 2π, with

    μ_κ(θ) = 4 / (5 sin(θ/2)) * (3 - κ/2 + (κ/4 - 1) cos(θ/2)),

which is (2/5) cot(θ/2) at κ = 6.  At κ = 6 the law of ``Z = 2 S / 5`` (S the
absorption time) has moment generating function
``sqrt(3) / (2 cos(π sqrt(1/36 + 2λ/3)))``.

Near both ends the drift is singular: close to 0 the angle is a Bessel process
of dimension 8/κ, close to 2π the gap ``2π - θ`` is a Bessel process of
dimension 4 - 16/κ.  A plain Euler step with θ ← |θ| mis-weights those
excursions at every step size, so the default ``split`` scheme advances the
Bessel part exactly (noncentral chi-square transition, killed at 0 with the
bridge survival probability I_ν/I_{-ν}) inside a zone of nine step standard
deviations around each end, adds the smooth remainder of the drift by Euler,
and uses Euler-Maruyama in between.  The literal ``euler`` scheme is kept for
comparison.

Expanding the MGF in partial fractions gives the exact density of S,

    f_S(s) = Σ_j (-1)^j 3 sqrt(3) (2j+1) / (10π) exp(-λ_j s),
    λ_j = (3/20)(2j+1)^2 - 1/60,

used by :func:`sample_Z_exact` for inverse-CDF sampling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .rng import RngStream

TWO_PI = 2.0 * math.pi
MEAN_Z = 2.0 * math.sqrt(3.0) * math.pi / 3.0
VAR_Z = 16.0 * math.pi ** 2 / 3.0 - 8.0 * math.sqrt(3.0) * math.pi
RENEWAL_RATE = math.sqrt(3.0) / (2.0 * math.pi)
T_GUARD = 1e4


class NonTerminationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ThetaParams:
    kappa: float = 6.0
    dt: float = 1e-4
    stream: RngStream = RngStream(0, 0)
    scheme: str = "split"

    def __post_init__(self):
        if not self.kappa > 4:
            raise ValueError("kappa must exceed 4")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.scheme not in ("split", "euler"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class ZSample:
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("Z samples are positive")


@numba.njit(cache=True, nogil=True)
def _mu(theta, kappa):
    h = 0.5 * theta
    return 0.8 / math.sin(h) * (3.0 - 0.5 * kappa + (0.25 * kappa - 1.0) * math.cos(h))


def drift(theta: float, kappa: float = 6.0) -> float:
    if not 0.0 < theta < TWO_PI:
        raise ValueError("drift is singular at 0 and 2π")
    return float(_mu(theta, kappa))


def diffusion(kappa: float = 6.0) -> float:
    return math.sqrt(4.0 * kappa / 5.0)


@numba.njit(cache=True, nogil=True)
def _iratio(nu, z):
    """I_ν(z) / I_{-ν}(z) for 0 < ν < 1: survival of a Bessel bridge away from 0."""
    if z > 25.0:
        return 1.0
    if z <= 0.0:
        return 0.0
    h = 0.5 * z
    lh = math.log(h)
    sp = 0.0
    sm = 0.0
    for k in range(400):
        tp = math.exp((2 * k + nu) * lh - math.lgamma(k + 1.0) - math.lgamma(k + nu + 1.0))
        sm += math.exp((2 * k - nu) * lh - math.lgamma(k + 1.0) - math.lgamma(k - nu + 1.0))
        sp += tp
        if tp < 1e-17 * sp and k > h:
            break
    return sp / sm


@numba.njit(cache=True, nogil=True)
def _hit_times(gen, out, dt, kappa, zone, split, t_max):
    s2 = 4.0 * kappa / 5.0
    sig = math.sqrt(s2)
    sq = math.sqrt(dt)
    d0 = 8.0 / kappa
    a0 = s2 * (d0 - 1.0) / 2.0
    d1 = 4.0 - 16.0 / kappa
    a1 = s2 * (d1 - 1.0) / 2.0
    nu1 = 1.0 - 0.5 * d1
    for k in range(out.size):
        th = 0.0
        t = 0.0
        while True:
            t += dt
            if t > t_max:
                return k
            if split and th < zone:
                r = 0.0
                if th > 0.0:
                    r = _mu(th, kappa) - a0 / th
                x = th * th / s2
                xn = dt * gen.noncentral_chisquare(d0, x / dt) if x > 0.0 else dt * gen.chisquare(d0)
                th = sig * math.sqrt(xn) + r * dt
                if th < 0.0:
                    th = -th
            elif split and th > TWO_PI - zone and d1 < 2.0:
                ph = TWO_PI - th
                r = -_mu(th, kappa) - a1 / ph
                y = ph * ph / s2
                yn = dt * gen.noncentral_chisquare(d1, y / dt)
                if gen.random() >= _iratio(nu1, math.sqrt(y * yn) / dt):
                    break
                ph = sig * math.sqrt(yn) + r * dt
                if ph <= 0.0:
                    break
                th = TWO_PI - ph
            else:
                # the drift is infinite at 0 itself: a step from 0 is pure reflected noise
                drift = _mu(th, kappa) * dt if th > 0.0 else 0.0
                th += drift - sig * sq * gen.standard_normal()
                if th < 0.0:
                    th = -th
                if th >= TWO_PI:
                    break
        out[k] = t
    return out.size


def default_zone(kappa: float, dt: float) -> float:
    return min(math.pi, 9.0 * math.sqrt(4.0 * kappa / 5.0 * dt))


def sample_hitting_times(params: ThetaParams, size: int, gen: np.random.Generator | None = None) -> np.ndarray:
    """``size`` absorption times S from one stream."""
    if gen is None:
        gen = params.stream.generator()
    out = np.empty(int(size))
    done = _hit_times(gen, out, params.dt, params.kappa, default_zone(params.kappa, params.dt),
                      params.scheme == "split", T_GUARD)
    if done < out.size:
        raise NonTerminationError(f"angle process not absorbed by t = {T_GUARD:g}")
    return out


def sample_hitting_time(params: ThetaParams) -> float:
    return float(sample_hitting_times(params, 1)[0])


def _check_kappa6(kappa):
    if kappa != 6.0:
        raise ValueError("the law of Z is only identified at kappa = 6; for other kappa the hitting law "
                         "might be hard to obtain, so Z sampling is refused")


def sample_Z(params: ThetaParams) -> ZSample:
    _check_kappa6(params.kappa)
    return ZSample(0.4 * sample_hitting_time(params))


def sample_Z_sde(params: ThetaParams, size: int, gen: np.random.Generator | None = None) -> np.ndarray:
    _check_kappa6(params.kappa)
    return 0.4 * sample_hitting_times(params, size, gen)


def mgf_Z(lam: float) -> float:
    if not lam < 1.0 / 3.0:
        raise ValueError("mgf of Z is finite only for lambda < 1/3")
    x = 1.0 / 36.0 + 2.0 * lam / 3.0
    c = math.cos(math.pi * math.sqrt(x)) if x >= 0 else math.cosh(math.pi * math.sqrt(-x))
    return math.sqrt(3.0) / (2.0 * c)


def moments_Z() -> tuple[float, float]:
    return MEAN_Z, VAR_Z


# --------------------------------------------------------------------------
# exact law of S (and Z = 2S/5)

_W0 = 3.0 * math.sqrt(3.0) / (10.0 * math.pi)
_S_MIN = 0.05  # P(S <= 0.05) < 1e-30


@numba.njit(cache=True, nogil=True)
def _lam(j):
    m = 2.0 * j + 1.0
    return 0.15 * m * m - 1.0 / 60.0


@numba.njit(cache=True, nogil=True)
def _surv_pdf(s):
    sv = 0.0
    pdf = 0.0
    j = 0
    while True:
        lj = _lam(j)
        e = math.exp(-lj * s)
        w = _W0 * (2.0 * j + 1.0) * (1.0 if j % 2 == 0 else -1.0)
        sv += w * e / lj
        pdf += w * e
        if lj * s > 45.0 and j >= 2:
            break
        j += 1
    return sv, pdf


@numba.njit(cache=True, nogil=True)
def _inv_surv(v):
    """s with P(S > s) = v."""
    lo = _S_MIN
    hi = max(1.0, (math.log(2.0 * _W0 / _lam(0)) - math.log(v)) / _lam(0) + 1.0)
    s = min(max((math.log(_W0 / _lam(0)) - math.log(v)) / _lam(0), lo), hi)
    for _ in range(100):
        sv, pdf = _surv_pdf(s)
        g = sv - v
        if g > 0:
            lo = s
        else:
            hi = s
        step = g / pdf if pdf > 0 else 0.0
        sn = s + step
        if not (lo < sn < hi):
            sn = 0.5 * (lo + hi)
        if abs(sn - s) <= 1e-13 * max(1.0, s):
            return sn
        s = sn
    return s


@numba.njit(cache=True, nogil=True)
def _inv_surv_many(v, out):
    for i in range(v.size):
        out[i] = _inv_surv(v[i])


def s_survival(s: float) -> float:
    return 1.0 if s <= _S_MIN else float(_surv_pdf(s)[0])


def z_survival(z: float) -> float:
    """P(Z > z), exact."""
    return s_survival(2.5 * z)


def z_cdf(z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return np.array([1.0 - z_survival(x) for x in z])


def sample_Z_exact(gen: np.random.Generator, size: int) -> np.ndarray:
    """Inverse-CDF samples of Z from the exact spectral law."""
    v = 1.0 - gen.random(int(size))  # uniform on (0, 1]
    out = np.empty(v.size)
    _inv_surv_many(v, out)
    return 0.4 * out


# --------------------------------------------------------------------------
# renewal counter


def count_renewals(z: np.ndarray, threshold: float) -> int:
    """max{k : Z_1 + ... + Z_k <= threshold} for a finite prefix that overshoots."""
    cs = np.cumsum(z)
    if cs.size == 0 or cs[-1] <= threshold:
        raise ValueError("Z prefix does not exceed the threshold")
    return int(np.searchsorted(cs, threshold, side="right"))


def renewal_count(epsilon: float, stream: RngStream, sampler: str = "exact", params: ThetaParams | None = None) -> int:
    """N(ε): number of renewals of the Z sequence before -log ε."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    gen = stream.generator()
    return renewal_count_gen(-math.log(epsilon), gen, sampler, params)


def renewal_count_gen(threshold: float, gen: np.random.Generator, sampler: str = "exact",
                      params: ThetaParams | None = None) -> int:
    batch = int(threshold / MEAN_Z * 1.3) + 8
    zs = np.empty(0)
    while zs.sum() <= threshold:
        if sampler == "exact":
            more = sample_Z_exact(gen, batch)
        elif sampler == "sde":
            more = sample_Z_sde(params or ThetaParams(), batch, gen)
        else:
            raise ValueError(f"unknown sampler {sampler!r}")
        zs = np.concatenate([zs, more])
        batch = max(8, batch // 4)
    return count_renewals(zs, threshold)
