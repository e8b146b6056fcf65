"""Expected number of crossing clusters in a conformal rectangle, and its
half-annulus slope.

For cross-ratio λ the expected count is

    C λ^{1/3} ₂F₁(1/3, 2/3; 4/3; λ) − (√3/4π) λ ₃F₂(1, 1, 4/3; 5/3, 2; λ)
        + (√3/4π) log(1/(1−λ)),

with C = 2π√3 / Γ(1/3)^3, so that the first term is Cardy's crossing
probability (it equals the regularized incomplete beta I_λ(1/3, 1/3) and tends
to 1 as λ → 1).

Both series are summed directly for λ ≤ 1/2.  Closer to 1 their terms decay
only like k^(-4/3), so the standard 1−λ connection formulas are used instead;
they need the power series at 1−λ only.  Every evaluator accepts the
complement 1−λ separately because the half-annulus cross-ratio at log R = 100
is 1 − 6e-43.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special

# Γ(1/3) from the C library gamma (Lanczos-class); checked against a 50-digit
# value in the tests.
GAMMA_1_3 = math.gamma(1.0 / 3.0)
CARDY_CONST = 2.0 * math.pi * math.sqrt(3.0) / GAMMA_1_3 ** 3
LOG_COEF = math.sqrt(3.0) / (4.0 * math.pi)

_G = math.gamma
_A2 = _G(4 / 3) * _G(1 / 3) / _G(2 / 3)
_B2 = _G(4 / 3) * _G(-1 / 3) / (_G(1 / 3) * _G(2 / 3))
_A3 = _G(5 / 3) * _G(-2 / 3) / (_G(2 / 3) * _G(1 / 3))
_B3 = _G(5 / 3) * _G(2 / 3) / _G(4 / 3)
_BETA13 = _G(1 / 3) ** 2 / _G(2 / 3)


class SeriesConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SeriesControl:
    tol: float = 1e-12
    max_terms: int = 10**7

    def __post_init__(self):
        if not 0 < self.tol < 1 or self.max_terms < 1:
            raise ValueError("need 0 < tol < 1 and max_terms >= 1")


@dataclass(frozen=True)
class CrossRatio:
    """Cross-ratio λ with its complement 1−λ kept to full relative precision."""

    value: float
    complement: float

    def __post_init__(self):
        if not (self.value > 0 and self.complement > 0):
            raise ValueError("cross-ratio must lie strictly inside (0, 1)")

    @staticmethod
    def of(lam: float) -> "CrossRatio":
        return CrossRatio(lam, 1.0 - lam)


def _series(a: tuple, b: tuple, z: float, ctl: SeriesControl, scale: float = 1.0) -> float:
    """Σ_k Π(a_i)_k / Π(b_i)_k z^k / k!  (b includes no implicit 1)."""
    term = scale
    total = scale
    k = 0
    while True:
        num = 1.0
        for ai in a:
            num *= ai + k
        den = float(k + 1)
        for bi in b:
            den *= bi + k
        term *= num / den * z
        total += term
        k += 1
        if abs(term) < ctl.tol * abs(total) or term == 0.0:
            return total
        if k >= ctl.max_terms:
            raise SeriesConvergenceError(f"series did not converge in {ctl.max_terms} terms at z={z}")


def _check_unit(lam, comp):
    if comp is None:
        comp = 1.0 - lam
    if not (0.0 <= lam <= 1.0) or comp < 0:
        raise ValueError("lambda must lie in [0, 1]")
    return comp


def hyp2f1_a(lam: float, ctl: SeriesControl = SeriesControl(), complement: float | None = None) -> float:
    """₂F₁(1/3, 2/3; 4/3; λ) for λ in [0, 1]."""
    w = _check_unit(lam, complement)
    if lam <= 0.5:
        return _series((1 / 3, 2 / 3), (4 / 3,), lam, ctl)
    tail = 0.0 if w == 0 else w ** (1 / 3) * _series((1.0, 2 / 3), (4 / 3,), w, ctl)
    return _A2 * lam ** (-1 / 3) + _B2 * tail


def _lam_hyp3f2(lam: float, ctl: SeriesControl, w: float) -> float:
    """λ ₃F₂(1, 1, 4/3; 5/3, 2; λ), i.e. the integral of ₂F₁(1, 4/3; 5/3; t) over [0, λ]."""
    if lam <= 0.5:
        return lam * _series((1.0, 1.0, 4 / 3), (5 / 3, 2.0), lam, ctl)
    half = 0.5 * _series((1.0, 1.0, 4 / 3), (5 / 3, 2.0), 0.5, ctl)
    low = w * _series((1.0, 1.0, 4 / 3), (5 / 3, 2.0), w, ctl) if w > 0 else 0.0
    inc = special.betainc(1 / 3, 1 / 3, w) if w > 0 else 0.0
    return (1.0 + _A3) * half - _A3 * low + _B3 * _BETA13 * (0.5 - inc)


def hyp3f2(lam: float, ctl: SeriesControl = SeriesControl(), complement: float | None = None) -> float:
    """₃F₂(1, 1, 4/3; 5/3, 2; λ) for λ in [0, 1]."""
    w = _check_unit(lam, complement)
    if lam == 0.0:
        return 1.0
    return _lam_hyp3f2(lam, ctl, w) / lam


def _as_cr(lam) -> CrossRatio:
    if isinstance(lam, CrossRatio):
        return lam
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie in (0, 1)")
    return CrossRatio.of(float(lam))


def first_two_terms(lam, ctl: SeriesControl = SeriesControl()) -> float:
    cr = _as_cr(lam)
    x, w = cr.value, cr.complement
    return CARDY_CONST * x ** (1 / 3) * hyp2f1_a(x, ctl, w) - LOG_COEF * _lam_hyp3f2(x, ctl, w)


def expected_crossing_clusters(lam, ctl: SeriesControl = SeriesControl()) -> float:
    cr = _as_cr(lam)
    return first_two_terms(cr, ctl) - LOG_COEF * math.log(cr.complement)


# --------------------------------------------------------------------------
# elliptic integrals and cross-ratios


def agm(a: float, b: float) -> float:
    while True:
        an, bn = 0.5 * (a + b), math.sqrt(a * b)
        if an == a and bn == b or abs(an - bn) <= 1e-16 * an:
            return 0.5 * (an + bn)
        a, b = an, bn


def elliptic_K(m: float) -> float:
    """Complete elliptic integral of the first kind, parameter m = k^2."""
    if not 0.0 <= m < 1.0:
        raise ValueError("elliptic_K needs m in [0, 1)")
    return math.pi / (2.0 * agm(1.0, math.sqrt(1.0 - m)))


def elliptic_K_comp(kp: float) -> float:
    """K(1 − kp²) from the complementary modulus kp, exact for tiny kp."""
    if not 0.0 < kp <= 1.0:
        raise ValueError("complementary modulus must lie in (0, 1]")
    return math.pi / (2.0 * agm(1.0, kp))


def aspect_ratio(k: float, kp: float) -> float:
    """2 K(k^2) / K(1 - k^2) given the modulus and its complement."""
    return 2.0 * agm(1.0, k) / agm(1.0, kp)


def rect_modulus(eta: float) -> tuple[float, float]:
    """(k, k') with 2K(k^2)/K(1-k^2) = eta, k' = sqrt(1 - k^2)."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    big = eta >= 2.0  # k >= 1/sqrt(2): bisect on log k', else on log k

    def pair(t):
        small = math.exp(t)
        other = math.sqrt((1.0 - small) * (1.0 + small))
        return (other, small) if big else (small, other)

    def f(t):
        return aspect_ratio(*pair(t)) - eta

    lo, hi = -745.0, math.log(math.sqrt(0.5))
    flo, fhi = f(lo), f(hi)
    if not big and flo > 0.0:
        # k below the bisection range; k = 4 exp(-pi/eta) (1 + O(k^2))
        k = 4.0 * math.exp(-math.pi / eta)
        if k == 0.0:
            raise ArithmeticError(f"modulus underflows for eta={eta}")
        return k, 1.0
    if big:
        flo, fhi = -flo, -fhi
    if not (flo <= 0.0 <= fhi):
        raise ArithmeticError(f"aspect-ratio equation not bracketed for eta={eta}")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        fm = f(mid) if not big else -f(mid)
        if fm <= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, abs(mid)):
            break
    return pair(0.5 * (lo + hi))


def rect_cross_ratio(eta: float) -> CrossRatio:
    """Cross-ratio of the rectangle [0, eta] x [0, 1] with marked corners i, 0, eta, eta + i."""
    k, kp = rect_modulus(eta)
    one_minus_k = kp * kp / (1.0 + k)
    lam = (one_minus_k / (1.0 + k)) ** 2
    return CrossRatio(lam, 4.0 * k / (1.0 + k) ** 2)


def half_annulus_cross_ratio(R: float | None = None, log_r: float | None = None) -> CrossRatio:
    """Cross-ratio of the half-annulus A+(1, R) with its four corner points."""
    if log_r is None:
        if R is None or not R > 1:
            raise ValueError("R must exceed 1")
        log_r = math.log(R)
    elif not log_r > 0:
        raise ValueError("log R must be positive")
    rect = rect_cross_ratio(log_r / math.pi)
    return CrossRatio(rect.complement, rect.value)


def slope(R: float | None = None, log_r: float | None = None) -> float:
    """Expected crossing-cluster count of the half-annulus divided by log R."""
    if log_r is None:
        if R is None or not R > math.e:
            raise ValueError("slope needs R > e")
        log_r = math.log(R)
    elif not log_r > 1:
        raise ValueError("slope needs log R > 1")
    return expected_crossing_clusters(half_annulus_cross_ratio(log_r=log_r)) / log_r


SLOPE_LIMIT = LOG_COEF
