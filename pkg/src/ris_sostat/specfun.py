"""Special functions backing the closed-form channel statistics.

Everything here operates on real arguments restricted to the domains the
statistics actually exercise: Gauss-hypergeometric arguments in [0, 1],
elliptic modulus in [0, 1], confluent-hypergeometric arguments on the
negative half line.  Each function is checked against an independent
high-precision series or quadrature oracle in the test suite.

Conventions that matter downstream:

* ``elliptic_k``/``elliptic_e`` take the *modulus* k, not the parameter
  m = k**2.  This is the convention under which E(R) - (1 - R**2) K(R)
  vanishes at R = 0 and equals 1 at R = 1, which reproduces the i.i.d.
  limit of the envelope slope variance.
* ``elliptic_k(1.0)`` returns ``inf`` (a sentinel, not an error): callers
  multiply it by a factor that is exactly zero there and must special-case
  the product rather than evaluate 0 * inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError

__all__ = [
    "SpecTolerance",
    "DEFAULT_TOL",
    "bessel_j0",
    "gamma_complete",
    "reg_lower_incomplete_gamma",
    "hyp2f1",
    "hyp2f1_neghalf",
    "hyp2f1_poshalf",
    "hyp1f1",
    "elliptic_k",
    "elliptic_e",
    "sinc",
]


@dataclass(frozen=True)
class SpecTolerance:
    """Accuracy budget for series evaluation."""

    abs_tol: float = 1e-12
    max_terms: int = 10000

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0.0):
            raise DomainError("abs_tol must be positive")
        if self.max_terms < 1:
            raise DomainError("max_terms must be >= 1")


DEFAULT_TOL = SpecTolerance()

# Power series is accurate below this point, the Hankel expansion above it.
_J0_SERIES_CUTOFF = 14.0


def bessel_j0(x):
    """Zeroth-order Bessel function of the first kind, J0(x).

    Accepts scalars or arrays.  Power series for |x| <= 14, Hankel
    asymptotic expansion beyond; both branches stay within ~1e-12 absolute.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("bessel_j0 requires finite input")
    ax = np.abs(arr)
    out = np.empty_like(ax)

    small = ax <= _J0_SERIES_CUTOFF
    if np.any(small):
        xs = ax[small]
        q = 0.25 * xs * xs
        term = np.ones_like(xs)
        total = np.ones_like(xs)
        for k in range(1, 48):
            term = term * (-q) / (k * k)
            total += term
        out[small] = total

    if np.any(~small):
        xl = ax[~small]
        inv8x = 1.0 / (8.0 * xl)
        p = np.ones_like(xl)
        qq = np.zeros_like(xl)
        a = np.ones_like(xl)
        sign = 1.0
        for m in range(1, 21):
            a = a * (2 * m - 1) ** 2 * inv8x / m
            if m % 2 == 1:
                qq = qq - sign * a  # odd terms feed Q with leading -1/(8x)
            else:
                p = p - sign * a  # even terms feed P with leading -9/(128 x^2)
                sign = -sign
        chi = xl - 0.25 * np.pi
        out[~small] = np.sqrt(2.0 / (np.pi * xl)) * (
            np.cos(chi) * p - np.sin(chi) * qq
        )

    if arr.ndim == 0:
        return float(out)
    return out


def gamma_complete(x: float) -> float:
    """Complete gamma function on the positive half line."""
    if not (isinstance(x, (int, float)) and math.isfinite(x)) or x <= 0.0:
        raise DomainError(f"gamma_complete requires x > 0, got {x!r}")
    return math.gamma(x)


def reg_lower_incomplete_gamma(
    r: float, x: float, tol: SpecTolerance = DEFAULT_TOL
) -> float:
    """Regularized lower incomplete gamma P(r, x) = gamma(r, x) / Gamma(r)."""
    if not (r > 0.0 and math.isfinite(r)):
        raise DomainError(f"shape must be positive, got {r!r}")
    if not (x >= 0.0 and math.isfinite(x)):
        raise DomainError(f"argument must be >= 0, got {x!r}")
    if x == 0.0:
        return 0.0
    log_front = r * math.log(x) - x - math.lgamma(r)
    if x < r + 1.0:
        # ascending series for gamma(r, x)
        term = 1.0 / r
        total = term
        for _ in range(tol.max_terms):
            term *= x / (r + _ + 1.0)
            total += term
            if term < tol.abs_tol * total:
                return min(1.0, math.exp(log_front) * total)
        raise NumericError(f"P(r, x) series stalled after {tol.max_terms} terms")
    # Legendre continued fraction for Gamma(r, x), modified Lentz iteration
    tiny = 1e-300
    b = x + 1.0 - r
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, tol.max_terms):
        an = -i * (i - r)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol.abs_tol:
            q = math.exp(log_front) * h
            return min(1.0, max(0.0, 1.0 - q))
    raise NumericError(f"P(r, x) continued fraction stalled after {tol.max_terms} terms")


def _is_nonpositive_integer(v: float) -> bool:
    return v <= 0.0 and float(v).is_integer()


def hyp2f1(
    a: float, b: float, c: float, z: float, tol: SpecTolerance = DEFAULT_TOL
) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for z in [0, 1].

    Direct Gauss series on [0, 1); at z = 1 the Gauss summation closed form
    Gamma(c) Gamma(c-a-b) / (Gamma(c-a) Gamma(c-b)) is used, which requires
    c - a - b > 0.
    """
    if _is_nonpositive_integer(c):
        raise DomainError(f"c must not be a nonpositive integer, got {c!r}")
    if not (0.0 <= z <= 1.0):
        raise DomainError(f"argument must lie in [0, 1], got {z!r}")
    if z == 1.0:
        if c - a - b <= 0.0:
            raise DomainError("2F1 at z=1 requires c - a - b > 0")
        return (
            math.gamma(c)
            * math.gamma(c - a - b)
            / (math.gamma(c - a) * math.gamma(c - b))
        )
    term = 1.0
    total = 1.0
    small_streak = 0
    for k in range(tol.max_terms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total += term
        if abs(term) < 0.1 * tol.abs_tol * max(1.0, abs(total)):
            small_streak += 1
            if small_streak >= 2:
                return total
        else:
            small_streak = 0
    raise NumericError(f"2F1 series did not converge in {tol.max_terms} terms")


def hyp2f1_neghalf(z):
    """Vectorized 2F1(-1/2, -1/2; 1; z) on [0, 1] via the elliptic identity.

    2F1(-1/2, -1/2; 1; z) = (4 E(sqrt(z)) - 2 (1 - z) K(sqrt(z))) / pi,
    exact on the whole interval including z = 1 where the value is 4/pi.
    """
    zz = np.asarray(z, dtype=float)
    if np.any(zz < 0.0) or np.any(zz > 1.0):
        raise DomainError("argument must lie in [0, 1]")
    k = np.sqrt(zz)
    kk, ee = _agm_pair(np.atleast_1d(k))
    out = (4.0 * ee - 2.0 * _one_minus_z_times_k(np.atleast_1d(zz), kk)) / np.pi
    if zz.ndim == 0:
        return float(out[0])
    return out.reshape(zz.shape)


def _one_minus_z_times_k(z: np.ndarray, kk: np.ndarray) -> np.ndarray:
    # (1 - z) K(sqrt(z)) -> 0 as z -> 1; never evaluate the 0 * inf sentinel product
    out = np.zeros_like(z)
    inner = z != 1.0
    out[inner] = (1.0 - z[inner]) * kk[inner]
    return out


def hyp2f1_poshalf(z):
    """Vectorized 2F1(1/2, 1/2; 2; z) on [0, 1] via the elliptic identity.

    2F1(1/2, 1/2; 2; z) = 4 (E(sqrt(z)) - (1 - z) K(sqrt(z))) / (pi z),
    with limit 1 at z = 0 and value 4/pi at z = 1.
    """
    zz = np.asarray(z, dtype=float)
    if np.any(zz < 0.0) or np.any(zz > 1.0):
        raise DomainError("argument must lie in [0, 1]")
    flat = np.atleast_1d(zz)
    k = np.sqrt(flat)
    kk, ee = _agm_pair(k)
    num = 4.0 * (ee - _one_minus_z_times_k(flat, kk))
    out = np.ones_like(flat)
    # series ~ pi z / 4 near 0, so the ratio is well conditioned once z isn't tiny;
    # below the cutoff use the two-term expansion 1 + z/8 + 3 z^2 / 64
    small = flat < 1e-7
    out[~small] = num[~small] / (np.pi * flat[~small])
    out[small] = 1.0 + flat[small] / 8.0 + 3.0 * flat[small] ** 2 / 64.0
    if zz.ndim == 0:
        return float(out[0])
    return out.reshape(zz.shape)


def hyp1f1(a: float, b: float, z: float, tol: SpecTolerance = DEFAULT_TOL) -> float:
    """Confluent hypergeometric function 1F1(a, b; z).

    For z < 0 the Kummer transform 1F1(a, b; z) = exp(z) 1F1(b-a, b; -z)
    replaces the alternating series; the transformed series has positive
    terms whenever b > a and is summed with exp(z) folded into each term so
    that arbitrarily large |z| cannot overflow.
    """
    if _is_nonpositive_integer(b):
        raise DomainError(f"b must not be a nonpositive integer, got {b!r}")
    if z == 0.0:
        return 1.0
    if z <= -100.0:
        return _asymptotic_1f1_negative(a, b, z, tol)
    if z < 0.0 and b - a > 0.0:
        return _kummer_logsum(b - a, b, -z, z, tol)
    return _kummer_series(a, b, z, tol)


def _kummer_series(a: float, b: float, z: float, tol: SpecTolerance) -> float:
    term = 1.0
    total = 1.0
    for k in range(tol.max_terms):
        term *= (a + k) * z / ((b + k) * (k + 1.0))
        total += term
        if not math.isfinite(total):
            raise NumericError(f"1F1 series overflowed at term {k}")
        if k > abs(z) and abs(term) < 0.1 * tol.abs_tol * max(1.0, abs(total)):
            return total
    raise NumericError(f"1F1 series did not converge in {tol.max_terms} terms")


def _kummer_logsum(
    aa: float, bb: float, x: float, shift: float, tol: SpecTolerance
) -> float:
    # exp(shift) * sum_k (aa)_k x^k / ((bb)_k k!), all terms positive:
    # each addend is exp(shift + log term), which is bounded by the result.
    total = math.exp(shift)
    tlog = 0.0
    for k in range(tol.max_terms):
        tlog += math.log(aa + k) + math.log(x) - math.log(bb + k) - math.log(k + 1.0)
        addend = math.exp(shift + tlog)
        total += addend
        if k > x and addend < 0.1 * tol.abs_tol * total:
            return total
    raise NumericError(f"1F1 Kummer series did not converge in {tol.max_terms} terms")


def _asymptotic_1f1_negative(
    a: float, b: float, z: float, tol: SpecTolerance
) -> float:
    # 1F1(a, b; z) ~ (Gamma(b)/Gamma(b-a)) (-z)^(-a) sum_k (a)_k (1+a-b)_k / (k! (-z)^k)
    # as z -> -inf; the exp(z) branch of the full expansion is below underflow.
    # Truncated at the smallest term; for z <= -100 that floor is ~exp(z).
    front = math.exp(
        math.lgamma(b) - math.lgamma(b - a) - a * math.log(-z)
    )
    term = 1.0
    total = 1.0
    last = abs(term)
    for k in range(200):
        term *= (a + k) * (1.0 + a - b + k) / ((k + 1.0) * (-z))
        if abs(term) >= last:  # past optimal truncation
            break
        total += term
        last = abs(term)
        if last < 0.1 * tol.abs_tol * abs(total):
            break
    else:
        raise NumericError("1F1 asymptotic series failed to settle in 200 terms")
    if last > tol.abs_tol * max(1.0, abs(total)):
        raise NumericError(
            f"1F1 asymptotic truncation floor {last:.2e} exceeds tolerance"
        )
    return front * total


def _agm_pair(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """AGM evaluation of (K(k), E(k)) for modulus arrays in [0, 1]."""
    one = k == 1.0
    kc = np.where(one, 0.0, k)
    a = np.ones_like(kc)
    b = np.sqrt(1.0 - kc * kc)
    s = 0.5 * kc * kc
    w = 1.0
    for _ in range(60):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        s = s + w * c * c
        w *= 2.0
        if np.all(np.abs(c) < 1e-18):
            break
    kk = np.pi / (2.0 * a)
    ee = kk * (1.0 - s)
    kk = np.where(one, np.inf, kk)
    ee = np.where(one, 1.0, ee)
    return kk, ee


def elliptic_k(k):
    """Complete elliptic integral of the first kind, modulus convention.

    K(1) returns the +inf sentinel; see the module docstring.
    """
    arr = np.asarray(k, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("modulus must lie in [0, 1]")
    kk, _ = _agm_pair(np.atleast_1d(arr))
    if arr.ndim == 0:
        return float(kk[0])
    return kk.reshape(arr.shape)


def elliptic_e(k):
    """Complete elliptic integral of the second kind, modulus convention."""
    arr = np.asarray(k, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("modulus must lie in [0, 1]")
    _, ee = _agm_pair(np.atleast_1d(arr))
    if arr.ndim == 0:
        return float(ee[0])
    return ee.reshape(arr.shape)


def sinc(x):
    """Normalized sinc, sin(pi x) / (pi x), with value 1 at x = 0."""
    return np.sinc(x)
