"""Closed-form second-order statistics of the optimally phased RIS channel.

Level crossing rates and average fade durations for the direct and RIS-only
links, temporal SNR correlation of the full channel, the spatial channel
correlation matrix, and the mean-SNR loss from ageing phase designs.

Two gamma parameterizations of the composite amplitude Y(t) coexist and are
kept as distinct types: ``GammaFit`` is the (shape r, rate theta) moment
match used by the crossing-rate closed forms; ``ChiSquareStyleFit`` is the
chi-square style (alpha, r2) convention under which the bivariate-gamma
cross moments that drive the SNR correlation are exact.  They describe the
same distribution: r2 = 2 * shape and alpha = 1 / (2 * rate).

All SNR-valued outputs are in linear units and include the transmit SNR
factor carried by the scenario; correlation-type outputs are invariant to
it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import LinkSet, ScenarioConfig, build_links, jakes_rho
from .errors import (
    DegenerateModelError,
    DomainError,
    NotPositiveSemidefiniteError,
    NumericError,
    PrecisionLossError,
)
from .specfun import hyp1f1, hyp2f1_neghalf, hyp2f1_poshalf, reg_lower_incomplete_gamma
from .specfun import _agm_pair, _one_minus_z_times_k

__all__ = [
    "EigenSpectrum",
    "GammaFit",
    "ChiSquareStyleFit",
    "YMoments",
    "SnrTerms",
    "ChannelCorrResult",
    "lcr_direct_exact",
    "lcr_direct_stable",
    "cdf_direct",
    "afd_direct",
    "omega2",
    "moments_Y",
    "pdf_snr_ris",
    "lcr_ris",
    "cdf_ris",
    "afd_ris",
    "ris_snr_scale",
    "snr_corr_terms",
    "snr_correlation",
    "hd_quad_amp_moment",
    "channel_corr",
    "per_antenna_power",
    "mean_snr",
    "mean_snr_aged",
    "ageing_loss",
]

_EIG_GAP_TOL = 1e-9  # pairwise relative gap below which the exact LCR is refused
_ZERO_EIG_TOL = 1e-12  # relative threshold for dropping zero eigenvalues


# ---------------------------------------------------------------------------
# spectrum and gamma-fit types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenSpectrum:
    """Positive eigenvalues of the scaled direct-link covariance, descending."""

    theta: np.ndarray
    dropped: int = 0

    def __post_init__(self) -> None:
        th = np.asarray(self.theta, dtype=float)
        if th.ndim != 1 or th.size == 0:
            raise DomainError("spectrum must be a nonempty 1-D array")
        if np.any(th <= 0.0):
            raise DomainError("spectrum entries must be positive")
        if np.any(np.diff(th) > 0.0):
            raise DomainError("spectrum must be sorted descending")
        object.__setattr__(self, "theta", th)

    @classmethod
    def from_correlation(cls, R: np.ndarray, scale: float) -> "EigenSpectrum":
        """Spectrum of ``scale * R`` with zero eigenvalues dropped."""
        if scale <= 0.0:
            raise DomainError("scale must be positive")
        w = np.linalg.eigvalsh(np.asarray(R))[::-1] * scale
        keep = w > _ZERO_EIG_TOL * w[0]
        return cls(theta=w[keep], dropped=int(w.size - keep.sum()))

    @property
    def size(self) -> int:
        return int(self.theta.size)

    @property
    def mean(self) -> float:
        """Mean of the associated SNR, sum of the eigenvalues."""
        return float(self.theta.sum())


@dataclass(frozen=True)
class GammaFit:
    """Gamma law in (shape r, rate theta) convention."""

    shape_r: float
    rate_theta: float

    def __post_init__(self) -> None:
        if not (self.shape_r > 0.0 and self.rate_theta > 0.0):
            raise DomainError("gamma fit parameters must be positive")

    @classmethod
    def from_moments(cls, mean: float, var: float) -> "GammaFit":
        if mean <= 0.0 or var <= 0.0:
            raise DegenerateModelError("gamma fit needs positive mean and variance")
        return cls(shape_r=mean * mean / var, rate_theta=mean / var)

    @property
    def mean(self) -> float:
        return self.shape_r / self.rate_theta

    @property
    def var(self) -> float:
        return self.shape_r / self.rate_theta**2


@dataclass(frozen=True)
class ChiSquareStyleFit:
    """Same gamma law in the chi-square style (alpha, r2) convention.

    r2 = 2 * shape and alpha = scale / 2, so E[Y] = r2 alpha,
    E[Y^2] = alpha^2 r2 (r2 + 2), E[Y^3] = alpha^3 r2 (r2 + 2)(r2 + 4), ...
    ``gamma_corr`` is the lag correlation of the underlying bivariate gamma.
    """

    alpha: float
    r2: float
    gamma_corr: float = 0.0

    def __post_init__(self) -> None:
        if not (self.alpha > 0.0 and self.r2 > 0.0):
            raise DomainError("chi-square style parameters must be positive")
        if not -1e-12 <= self.gamma_corr <= 1.0 + 1e-12:
            raise DomainError("gamma_corr must lie in [0, 1]")

    @classmethod
    def from_moments(cls, mean: float, var: float, gamma_corr: float = 0.0):
        if mean <= 0.0 or var <= 0.0:
            raise DegenerateModelError("fit needs positive mean and variance")
        alpha = var / (2.0 * mean)
        return cls(alpha=alpha, r2=mean / alpha, gamma_corr=gamma_corr)

    def moment(self, order: int) -> float:
        """E[Y^order] for order in 1..4."""
        a, r = self.alpha, self.r2
        vals = {
            1: a * r,
            2: a**2 * r * (r + 2.0),
            3: a**3 * r * (r + 2.0) * (r + 4.0),
            4: a**4 * r * (r + 2.0) * (r + 4.0) * (r + 6.0),
        }
        if order not in vals:
            raise DomainError("only moments 1..4 are provided")
        return vals[order]

    def cross_moment_12(self) -> float:
        """E[Y(t) Y(t+tau)^2] under the bivariate gamma law."""
        a, r, g = self.alpha, self.r2, self.gamma_corr
        return a**3 * r * (r + 2.0) * (4.0 * g * g + r)

    def cross_moment_22(self) -> float:
        """E[Y(t)^2 Y(t+tau)^2] under the bivariate gamma law."""
        a, r, g = self.alpha, self.r2, self.gamma_corr
        return a**4 * r * (r + 2.0) * (
            r * r + 8.0 * r * g * g + 2.0 * r + 8.0 * g**4 + 16.0 * g * g
        )


# ---------------------------------------------------------------------------
# direct-link LCR
# ---------------------------------------------------------------------------


def _lcr_single_branch(theta: float, f: float, T) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    out = np.zeros_like(T)
    pos = T > 0.0
    out[pos] = np.sqrt(2.0 * np.pi * T[pos] / theta) * f * np.exp(-T[pos] / theta)
    return out


def lcr_direct_exact(
    spectrum: EigenSpectrum, f_d: float, T, validate: bool = True
):
    """Exact direct-link LCR for distinct eigenvalues.

    The closed form divides by pairwise eigenvalue differences; clustered
    spectra destroy it numerically, so by default inputs with a pairwise
    relative gap below 1e-9 are refused (use :func:`lcr_direct_stable`).
    ``validate=False`` evaluates the raw formula regardless, which is only
    useful to exhibit the breakdown.
    """
    if f_d < 0.0:
        raise DomainError("Doppler frequency must be >= 0")
    th = spectrum.theta
    scalar_in = np.isscalar(T) or np.ndim(T) == 0
    if th.size == 1:
        out = _lcr_single_branch(float(th[0]), f_d, T)
        return float(out) if scalar_in else out

    if validate:
        gaps = np.abs(th[:, None] - th[None, :]) / th[0]
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() <= _EIG_GAP_TOL:
            raise PrecisionLossError(
                "near-degenerate eigenvalues (relative gap "
                f"{gaps.min():.2e}); use lcr_direct_stable"
            )

    # scale invariance: normalize by the trace for conditioning
    mu = spectrum.mean
    th = th / mu
    Tn = np.atleast_1d(np.asarray(T, dtype=float)) / mu
    m = th.size

    out = np.zeros_like(Tn)
    pos = Tn > 0.0
    Tp = Tn[pos]
    kummer = {}
    for l in range(m):
        kummer[l] = np.array([hyp1f1(1.0, 2.5, -t / th[l]) for t in Tp])
    acc = np.zeros_like(Tp)
    for n in range(m):
        expn = np.exp(-Tp / th[n])
        inner = np.zeros_like(Tp)
        for l in range(m):
            if l == n:
                continue
            w = math.sqrt(th[n]) / (th[l] * (th[n] - th[l]))
            for k in range(m):
                if k == n or k == l:
                    continue
                w *= th[l] * th[n] / ((th[l] - th[k]) * (th[n] - th[k]))
            inner += w * kummer[l]
        acc += expn * inner
    out[pos] = (math.sqrt(np.pi) * (2.0 * Tp) ** 1.5 * f_d / 3.0) * acc
    return float(out[0]) if scalar_in else out


def _reduce_spectrum(spectrum: EigenSpectrum, kept: int):
    """Leading ``kept`` eigenvalues plus the trailing average, trace preserved."""
    th = spectrum.theta
    if not 1 <= kept < th.size:
        raise DomainError(f"kept count must satisfy 1 <= kept < {th.size}")
    values = np.concatenate([th[:kept], [th[kept:].mean()]])
    mults = np.concatenate([np.ones(kept), [th.size - kept]])
    return values, mults


def _cf_mesh(values, mults, s, t):
    """E[exp(j s X - t W)] = prod (1 - j s theta + t theta^2)^(-mult) on a mesh."""
    phi = np.ones((s.size, t.size), dtype=complex)
    for theta, m in zip(values, mults):
        denom = 1.0 - 1j * s[:, None] * theta + t[None, :] * theta * theta
        phi *= denom ** (-m)
    return phi


def _tilted_density(values, mults, T: float, t_nodes: np.ndarray):
    """q(T, t) = E[exp(-t W) delta(X - T)] for every t in ``t_nodes``.

    Midpoint-sampled Fourier inversion of the joint transform: the sampled
    sum equals the true value plus aliasing images displaced by 2 pi / ds,
    so the period is set 40 sigma beyond the support seen from T and only
    truncation of the tail of the characteristic function remains.
    """
    mu = float(np.dot(mults, values))
    sigma = math.sqrt(float(np.dot(mults, values**2)))
    period = T + mu + 40.0 * sigma
    ds = 2.0 * np.pi / period
    t_all = np.concatenate([[0.0], t_nodes])
    q = np.zeros(t_all.size)

    block = 2048
    start = 0
    quiet = 0
    max_blocks = 4096
    for _ in range(max_blocks):
        s = (np.arange(start, start + block) + 0.5) * ds
        phi = _cf_mesh(values, mults, s, t_all)
        contrib = (ds / np.pi) * (np.exp(-1j * s * T)[:, None] * phi).real.sum(axis=0)
        q += contrib
        start += block
        # absolute envelope of the CF tail at the block end
        env = np.exp(
            -0.5 * float(np.dot(mults, np.log1p((s[-1] * values) ** 2)))
        )
        scale = max(abs(q[0]), 1e-3 / sigma)
        if np.max(np.abs(contrib)) < 1e-11 * scale or env < 1e-18:
            quiet += 1
            if quiet >= 2:
                return q[0], q[1:]
        else:
            quiet = 0
    raise NumericError(
        f"CF inversion did not converge within {max_blocks * block} terms"
    )


def _gauss_legendre_panels(edges: np.ndarray, order: int = 24):
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(0.5 * (hi + lo) + half * x)
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _lcr_cf_inversion(values, mults, f: float, T: float) -> float:
    """Crossing rate sqrt(2) f Int (q(T,0) - q(T,u^2)) / u^2 du.

    Uses the identity sqrt(W) = (2 sqrt(pi))^(-1) Int t^(-3/2)(1 - e^(-W t)) dt
    inside the Rice formula; stable under repeated eigenvalues because only
    products of CF factors appear.
    """
    if T <= 0.0:
        return 0.0
    theta_min = float(values.min())
    u_max = 6.0 / math.sqrt(theta_min * T)
    edges = u_max * np.concatenate([[0.0], 2.0 ** np.arange(-9.0, 1.0)])
    u, w = _gauss_legendre_panels(edges)
    q0, qt = _tilted_density(values, mults, T, u * u)
    integral = float(np.dot(w, (q0 - qt) / (u * u))) + q0 / u_max
    return max(0.0, math.sqrt(2.0) * f * integral)


def lcr_direct_stable(spectrum: EigenSpectrum, kept: int, f_d: float, T):
    """Numerically stable direct-link LCR keeping ``kept`` leading eigenvalues.

    The trailing eigenvalues are replaced by their average (trace
    preserved) and the crossing rate of the reduced model is evaluated
    exactly by 1-D characteristic-function inversion.
    """
    if f_d < 0.0:
        raise DomainError("Doppler frequency must be >= 0")
    mu = spectrum.mean
    values, mults = _reduce_spectrum(spectrum, kept)
    values = values / mu
    scalar_in = np.isscalar(T) or np.ndim(T) == 0
    Tn = np.atleast_1d(np.asarray(T, dtype=float)) / mu
    out = np.array([_lcr_cf_inversion(values, mults, f_d, float(t)) for t in Tn])
    return float(out[0]) if scalar_in else out


# ---------------------------------------------------------------------------
# direct-link CDF and AFD
# ---------------------------------------------------------------------------


def _cdf_gil_pelaez(theta: np.ndarray, T: float) -> float:
    """Truncated Gil-Pelaez sum for P(sum theta_i Exp_i < T).

    The frequency step Delta is sized by a Chebyshev bound so the mass
    outside (T - 2 pi / Delta, T + 2 pi / Delta) is below 1e-8, and terms
    are added until successive partial sums move by less than 1e-8.
    """
    mu = float(theta.sum())
    sigma = math.sqrt(float((theta**2).sum()))
    period = abs(mu - T) + 1.0e4 * sigma  # Chebyshev: tail mass <= 1e-8 at 1e4 sigma
    delta = 2.0 * np.pi / period

    total = 0.0
    block = 1 << 16
    start = 0
    quiet = 0
    max_terms = 1 << 27
    while start < max_terms:
        idx = np.arange(start, start + block) + 0.5
        s = idx * delta
        psi = np.ones(block, dtype=complex)
        for th in theta:
            psi /= 1.0 - 1j * s * th
        contrib = float((np.imag(psi * np.exp(-1j * s * T)) / (np.pi * idx)).sum())
        total += contrib
        start += block
        if abs(contrib) < 1e-8:
            quiet += 1
            if quiet >= 2:
                return min(1.0, max(0.0, 0.5 - total))
        else:
            quiet = 0
    raise NumericError(
        f"Gil-Pelaez sum did not converge within {max_terms} terms "
        f"(last block {abs(contrib):.2e})"
    )


def cdf_direct(spectrum: EigenSpectrum, T):
    """Direct-link SNR CDF via characteristic-function inversion.

    The single-branch case is evaluated in closed form (its CF decays too
    slowly for a practical truncated sum).
    """
    scalar_in = np.isscalar(T) or np.ndim(T) == 0
    Tn = np.atleast_1d(np.asarray(T, dtype=float))
    if np.any(Tn < 0.0):
        raise DomainError("threshold must be >= 0")
    mu = spectrum.mean
    th = spectrum.theta / mu
    if th.size == 1:
        out = 1.0 - np.exp(-Tn / mu)
    else:
        out = np.array([_cdf_gil_pelaez(th, float(t) / mu) for t in Tn])
    return float(out[0]) if scalar_in else out


def afd_direct(spectrum: EigenSpectrum, f_d: float, T, kept: int | None = None):
    """Average fade duration CDF(T) / LCR(T) for the direct link.

    ``kept`` is the eigenvalue count for the stable LCR (default 2, capped
    at M - 1); the single-branch case uses the closed forms directly.
    """
    cdf = cdf_direct(spectrum, T)
    if spectrum.size == 1:
        lcr = lcr_direct_exact(spectrum, f_d, T)
    else:
        if kept is None:
            kept = min(2, spectrum.size - 1)
        lcr = lcr_direct_stable(spectrum, kept, f_d, T)
    return _fade_ratio(cdf, lcr)


# ---------------------------------------------------------------------------
# RIS-link statistics
# ---------------------------------------------------------------------------


def omega2(R_ur: np.ndarray, beta_ur: float, f_ur: float) -> float:
    """Slope variance of the composite amplitude Y(t).

    pi^2 f^2 beta * sum_{k,l} (E(|R_kl|) - (1 - |R_kl|^2) K(|R_kl|)), the
    elliptic-integral envelope cross-covariance summed over all element
    pairs.  Each diagonal entry contributes exactly 1 (E(1) = 1 and the
    K(1) sentinel is multiplied by an exact zero), so omega2(I) is exactly
    pi^2 f^2 beta N.
    """
    if beta_ur <= 0.0 or f_ur < 0.0:
        raise DomainError("beta_ur must be > 0 and f_ur >= 0")
    a = np.abs(np.asarray(R_ur)).ravel()
    if np.any(a > 1.0 + 1e-12):
        raise DomainError("correlation magnitudes must lie in [0, 1]")
    a = np.clip(a, 0.0, 1.0)
    kk, ee = _agm_pair(a)
    terms = ee - _one_minus_z_times_k(a * a, kk)
    return float(np.pi**2 * f_ur**2 * beta_ur * terms.sum())


@dataclass(frozen=True)
class YMoments:
    """Moment summary of Y(t) = sum_k |h_ur,k(t)| plus both gamma fits."""

    mean: float
    second: float
    var: float
    gamma_fit: GammaFit
    chi2_fit: ChiSquareStyleFit


def moments_Y(R_ur: np.ndarray, beta_ur: float) -> YMoments:
    """First two moments of Y(t) and the matching gamma parameterizations.

    E[Y] = N sqrt(pi beta)/2;
    E[Y^2] = beta (pi/4) sum_{i,j} 2F1(-1/2,-1/2;1;|R_ij|^2) over all pairs
    (the diagonal terms equal 4/pi, reproducing sum E|h_k|^2 = N beta).
    """
    if beta_ur <= 0.0:
        raise DomainError("beta_ur must be positive")
    R = np.asarray(R_ur)
    n = R.shape[0]
    fsum = float(hyp2f1_neghalf(np.abs(R) ** 2).sum())
    mean = n * math.sqrt(math.pi * beta_ur) / 2.0
    second = beta_ur * (math.pi / 4.0) * fsum
    var = second - mean * mean
    if var <= 0.0:
        raise DegenerateModelError("nonpositive Var[Y]; correlation input is invalid")
    return YMoments(
        mean=mean,
        second=second,
        var=var,
        gamma_fit=GammaFit.from_moments(mean, var),
        chi2_fit=ChiSquareStyleFit.from_moments(mean, var),
    )


def ris_snr_scale(scenario: ScenarioConfig, links: LinkSet | None = None) -> float:
    """c in SNR_R = c Y^2: transmit SNR times M beta_rb."""
    links = links or build_links(scenario)
    return scenario.tx_snr * scenario.M * links.gains.beta_rb


def _log_pdf_snr_ris(T: np.ndarray, fit: GammaFit, c: float) -> np.ndarray:
    r, th = fit.shape_r, fit.rate_theta
    return (
        r * math.log(th)
        - math.lgamma(r)
        - math.log(2.0)
        + (0.5 * r - 1.0) * np.log(T)
        - 0.5 * r * math.log(c)
        - th * np.sqrt(T / c)
    )


def pdf_snr_ris(T, fit: GammaFit, c: float):
    """Gamma-approximate density of the RIS-only SNR c Y^2."""
    if c <= 0.0:
        raise DomainError("c must be positive")
    scalar_in = np.isscalar(T) or np.ndim(T) == 0
    Tn = np.atleast_1d(np.asarray(T, dtype=float))
    out = np.zeros_like(Tn)
    pos = Tn > 0.0
    out[pos] = np.exp(_log_pdf_snr_ris(Tn[pos], fit, c))
    return float(out[0]) if scalar_in else out


def lcr_ris(T, fit: GammaFit, omega_sq: float, c: float):
    """Gamma-approximate RIS-link LCR sqrt(2 c T omega^2 / pi) f_SNR(T)."""
    if c <= 0.0 or omega_sq < 0.0:
        raise DomainError("c must be > 0 and omega^2 >= 0")
    scalar_in = np.isscalar(T) or np.ndim(T) == 0
    Tn = np.atleast_1d(np.asarray(T, dtype=float))
    if np.any(Tn < 0.0):
        raise DomainError("threshold must be >= 0")
    out = np.zeros_like(Tn)
    pos = Tn > 0.0
    out[pos] = np.exp(
        0.5 * np.log(2.0 * c * Tn[pos] * omega_sq / np.pi)
        + _log_pdf_snr_ris(Tn[pos], fit, c)
    )
    return float(out[0]) if scalar_in else out


def cdf_ris(T, fit: GammaFit, c: float):
    """Gamma-approximate RIS-link SNR CDF P(r, theta sqrt(T/c))."""
    if c <= 0.0:
        raise DomainError("c must be positive")
    scalar_in = np.isscalar(T) or np.ndim(T) == 0
    Tn = np.atleast_1d(np.asarray(T, dtype=float))
    if np.any(Tn < 0.0):
        raise DomainError("threshold must be >= 0")
    out = np.array(
        [
            reg_lower_incomplete_gamma(fit.shape_r, fit.rate_theta * math.sqrt(t / c))
            for t in Tn
        ]
    )
    return float(out[0]) if scalar_in else out


def _fade_ratio(cdf, lcr):
    """CDF / LCR with the limits where the crossing rate underflows.

    Deep in the lower tail both vanish and the fade duration tends to 0;
    far above the support the crossing rate vanishes first and the single
    never-ending fade has infinite duration.
    """
    cdf = np.asarray(cdf, dtype=float)
    lcr_arr = np.asarray(lcr, dtype=float)
    out = np.where(cdf < 0.5, 0.0, np.inf)
    pos = lcr_arr > 0.0
    out = np.where(pos, np.divide(cdf, lcr_arr, where=pos, out=np.ones_like(out)), out)
    if out.ndim == 0:
        return float(out)
    return out


def afd_ris(T, fit: GammaFit, omega_sq: float, c: float):
    """RIS-link average fade duration CDF(T) / LCR(T)."""
    return _fade_ratio(cdf_ris(T, fit, c), lcr_ris(T, fit, omega_sq, c))


# ---------------------------------------------------------------------------
# SNR temporal correlation (LoS RIS-BS link)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SnrTerms:
    """The six lag expectations of the SNR product, in squared SNR units."""

    aa: float
    ab: float
    ac: float
    bb: float
    bc: float
    cc: float

    def weighted_sum(self) -> float:
        """E[SNR(t) SNR(t+tau)] = aa + 4 ab + 2 ac + 4 bb + 4 bc + cc."""
        return self.aa + 4.0 * self.ab + 2.0 * self.ac + 4.0 * self.bb + 4.0 * self.bc + self.cc


def _require_los(scenario: ScenarioConfig) -> None:
    if not math.isinf(scenario.kappa_rb):
        raise DomainError(
            "this statistic is derived for a pure-LoS RIS-BS link (kappa_rb = inf)"
        )


def hd_quad_amp_moment(R_d: np.ndarray, beta_d: float, a_b: np.ndarray) -> float:
    """E[h_d^H h_d |a_b^H h_d|] for h_d ~ CN(0, beta_d R_d).

    Closed form from the third absolute moment of the projected Gaussian:
    (sqrt(pi) beta^{3/2} / 2)(3 q2 / (2 sqrt(q)) + sqrt(q)(M - q2 / q))
    with q = a^H R a and q2 = a^H R^2 a.
    """
    a = np.asarray(a_b)
    R = np.asarray(R_d)
    q = float(np.real(a.conj() @ R @ a))
    q2 = float(np.real(a.conj() @ R @ R @ a))
    m = a.size
    return (
        math.sqrt(math.pi)
        * beta_d**1.5
        / 2.0
        * (1.5 * q2 / math.sqrt(q) + math.sqrt(q) * (m - q2 / q))
    )


def _gamma_corr(R_ur: np.ndarray, rho_ur: float) -> tuple[float, float, float]:
    """(gamma, S0, Stau): lag correlation of Y plus the two all-pairs sums."""
    z = np.abs(np.asarray(R_ur)) ** 2
    s0 = float(hyp2f1_neghalf(z).sum())
    stau = float(hyp2f1_neghalf(abs(rho_ur) ** 2 * z).sum())
    n = R_ur.shape[0]
    return (stau - n * n) / (s0 - n * n), s0, stau


def snr_corr_terms(
    scenario: ScenarioConfig,
    tau: float,
    rho_d: float | None = None,
    rho_ur: float | None = None,
    links: LinkSet | None = None,
) -> SnrTerms:
    """The six expectations driving E[SNR(t) SNR(t + tau)].

    ``rho_d`` / ``rho_ur`` override the Jakes correlations at lag tau, which
    admits arbitrary temporal correlation models.
    """
    _require_los(scenario)
    links = links or build_links(scenario)
    g = links.gains
    tx = scenario.tx_snr
    M, N = scenario.M, scenario.N
    if rho_d is None:
        rho_d = float(jakes_rho(scenario.f_d, tau))
    if rho_ur is None:
        rho_ur = float(jakes_rho(scenario.f_ur, tau))
    rd2 = abs(rho_d) ** 2

    a_b, R_d = links.a_b, links.R_d
    q = float(np.real(a_b.conj() @ R_d @ a_b))
    q2 = float(np.real(a_b.conj() @ R_d @ R_d @ a_b))
    tr_rd2 = float(np.real(np.trace(R_d @ R_d)))

    mom = moments_Y(links.R_ur, g.beta_ur)
    gamma, s0, stau = _gamma_corr(links.R_ur, rho_ur)
    fit = ChiSquareStyleFit.from_moments(mom.mean, mom.var, gamma_corr=max(0.0, gamma))

    aa = g.beta_d**2 * (rd2 * (M * M + tr_rd2) + M * M * (1.0 - rd2))
    ab = (
        N
        * math.pi
        * g.beta_d
        * math.sqrt(g.beta_d * g.beta_rb * g.beta_ur * q)
        / 4.0
        * (M + rd2 * q2 / (2.0 * q))
    )
    ac = M * M * g.beta_d * g.beta_rb * mom.second
    # all-pairs amplitude product sums, diagonal included
    e_yy = g.beta_ur * (math.pi / 4.0) * stau
    e_amp_amp = (math.pi / 4.0) * g.beta_d * q * float(hyp2f1_neghalf(rd2))
    bb = g.beta_rb * e_yy * e_amp_amp
    bc = (
        M
        * g.beta_rb**1.5
        * math.sqrt(math.pi * g.beta_d * q)
        / 2.0
        * fit.cross_moment_12()
    )
    cc = M * M * g.beta_rb**2 * fit.cross_moment_22()
    s = tx * tx
    return SnrTerms(aa=s * aa, ab=s * ab, ac=s * ac, bb=s * bb, bc=s * bc, cc=s * cc)


def _mean_snr_los(scenario: ScenarioConfig, links: LinkSet) -> float:
    """E[SNR] = E[a] + 2 E[b] + E[c] for the LoS composite channel."""
    g = links.gains
    q = float(np.real(links.a_b.conj() @ links.R_d @ links.a_b))
    mom = moments_Y(links.R_ur, g.beta_ur)
    e_b = math.sqrt(g.beta_rb) * mom.mean * math.sqrt(math.pi * g.beta_d * q) / 2.0
    return scenario.tx_snr * (
        scenario.M * g.beta_d + 2.0 * e_b + scenario.M * g.beta_rb * mom.second
    )


def snr_correlation(
    scenario: ScenarioConfig,
    tau: float,
    rho_d: float | None = None,
    rho_ur: float | None = None,
    links: LinkSet | None = None,
) -> float:
    """Temporal SNR correlation rho_SNR(tau) of the full LoS-mode channel."""
    _require_los(scenario)
    links = links or build_links(scenario)
    eps_tau = snr_corr_terms(scenario, tau, rho_d, rho_ur, links).weighted_sum()
    eps_0 = snr_corr_terms(scenario, 0.0, 1.0, 1.0, links).weighted_sum()
    mean = _mean_snr_los(scenario, links)
    denom = eps_0 - mean * mean
    if denom <= 0.0:
        raise DegenerateModelError("zero SNR variance; correlation undefined")
    return (eps_tau - mean * mean) / denom


# ---------------------------------------------------------------------------
# channel correlation matrix (Ricean RIS-BS link)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelCorrResult:
    """Covariance D, normalizers psi, correlation R_h and its summaries."""

    D: np.ndarray
    psi: np.ndarray
    R_h: np.ndarray
    S_metric: float
    eig_fractions: np.ndarray


def per_antenna_power(scenario: ScenarioConfig, links: LinkSet | None = None) -> np.ndarray:
    """Per-antenna powers E[|h_i|^2] assembled element by element.

    Independent of the matrix route in :func:`channel_corr`; the two must
    agree to 1e-9 relative, which is asserted there.
    """
    links = links or build_links(scenario)
    g = links.gains
    M, N = scenario.M, scenario.N
    a_b, a_r, R_d, R_r = links.a_b, links.a_r, links.R_d, links.R_r
    eta, zeta = g.eta_rb, g.zeta_rb
    q = float(np.real(a_b.conj() @ R_d @ a_b))
    rd_ab = R_d @ a_b
    f0 = hyp2f1_neghalf(np.abs(links.R_ur) ** 2)

    cross = (
        N
        * math.pi
        * eta
        * math.sqrt(g.beta_d * g.beta_rb * g.beta_ur)
        / 2.0
        * np.real(a_b.conj() * rd_ab)
        / math.sqrt(q)
    )
    off = ~np.eye(N, dtype=bool)
    s_eta = eta * eta * float(f0[off].sum())
    weights = np.einsum("l,lj,j->lj", a_r.conj(), R_r, a_r)
    s_zeta = zeta * zeta * float(np.real((weights * f0)[off].sum()))
    ris = g.beta_rb * g.beta_ur * (
        N * (eta * eta + zeta * zeta) + (math.pi / 4.0) * (s_eta + s_zeta)
    )
    return g.beta_d + cross + ris


def channel_corr(scenario: ScenarioConfig, links: LinkSet | None = None) -> ChannelCorrResult:
    """Spatial correlation matrix of the optimally phased global channel.

    D = beta_d R_d + (X + X^H) + c1^2 E[Y^2] a_b a_b^H + c2^2 Z with
    X = c1 E[Y] E[nu* h_d] a_b^H and Z the scattered RIS-BS contribution;
    R_h renormalizes D to unit diagonal.
    """
    links = links or build_links(scenario)
    g = links.gains
    a_b, a_r = links.a_b, links.a_r
    c1 = math.sqrt(g.beta_rb) * g.eta_rb
    c2 = math.sqrt(g.beta_rb) * g.zeta_rb
    mom = moments_Y(links.R_ur, g.beta_ur)
    q = float(np.real(a_b.conj() @ links.R_d @ a_b))
    e_nu_hd = math.sqrt(g.beta_d * math.pi) * (links.R_d @ a_b) / (2.0 * math.sqrt(q))
    X = c1 * mom.mean * np.outer(e_nu_hd, a_b.conj())
    B = g.beta_ur * (math.pi / 4.0) * hyp2f1_neghalf(np.abs(links.R_ur) ** 2)
    z_scalar = complex(np.einsum("l,lj,j,jl->", a_r, B, a_r.conj(), links.R_r))
    if abs(z_scalar.imag) > 1e-9 * max(1.0, abs(z_scalar.real)):
        raise NumericError("scattered-path trace is not real")
    D = (
        g.beta_d * links.R_d
        + X
        + X.conj().T
        + c1 * c1 * mom.second * np.outer(a_b, a_b.conj())
        + c2 * c2 * z_scalar.real * links.R_b
    )

    diag = np.real(np.diagonal(D))
    expected = per_antenna_power(scenario, links)
    if not np.allclose(diag, expected, rtol=1e-9, atol=0.0):
        raise NumericError("covariance diagonal disagrees with the per-antenna powers")

    w = np.linalg.eigvalsh(D)
    if w[0] < -1e-10 * max(w[-1], 1e-300):
        raise NotPositiveSemidefiniteError(f"covariance eigenvalue {w[0]:.3e} < 0")

    psi = 1.0 / np.sqrt(diag)
    R_h = D * np.outer(psi, psi)
    s_metric = float(np.abs(R_h).sum()) / scenario.M**2
    wh = np.clip(np.linalg.eigvalsh(R_h)[::-1], 0.0, None)
    return ChannelCorrResult(
        D=D,
        psi=psi,
        R_h=R_h,
        S_metric=s_metric,
        eig_fractions=wh / wh.sum(),
    )


# ---------------------------------------------------------------------------
# mean SNR and ageing loss (Ricean RIS-BS link)
# ---------------------------------------------------------------------------


def mean_snr_aged(
    scenario: ScenarioConfig,
    tau: float,
    rho_d: float | complex | None = None,
    rho_ur: float | complex | None = None,
    links: LinkSet | None = None,
) -> float:
    """E[SNR(t + tau)] under the phase design frozen at time t.

    Sum of the surviving expectations of the four-term channel split: the
    aged direct power, the direct/LoS cross term decaying as
    Re(rho_d* rho_ur), the aligned LoS power decaying as |rho_ur|^2, the
    phase-misalignment replacement term carrying 2F1(1/2,1/2;2;|R|^2)
    weights, and the scattered RIS-BS term with its own aged trace pair.
    """
    links = links or build_links(scenario)
    g = links.gains
    M, N = scenario.M, scenario.N
    if rho_d is None:
        rho_d = float(jakes_rho(scenario.f_d, tau))
    if rho_ur is None:
        rho_ur = float(jakes_rho(scenario.f_ur, tau))
    ru2 = abs(rho_ur) ** 2
    eta, zeta = g.eta_rb, g.zeta_rb
    a_b, a_r = links.a_b, links.a_r
    R_ur, R_r = links.R_ur, links.R_r

    q = float(np.real(a_b.conj() @ links.R_d @ a_b))
    z2 = np.abs(R_ur) ** 2
    f_neg = hyp2f1_neghalf(z2)
    f_pos = hyp2f1_poshalf(z2)
    ey2 = g.beta_ur * (math.pi / 4.0) * float(f_neg.sum())

    t_direct = M * g.beta_d
    t_cross = (
        N
        * math.pi
        * eta
        * math.sqrt(g.beta_d * g.beta_rb * g.beta_ur * q)
        / 4.0
        * (np.conj(rho_d) * rho_ur + rho_d * np.conj(rho_ur))
    )
    t_aligned = M * g.beta_rb * eta * eta * ru2 * ey2
    t_misaligned = (
        M
        * g.beta_rb
        * g.beta_ur
        * eta
        * eta
        * (math.pi / 4.0)
        * (1.0 - ru2)
        * float((z2 * f_pos).sum())
    )
    trace_aligned = complex(
        np.einsum("l,lj,j,lj->", a_r.conj(), R_r, a_r, f_neg)
    )
    aged_phase = (math.pi / 4.0) * R_r * R_ur * np.outer(a_r.conj(), a_r) * f_pos
    trace_misaligned = complex(np.einsum("ij,ji->", R_ur, aged_phase))
    t_scattered = (
        M
        * g.beta_rb
        * g.beta_ur
        * zeta
        * zeta
        * (ru2 * (math.pi / 4.0) * trace_aligned + (1.0 - ru2) * trace_misaligned)
    )

    total = t_direct + t_cross + t_aligned + t_misaligned + t_scattered
    total = complex(total)
    if abs(total.imag) > 1e-10 * max(1.0, abs(total.real)):
        raise NumericError(f"aged mean SNR has imaginary residue {total.imag:.3e}")
    return scenario.tx_snr * total.real


def mean_snr(scenario: ScenarioConfig, links: LinkSet | None = None) -> float:
    """E[SNR(t)], evaluated as the zero-lag limit of the aged mean."""
    return mean_snr_aged(scenario, 0.0, links=links)


def ageing_loss(
    scenario: ScenarioConfig,
    tau: float,
    rho_d: float | None = None,
    rho_ur: float | None = None,
    links: LinkSet | None = None,
) -> tuple[float, float]:
    """(absolute, percent) mean-SNR loss of a design aged by tau."""
    links = links or build_links(scenario)
    now = mean_snr(scenario, links=links)
    if now <= 0.0:
        raise DegenerateModelError("mean SNR must be positive")
    aged = mean_snr_aged(scenario, tau, rho_d, rho_ur, links=links)
    loss = now - aged
    return loss, 100.0 * loss / now
