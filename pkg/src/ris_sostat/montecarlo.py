"""Simulation oracle for every closed form in :mod:`ris_sostat.analytic`.

Spatio-temporally correlated channel generation (exact conditional pairs
for lag statistics, Jakes-spectrum sum-of-sinusoids for time series), the
SNR-optimal phase design, and empirical estimators for crossing rates,
fade durations, SNR correlation, channel correlation and ageing loss.

Determinism: replicates are split into chunks; chunk ``i`` owns the
counter-based generator ``Philox(key=(seed, i))``, and chunk results are
reduced in index order, so estimates are bit-identical for a given
(seed, config) regardless of the worker pool.  ``RIS_SOSTAT_THREADS``
caps the pool.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import LinkSet, ScenarioConfig, build_links, jakes_rho, psd_sqrt
from .errors import DomainError
from .specfun import bessel_j0  # noqa: F401  (re-exported for estimator tests)

__all__ = [
    "McConfig",
    "McEstimate",
    "ChannelDraw",
    "SnrSeries",
    "AgeingEstimate",
    "replicate_rng",
    "gen_vector",
    "gen_pair",
    "gen_timeseries",
    "apply_phase_design",
    "simulate_snr_series",
    "estimate_lcr",
    "estimate_afd",
    "estimate_snr_corr",
    "estimate_channel_corr",
    "estimate_ageing",
]

_CHUNK = 8192  # replicates per work unit for pair/draw studies


@dataclass(frozen=True)
class McConfig:
    """Simulation budget and reproducibility knobs."""

    replicates: int = 100_000
    seed: int = 0
    sample_rate: int = 64  # samples per 1/f_m in time-series studies
    duration: float = 64.0  # normalized span f_m * T_total per replicate
    sos_count: int = 64  # sinusoids per scalar fading process

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise DomainError("replicates must be >= 1")
        if self.sample_rate < 16:
            raise DomainError("sample_rate below 16 biases crossing counts")
        if self.sos_count < 16:
            raise DomainError("sos_count must be >= 16")
        if self.duration <= 0.0:
            raise DomainError("duration must be positive")


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    count: int


@dataclass(frozen=True)
class ChannelDraw:
    """A batch of channel draws, optionally paired at a lag."""

    h_d: np.ndarray  # (R, M)
    h_ur: np.ndarray  # (R, N)
    G: np.ndarray | None = None  # (R, M, N) scattered RIS-BS part
    h_d_lag: np.ndarray | None = None
    h_ur_lag: np.ndarray | None = None


@dataclass(frozen=True)
class SnrSeries:
    """Per-replicate SNR sample paths."""

    values: np.ndarray  # (replicates, samples)
    dt: float
    f_m: float


@dataclass(frozen=True)
class AgeingEstimate:
    loss: McEstimate
    percent: McEstimate


def replicate_rng(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator for one work unit of one run."""
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _worker_count() -> int:
    env = os.environ.get("RIS_SOSTAT_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _map_chunks(fn, seed: int, counts: list[int]):
    """Run fn(rng, count, index) per chunk; results returned in index order."""
    workers = _worker_count()
    if workers == 1 or len(counts) == 1:
        return [fn(replicate_rng(seed, i), c, i) for i, c in enumerate(counts)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [
            pool.submit(fn, replicate_rng(seed, i), c, i) for i, c in enumerate(counts)
        ]
        return [f.result() for f in futs]


def _split(total: int, chunk: int = _CHUNK) -> list[int]:
    full, rem = divmod(total, chunk)
    return [chunk] * full + ([rem] if rem else [])


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def gen_vector(
    R: np.ndarray,
    beta: float,
    rng: np.random.Generator,
    size: int = 1,
    sqrt_R: np.ndarray | None = None,
) -> np.ndarray:
    """(size, L) draws of sqrt(beta) R^(1/2) u with u i.i.d. CN(0, 1)."""
    if sqrt_R is None:
        sqrt_R = psd_sqrt(R)
    u = _complex_normal(rng, (size, sqrt_R.shape[0]))
    return math.sqrt(beta) * (u @ sqrt_R.T)


def gen_pair(
    R: np.ndarray,
    beta: float,
    rho: complex,
    rng: np.random.Generator,
    size: int = 1,
    sqrt_R: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Jointly drawn (x(t), x(t+tau)) with exact conditional law.

    x(t+tau) = rho x(t) + sqrt(1 - |rho|^2) e with e an independent draw of
    the same spatial law, so both marginals are identical and the lag
    correlation is exactly rho.
    """
    if abs(rho) > 1.0 + 1e-12:
        raise DomainError("|rho| must be <= 1")
    if sqrt_R is None:
        sqrt_R = psd_sqrt(R)
    first = gen_vector(R, beta, rng, size, sqrt_R)
    if rho == 1.0:
        return first, first
    innov = gen_vector(R, beta, rng, size, sqrt_R)
    second = rho * first + math.sqrt(max(0.0, 1.0 - abs(rho) ** 2)) * innov
    return first, second


def gen_timeseries(
    R: np.ndarray,
    beta: float,
    f: float,
    dt: float,
    n: int,
    rng: np.random.Generator,
    sos_count: int = 64,
    sqrt_R: np.ndarray | None = None,
) -> np.ndarray:
    """(L, n) spatially mixed Jakes sum-of-sinusoids sample paths.

    Each scalar process is (1/sqrt(K)) sum_k exp(j(2 pi f cos(alpha_k) t +
    phi_k)) with fresh uniform arrival angles and phases, whose ensemble
    autocorrelation is J0(2 pi f tau) with the correct lag-0 curvature;
    the L processes are mixed by sqrt(beta) R^(1/2).
    """
    if f <= 0.0:
        raise DomainError("Doppler frequency must be positive for a time series")
    if dt * f > 1.0 / 16.0 + 1e-12:
        raise DomainError(f"undersampled series: dt*f = {dt * f:.4f} > 1/16")
    if sqrt_R is None:
        sqrt_R = psd_sqrt(R)
    L = sqrt_R.shape[0]
    omegas = 2.0 * np.pi * f * np.cos(rng.uniform(0.0, 2.0 * np.pi, (L, sos_count)))
    phases = rng.uniform(0.0, 2.0 * np.pi, (L, sos_count))
    t = np.arange(n) * dt
    g = np.zeros((L, n), dtype=complex)
    for k in range(sos_count):
        g += np.exp(1j * (omegas[:, k, None] * t[None, :] + phases[:, k, None]))
    g /= math.sqrt(sos_count)
    return math.sqrt(beta) * (sqrt_R @ g)


def apply_phase_design(
    h_ur: np.ndarray, h_d: np.ndarray, a_b: np.ndarray, a_r: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """SNR-optimal reflection phases for LoS RIS-BS links.

    Returns (phi, nu): phi the (..., N) diagonal of the reflection matrix,
    nu = exp(j angle(a_b^H h_d)) (1 when the projection vanishes).  With a
    rank-1 LoS RIS-BS channel the reflected term collapses to
    sqrt(beta_rb) nu Y a_b with Y = sum_k |h_ur,k|.
    """
    proj = (np.conj(a_b) * np.atleast_2d(h_d)).sum(axis=-1)
    mag = np.abs(proj)
    nu = np.where(mag > 0.0, proj / np.where(mag > 0.0, mag, 1.0), 1.0)
    h_ur2 = np.atleast_2d(h_ur)
    mag_ur = np.abs(h_ur2)
    unit_ur = np.where(mag_ur > 0.0, h_ur2 / np.where(mag_ur > 0.0, mag_ur, 1.0), 1.0)
    phi = nu[..., None] * np.exp(1j * np.angle(a_r))[None, :] * np.conj(unit_ur)
    if np.ndim(h_ur) == 1:
        return phi[0], complex(nu[0])
    return phi, nu


def _mode_name(mode: str) -> str:
    m = {"direct": "direct", "ris": "ris", "ris_only": "ris", "full": "full"}.get(mode)
    if m is None:
        raise DomainError(f"mode must be direct|ris|full, got {mode!r}")
    return m


def simulate_snr_series(
    scenario: ScenarioConfig,
    mode: str,
    mc: McConfig,
    links: LinkSet | None = None,
) -> SnrSeries:
    """Per-sample SNR paths with the phase design re-optimized each sample.

    ``direct`` zeroes the RIS path, ``ris`` zeroes the direct path and the
    full mode carries both; ris/full require a pure-LoS RIS-BS link.
    """
    mode = _mode_name(mode)
    links = links or build_links(scenario)
    if mode != "direct" and not math.isinf(scenario.kappa_rb):
        raise DomainError("ris/full series require kappa_rb = inf")
    g = links.gains
    tx = scenario.tx_snr
    if mode == "direct":
        f_m = scenario.f_d
    elif mode == "ris":
        f_m = scenario.f_ur
    else:
        f_m = max(scenario.f_d, scenario.f_ur)
    dt = 1.0 / (f_m * mc.sample_rate)
    n = max(2, int(round(mc.duration * mc.sample_rate)))
    sqrt_Rd = psd_sqrt(links.R_d)
    sqrt_Rur = psd_sqrt(links.R_ur)
    a_b = links.a_b
    c_ris = tx * scenario.M * g.beta_rb

    def one_chunk(rng, count, _idx):
        out = np.empty((count, n))
        for r in range(count):
            if mode == "direct":
                hd = gen_timeseries(
                    links.R_d, g.beta_d, scenario.f_d, dt, n, rng, mc.sos_count, sqrt_Rd
                )
                out[r] = tx * (np.abs(hd) ** 2).sum(axis=0)
                continue
            hur = gen_timeseries(
                links.R_ur, g.beta_ur, scenario.f_ur, dt, n, rng, mc.sos_count, sqrt_Rur
            )
            y = np.abs(hur).sum(axis=0)
            if mode == "ris":
                out[r] = c_ris * y * y
            else:
                hd = gen_timeseries(
                    links.R_d, g.beta_d, scenario.f_d, dt, n, rng, mc.sos_count, sqrt_Rd
                )
                amp = np.abs(np.conj(a_b) @ hd)
                power = (np.abs(hd) ** 2).sum(axis=0)
                out[r] = tx * (
                    power
                    + 2.0 * math.sqrt(g.beta_rb) * y * amp
                    + scenario.M * g.beta_rb * y * y
                )
        return out

    chunk = max(1, min(64, mc.replicates))
    counts = _split(mc.replicates, chunk)
    parts = _map_chunks(one_chunk, mc.seed, counts)
    return SnrSeries(values=np.vstack(parts), dt=dt, f_m=f_m)


def estimate_lcr(values: np.ndarray, dt: float, thresholds) -> list[McEstimate]:
    """Up-crossing rates per threshold with replicate-level standard errors."""
    x = np.atleast_2d(values)
    if x.shape[1] < 2:
        raise DomainError("series must have at least 2 samples")
    reps, n = x.shape
    span = (n - 1) * dt
    out = []
    for T in np.atleast_1d(thresholds):
        below = x < T
        ups = (below[:, :-1] & ~below[:, 1:]).sum(axis=1)
        total = int(ups.sum())
        if total == 0:
            out.append(McEstimate(0.0, 0.0, 0))
            continue
        rates = ups / span
        stderr = float(rates.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        out.append(McEstimate(float(rates.mean()), stderr, total))
    return out


def _fade_durations(row: np.ndarray, dt: float, T: float) -> np.ndarray:
    """Interpolated durations of completed fades; boundary partials dropped."""
    below = row < T
    down = np.flatnonzero(~below[:-1] & below[1:])
    up = np.flatnonzero(below[:-1] & ~below[1:])
    if down.size == 0 or up.size == 0:
        return np.empty(0)
    t_down = (down + (row[down] - T) / (row[down] - row[down + 1])) * dt
    t_up = (up + (T - row[up]) / (row[up + 1] - row[up])) * dt
    if t_up[0] < t_down[0]:  # series starts inside a fade
        t_up = t_up[1:]
    k = min(t_down.size, t_up.size)
    return t_up[:k] - t_down[:k]


def estimate_afd(values: np.ndarray, dt: float, thresholds) -> list[McEstimate]:
    """Mean completed-fade duration per threshold.

    A constant series below the threshold has no completed fade and is
    reported as a zero-count (degenerate) estimate.
    """
    x = np.atleast_2d(values)
    out = []
    for T in np.atleast_1d(thresholds):
        durs = [_fade_durations(row, dt, T) for row in x]
        durs = np.concatenate(durs) if durs else np.empty(0)
        if durs.size == 0:
            out.append(McEstimate(0.0, 0.0, 0))
            continue
        stderr = float(durs.std(ddof=1) / math.sqrt(durs.size)) if durs.size > 1 else 0.0
        out.append(McEstimate(float(durs.mean()), stderr, int(durs.size)))
    return out


def _los_snr(h_d, h_ur, a_b, beta_rb, M, tx):
    y = np.abs(h_ur).sum(axis=1)
    amp = np.abs((np.conj(a_b) * h_d).sum(axis=1))
    power = (np.abs(h_d) ** 2).sum(axis=1)
    return tx * (power + 2.0 * math.sqrt(beta_rb) * y * amp + M * beta_rb * y * y)


def estimate_snr_corr(
    scenario: ScenarioConfig,
    taus,
    mc: McConfig,
    links: LinkSet | None = None,
) -> list[McEstimate]:
    """Sample Pearson correlation of SNR(t), SNR(t+tau) per lag."""
    links = links or build_links(scenario)
    if not math.isinf(scenario.kappa_rb):
        raise DomainError("SNR correlation requires kappa_rb = inf")
    g = links.gains
    sqrt_Rd = psd_sqrt(links.R_d)
    sqrt_Rur = psd_sqrt(links.R_ur)
    counts = _split(mc.replicates)
    out = []
    for ti, tau in enumerate(np.atleast_1d(taus)):
        rho_d = float(jakes_rho(scenario.f_d, tau))
        rho_ur = float(jakes_rho(scenario.f_ur, tau))

        def one_chunk(rng, count, _idx):
            hd0, hd1 = gen_pair(links.R_d, g.beta_d, rho_d, rng, count, sqrt_Rd)
            hu0, hu1 = gen_pair(links.R_ur, g.beta_ur, rho_ur, rng, count, sqrt_Rur)
            s0 = _los_snr(hd0, hu0, links.a_b, g.beta_rb, scenario.M, scenario.tx_snr)
            s1 = _los_snr(hd1, hu1, links.a_b, g.beta_rb, scenario.M, scenario.tx_snr)
            if s0.std() == 0.0 or s1.std() == 0.0:
                return 1.0 if np.allclose(s0, s1) else 0.0
            return float(np.corrcoef(s0, s1)[0, 1])

        # distinct stream ids per (lag, chunk) pair
        batch = _map_chunks(
            lambda rng, c, i: one_chunk(rng, c, i), mc.seed + 1000003 * ti, counts
        )
        batch = np.asarray(batch)
        stderr = float(batch.std(ddof=1) / math.sqrt(batch.size)) if batch.size > 1 else 0.0
        out.append(McEstimate(float(batch.mean()), stderr, mc.replicates))
    return out


def estimate_channel_corr(
    scenario: ScenarioConfig,
    mc: McConfig,
    links: LinkSet | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Empirical channel correlation matrix and its entrywise stderr."""
    links = links or build_links(scenario)
    g = links.gains
    M, N = scenario.M, scenario.N
    c1 = math.sqrt(g.beta_rb) * g.eta_rb
    c2 = math.sqrt(g.beta_rb) * g.zeta_rb
    sqrt_Rd = psd_sqrt(links.R_d)
    sqrt_Rur = psd_sqrt(links.R_ur)
    sqrt_Rb = psd_sqrt(links.R_b)
    sqrt_Rr = psd_sqrt(links.R_r)

    def one_chunk(rng, count, _idx):
        hd = gen_vector(links.R_d, g.beta_d, rng, count, sqrt_Rd)
        hur = gen_vector(links.R_ur, g.beta_ur, rng, count, sqrt_Rur)
        _, nu = apply_phase_design(hur, hd, links.a_b, links.a_r)
        y = np.abs(hur).sum(axis=1)
        h = hd + c1 * (nu * y)[:, None] * links.a_b[None, :]
        if c2 > 0.0:
            u = _complex_normal(rng, (count, M, N))
            gmat = np.einsum("ab,rbn,nc->rac", sqrt_Rb, u, sqrt_Rr)
            v = links.a_r[None, :] * np.abs(hur)
            h = h + c2 * nu[:, None] * np.einsum("rmn,rn->rm", gmat, v)
        prod = h[:, :, None] * h[:, None, :].conj()
        return prod.sum(axis=0), (np.abs(prod) ** 2).sum(axis=0)

    counts = _split(mc.replicates)
    parts = _map_chunks(one_chunk, mc.seed, counts)
    total = np.zeros((M, M), dtype=complex)
    total2 = np.zeros((M, M))
    for s, s2 in parts:
        total += s
        total2 += s2
    n = mc.replicates
    d_hat = total / n
    var = np.maximum(total2 / n - np.abs(d_hat) ** 2, 0.0)
    psi = 1.0 / np.sqrt(np.real(np.diagonal(d_hat)))
    scale = np.outer(psi, psi)
    return d_hat * scale, np.sqrt(var / n) * scale


def estimate_ageing(
    scenario: ScenarioConfig,
    taus,
    mc: McConfig,
    links: LinkSet | None = None,
) -> list[AgeingEstimate]:
    """Mean SNR loss from a frozen phase design, per lag.

    The phase design is computed at time t, the UE-side channels advance by
    their exact conditional laws, and the scattered RIS-BS factor is held
    fixed across the pair (both of its ends are static; only its marginal
    law enters the mean, and freezing makes the tau = 0 loss exactly zero).
    """
    links = links or build_links(scenario)
    g = links.gains
    M, N = scenario.M, scenario.N
    tx = scenario.tx_snr
    c1 = math.sqrt(g.beta_rb) * g.eta_rb
    c2 = math.sqrt(g.beta_rb) * g.zeta_rb
    sqrt_Rd = psd_sqrt(links.R_d)
    sqrt_Rur = psd_sqrt(links.R_ur)
    sqrt_Rb = psd_sqrt(links.R_b)
    sqrt_Rr = psd_sqrt(links.R_r)
    a_b, a_r = links.a_b, links.a_r
    counts = _split(mc.replicates)
    out = []
    for ti, tau in enumerate(np.atleast_1d(taus)):
        rho_d = float(jakes_rho(scenario.f_d, tau))
        rho_ur = float(jakes_rho(scenario.f_ur, tau))

        def one_chunk(rng, count, _idx):
            hd0, hd1 = gen_pair(links.R_d, g.beta_d, rho_d, rng, count, sqrt_Rd)
            hu0, hu1 = gen_pair(links.R_ur, g.beta_ur, rho_ur, rng, count, sqrt_Rur)
            phi, _nu = apply_phase_design(hu0, hd0, a_b, a_r)
            if c2 > 0.0:
                u = _complex_normal(rng, (count, M, N))
                gmat = np.einsum("ab,rbn,nc->rac", sqrt_Rb, u, sqrt_Rr)
            else:
                gmat = None

            def snr(hd, hu):
                v = phi * hu
                h = hd + c1 * (v @ a_r.conj())[:, None] * a_b[None, :]
                if gmat is not None:
                    h = h + c2 * np.einsum("rmn,rn->rm", gmat, v)
                return tx * (np.abs(h) ** 2).sum(axis=1)

            s0 = snr(hd0, hu0)
            s1 = snr(hd1, hu1)
            d = s0 - s1
            return (
                float(d.sum()),
                float((d * d).sum()),
                float(s0.sum()),
                count,
            )

        parts = _map_chunks(
            lambda rng, c, i: one_chunk(rng, c, i), mc.seed + 1000003 * ti, counts
        )
        loss_sum = sum(p[0] for p in parts)
        loss_sq = sum(p[1] for p in parts)
        base_sum = sum(p[2] for p in parts)
        n = sum(p[3] for p in parts)
        loss_mean = loss_sum / n
        loss_var = max(loss_sq / n - loss_mean**2, 0.0)
        loss_se = math.sqrt(loss_var / n)
        base = base_sum / n
        out.append(
            AgeingEstimate(
                loss=McEstimate(loss_mean, loss_se, n),
                percent=McEstimate(
                    100.0 * loss_mean / base, 100.0 * loss_se / base, n
                ),
            )
        )
    return out
