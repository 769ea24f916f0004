"""Deterministic ingredients of the channel model.

Geometry and path loss, vertical-URA steering vectors, spatial correlation
matrices (sinc and exponential-decay models), Jakes temporal correlation,
Doppler, and the Hermitian PSD square roots used by the simulators.

Array convention: an element grid with ``rows_x`` columns along x and
``rows_z`` rows along z at ``spacing`` wavelengths places element (m, n) at
(m * spacing, 0, n * spacing); its flat index is ``m * rows_z + n``.  The
steering phase for azimuth phi / elevation theta is
``2 pi spacing (m sin(theta) cos(phi) + n cos(theta))``, so element (0, 0)
is the phase reference.  Steering vectors and correlation matrices share
this enumeration, which keeps every cross-check convention invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .errors import DomainError, NotPositiveSemidefiniteError
from .specfun import bessel_j0

SPEED_OF_LIGHT = 2.998e8
REFERENCE_DISTANCE = 1.0  # metres
REFERENCE_GAIN = 1e-3  # -30 dB at the reference distance

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class SincModel:
    """Isotropic-scattering spatial correlation: R[m, n] = sinc(2 d_mn)."""


@dataclass(frozen=True)
class ExponentialModel:
    """Exponential-decay spatial correlation: R[m, n] = rho ** (d_mn / spacing).

    ``rho`` is the adjacent-element correlation; rho = 0 gives the identity
    and rho = 1 the all-ones matrix.
    """

    rho: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.rho <= 1.0:
            raise DomainError(f"correlation level must lie in [0, 1], got {self.rho!r}")


SpatialModel = Union[SincModel, ExponentialModel]

# Planar (d_x, d_y, d_rb) presets, metres.
LAYOUTS = {
    "A": (27.0, 5.0, 40.0),  # balanced direct and RIS links
    "B": (20.0, 5.0, 40.0),  # dominant direct link
    "C": (35.0, 5.0, 40.0),  # dominant RIS link
    "D": (29.0, 5.0, 40.0),  # stronger but non-dominant RIS link
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Full parameterization of one system instance.

    Defaults reproduce the standard desk configuration: an 8x4 base-station
    array at half-wavelength spacing, a 16x8 RIS at 0.1 wavelength, layout A
    geometry, 2.1 GHz carrier, 10/5 Hz Doppler and a unit Ricean K-factor.
    """

    M_x: int = 8
    M_z: int = 4
    N_x: int = 16
    N_z: int = 8
    d_b: float = 0.5  # BS element spacing, wavelengths
    d_r: float = 0.1  # RIS element spacing, wavelengths
    h_b: float = 15.0  # heights, metres
    h_r: float = 15.0
    h_u: float = 1.5
    d_x: float = 27.0  # planar geometry, metres
    d_y: float = 5.0
    d_rb: float = 40.0
    alpha_d: float = 3.5  # path-loss exponents
    alpha_rb: float = 2.0
    alpha_ur: float = 2.8
    f_c: float = 2.1e9  # carrier, Hz
    f_d: float = 10.0  # UE Doppler w.r.t. BS, Hz
    f_ur: float = 5.0  # UE Doppler w.r.t. RIS, Hz
    kappa_rb: float = 1.0  # Ricean K-factor of the RIS-BS link; inf = pure LoS
    spatial_model: SpatialModel = SincModel()
    phi_D: float = 5.0 * math.pi / 4.0  # azimuth of departure at the RIS
    theta_D: float = math.pi / 2.0  # elevation of departure at the RIS
    phi_A: float = math.pi / 4.0  # azimuth of arrival at the BS
    theta_A: float = math.pi / 2.0  # elevation of arrival at the BS
    tx_snr: float = 1e10  # E_s / sigma^2, linear (100 dB default)

    def __post_init__(self) -> None:
        for name in ("M_x", "M_z", "N_x", "N_z"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")
        for name in ("d_b", "d_r", "h_b", "h_r", "h_u", "d_rb", "f_c", "tx_snr"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be > 0")
        for name in ("f_d", "f_ur", "d_x", "d_y"):
            if getattr(self, name) < 0.0:
                raise DomainError(f"{name} must be >= 0")
        if self.kappa_rb < 0.0:
            raise DomainError("kappa_rb must be >= 0 (inf allowed)")
        if not isinstance(self.spatial_model, (SincModel, ExponentialModel)):
            raise DomainError("spatial_model must be SincModel or ExponentialModel")

    @property
    def M(self) -> int:
        return self.M_x * self.M_z

    @property
    def N(self) -> int:
        return self.N_x * self.N_z


def default_scenario(layout: str = "A", **overrides) -> ScenarioConfig:
    """Standard configuration with one of the preset layouts applied."""
    if layout not in LAYOUTS:
        raise DomainError(f"unknown layout {layout!r}; choose from {sorted(LAYOUTS)}")
    d_x, d_y, d_rb = LAYOUTS[layout]
    cfg = ScenarioConfig(d_x=d_x, d_y=d_y, d_rb=d_rb)
    return replace(cfg, **overrides) if overrides else cfg


def path_loss(d: float, alpha: float) -> float:
    """Distance-based linear power gain, -30 dB at the 1 m reference."""
    if d < REFERENCE_DISTANCE:
        raise DomainError(f"distance must be >= {REFERENCE_DISTANCE} m, got {d!r}")
    return REFERENCE_GAIN * (d / REFERENCE_DISTANCE) ** (-alpha)


def layout_geometry(config: ScenarioConfig) -> tuple[float, float, float]:
    """Planar link distances (UE-BS, UE-RIS, RIS-BS) in metres.

    The BS sits at the origin, the RIS at planar distance d_rb along x,
    and the UE at planar offset (d_x, d_y) from the BS.  Node heights are
    recorded in the configuration but do not enter the path-loss
    distances; only this reading reproduces the reported ageing-loss
    levels, and it keeps the link-dominance labels of the preset layouts.
    """
    d_ue_bs = math.hypot(config.d_x, config.d_y)
    d_ue_ris = math.hypot(config.d_rb - config.d_x, config.d_y)
    return d_ue_bs, d_ue_ris, config.d_rb


def element_positions(rows_x: int, rows_z: int, spacing: float) -> np.ndarray:
    """(L, 2) array of (x, z) element coordinates in wavelengths."""
    m, n = np.meshgrid(np.arange(rows_x), np.arange(rows_z), indexing="ij")
    return spacing * np.column_stack([m.ravel(), n.ravel()]).astype(float)


def steering_vector(
    rows_x: int, rows_z: int, spacing: float, azimuth: float, elevation: float
) -> np.ndarray:
    """Unit-modulus vertical-URA steering vector; element (0, 0) is 1."""
    pos = element_positions(rows_x, rows_z, spacing)
    phase = 2.0 * np.pi * (
        pos[:, 0] * math.sin(elevation) * math.cos(azimuth)
        + pos[:, 1] * math.cos(elevation)
    )
    return np.exp(1j * phase)


def spatial_correlation(
    rows_x: int, rows_z: int, spacing: float, model: SpatialModel
) -> np.ndarray:
    """Spatial correlation matrix over the element grid for the given model."""
    pos = element_positions(rows_x, rows_z, spacing)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    if isinstance(model, SincModel):
        entries = np.sinc(2.0 * dist)
    elif isinstance(model, ExponentialModel):
        if model.rho == 0.0:
            entries = np.where(dist == 0.0, 1.0, 0.0)
        else:
            entries = model.rho ** (dist / spacing)
    else:
        raise DomainError(f"unsupported spatial model {model!r}")
    validate_correlation(entries, "spatial correlation")
    return entries


def jakes_rho(f: float, tau):
    """Jakes temporal correlation J0(2 pi f tau) for Doppler f >= 0."""
    if f < 0.0:
        raise DomainError("Doppler frequency must be >= 0")
    return bessel_j0(2.0 * np.pi * f * np.asarray(tau, dtype=float))


def doppler(v: float, f_c: float, theta: float) -> float:
    """Doppler frequency |v f_c cos(theta) / c| for UE speed v in m/s.

    The magnitude is taken: the statistics depend on the correlation
    curvature only, which is even in the frequency.
    """
    if v < 0.0:
        raise DomainError("speed must be >= 0")
    return abs(v * f_c * math.cos(theta) / SPEED_OF_LIGHT)


def validate_correlation(R: np.ndarray, name: str = "matrix") -> None:
    """Check the Hermitian / unit-diagonal / PSD contract."""
    R = np.asarray(R)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise DomainError(f"{name} must be square")
    if not np.allclose(R, R.conj().T, atol=HERMITIAN_TOL, rtol=0.0):
        raise DomainError(f"{name} is not Hermitian within {HERMITIAN_TOL}")
    if not np.allclose(np.diagonal(R).real, 1.0, atol=HERMITIAN_TOL, rtol=0.0):
        raise DomainError(f"{name} diagonal is not 1 within {HERMITIAN_TOL}")
    eig = np.linalg.eigvalsh(R)
    floor = -PSD_TOL * max(1.0, float(eig[-1]))
    if eig[0] < floor:
        raise NotPositiveSemidefiniteError(
            f"{name} has eigenvalue {eig[0]:.3e} below tolerance {floor:.3e}"
        )


def psd_sqrt(R: np.ndarray) -> np.ndarray:
    """Hermitian PSD square root via eigendecomposition.

    Eigenvalues in [-1e-10 * lambda_max, 0) are clamped to zero; anything
    lower raises.  The result A satisfies A @ A.conj().T == R to ~1e-9.
    """
    R = np.asarray(R)
    w, v = np.linalg.eigh(R)
    floor = -PSD_TOL * max(1.0, float(w[-1]))
    if w[0] < floor:
        raise NotPositiveSemidefiniteError(
            f"matrix has eigenvalue {w[0]:.3e} below tolerance {floor:.3e}"
        )
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


@dataclass(frozen=True)
class LinkGains:
    """Linear power gains plus the Ricean mix weights of the RIS-BS link."""

    beta_d: float
    beta_ur: float
    beta_rb: float
    eta_rb: float
    zeta_rb: float


def ricean_weights(kappa: float) -> tuple[float, float]:
    """(eta, zeta) = (sqrt(kappa/(kappa+1)), sqrt(1/(kappa+1))); eta=1 at inf."""
    if kappa < 0.0:
        raise DomainError("kappa must be >= 0")
    if math.isinf(kappa):
        return 1.0, 0.0
    return math.sqrt(kappa / (kappa + 1.0)), math.sqrt(1.0 / (kappa + 1.0))


@dataclass(frozen=True)
class LinkSet:
    """Everything deterministic about one scenario's three links."""

    gains: LinkGains
    a_b: np.ndarray  # BS steering vector, length M
    a_r: np.ndarray  # RIS steering vector, length N
    R_d: np.ndarray  # UE-BS spatial correlation, M x M
    R_ur: np.ndarray  # UE-RIS spatial correlation, N x N
    R_b: np.ndarray  # RIS-BS correlation at the BS end, M x M
    R_r: np.ndarray  # RIS-BS correlation at the RIS end, N x N


def build_links(config: ScenarioConfig) -> LinkSet:
    """Assemble gains, steering vectors and correlation matrices."""
    d_ue_bs, d_ue_ris, d_ris_bs = layout_geometry(config)
    eta, zeta = ricean_weights(config.kappa_rb)
    gains = LinkGains(
        beta_d=path_loss(d_ue_bs, config.alpha_d),
        beta_ur=path_loss(d_ue_ris, config.alpha_ur),
        beta_rb=path_loss(d_ris_bs, config.alpha_rb),
        eta_rb=eta,
        zeta_rb=zeta,
    )
    a_b = steering_vector(config.M_x, config.M_z, config.d_b, config.phi_A, config.theta_A)
    a_r = steering_vector(config.N_x, config.N_z, config.d_r, config.phi_D, config.theta_D)
    R_bs = spatial_correlation(config.M_x, config.M_z, config.d_b, config.spatial_model)
    R_ris = spatial_correlation(config.N_x, config.N_z, config.d_r, config.spatial_model)
    return LinkSet(
        gains=gains,
        a_b=a_b,
        a_r=a_r,
        R_d=R_bs,
        R_ur=R_ris,
        R_b=R_bs.copy(),
        R_r=R_ris.copy(),
    )
