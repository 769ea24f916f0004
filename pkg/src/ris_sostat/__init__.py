"""Second-order statistics of RIS-assisted fading channels.

Closed-form level crossing rates, average fade durations, SNR temporal
correlation, spatial channel correlation and ageing loss for a single-user
RIS system with the SNR-optimal phase design, plus a Monte Carlo oracle
that validates every closed form empirically.
"""

from .channel import (
    ExponentialModel,
    LinkGains,
    LinkSet,
    ScenarioConfig,
    SincModel,
    build_links,
    default_scenario,
)
from .analytic import (
    ChannelCorrResult,
    ChiSquareStyleFit,
    EigenSpectrum,
    GammaFit,
    YMoments,
    afd_direct,
    afd_ris,
    ageing_loss,
    cdf_direct,
    cdf_ris,
    channel_corr,
    lcr_direct_exact,
    lcr_direct_stable,
    lcr_ris,
    mean_snr,
    mean_snr_aged,
    moments_Y,
    omega2,
    snr_corr_terms,
    snr_correlation,
)
from .montecarlo import McConfig, McEstimate
from .errors import (
    DegenerateModelError,
    DomainError,
    NotPositiveSemidefiniteError,
    NumericError,
    PrecisionLossError,
    RisSostatError,
    UsageError,
)

__version__ = "0.1.0"
