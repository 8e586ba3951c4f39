"""Angle-of-arrival estimation over Rician channels under adversarial jamming."""

from .array import (
    ArrayGeometry,
    projector_G,
    steering_derivative,
    steering_vector,
    ula_sigma,
)
from .channel import (
    ChannelRealization,
    RicianChannelSpec,
    expected_gram,
    expected_sandwich,
    sample_channel,
    upsilon,
    upsilon_eigenvalues,
)
from .jammer import (
    AwareJammer,
    UnawareJammer,
    WaterFillingSolution,
    aware_signal,
    sample_unaware_signal,
    unaware_allocation,
    unaware_power_levels,
    water_fill,
)
from .estimation import (
    InterferenceCovariance,
    Knowledge,
    MLSpectrum,
    TrainingSequence,
    crb,
    estimate_aoa,
    ml_spectrum,
    rz_perfect_csi,
    rz_statistical,
)

__version__ = "0.1.0"
