"""Unruh-deWitt detector superposed across two static locations, read out
through a BEC / laser analogue: response functions, heterodyne noise budget,
SNR, superposition witness and Monte-Carlo validation."""

__version__ = "0.1.0"

from .response_core import (  # noqa: E402
    DetectorGeometry,
    RegularizedTime,
    SwitchingWindow,
    bessel_j0,
    diff_response,
    response_diag,
    response_offdiag,
    total_response,
    transition_probability,
)
from .detection_model import (  # noqa: E402
    MU_SQ_SQL,
    SQUEEZED_FLOOR,
    Branch,
    PsdModel,
    added_noise,
    psd,
    snr,
    sql_optimize,
    squeezed_noise_floor,
    witness,
)

__all__ = [
    "__version__",
    "DetectorGeometry",
    "RegularizedTime",
    "SwitchingWindow",
    "bessel_j0",
    "diff_response",
    "response_diag",
    "response_offdiag",
    "total_response",
    "transition_probability",
    "MU_SQ_SQL",
    "SQUEEZED_FLOOR",
    "Branch",
    "PsdModel",
    "added_noise",
    "psd",
    "snr",
    "sql_optimize",
    "squeezed_noise_floor",
    "witness",
]
