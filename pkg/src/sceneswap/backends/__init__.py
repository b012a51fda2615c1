from .base import (
    SIGMA_MIN,
    BackendError,
    BackgroundProvider,
    Conditioning,
    Denoiser,
    Inpainter,
    LatentCodec,
    Relighter,
)
from .toy import (
    LaplacianInpainter,
    OracleDenoiser,
    PanningBackgroundProvider,
    ToyCodec,
    ToyRelighter,
    estimate_shift,
    oracle_eps,
    prompt_tint,
    temporal_smooth,
)

__all__ = [
    "SIGMA_MIN",
    "BackendError",
    "BackgroundProvider",
    "Conditioning",
    "Denoiser",
    "Inpainter",
    "LatentCodec",
    "Relighter",
    "LaplacianInpainter",
    "OracleDenoiser",
    "PanningBackgroundProvider",
    "ToyCodec",
    "ToyRelighter",
    "estimate_shift",
    "oracle_eps",
    "prompt_tint",
    "temporal_smooth",
]
