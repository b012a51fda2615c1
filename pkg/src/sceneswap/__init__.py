"""Desk-scale latent video editing engine.

Background replacement, two-step light harmonization with cross-frame
attention, and refinement-projected DDIM denoising, over pluggable model
backends with fully analytic toys.
"""

from .attention import AttentionBatch, attention, cross_frame_attention
from .backends import (
    SIGMA_MIN,
    BackendError,
    BackgroundProvider,
    Conditioning,
    Denoiser,
    Inpainter,
    LaplacianInpainter,
    LatentCodec,
    OracleDenoiser,
    PanningBackgroundProvider,
    Relighter,
    ToyCodec,
    ToyRelighter,
    oracle_eps,
    temporal_smooth,
)
from .frequency import BlurSpec, gaussian_blur, split_bands
from .metrics import MetricReport, bg_psnr, compute_report, fg_hf_corr, tem_con
from .pipeline import (
    BackendSet,
    ConfigError,
    PipelineConfig,
    StageArtifacts,
    StageError,
    build_backends,
    config_from_dict,
    load_config,
    run_pipeline,
    stage1_background,
    stage2_harmonize,
    stage3_enhance,
)
from .rng import derive_rng
from .rpa import RefineConfig, RpaTrace, denoise_with_rpa, dilate_mask, project, refine, verify_alignment
from .scheduler import (
    DegenerateTimestepError,
    NoiseSchedule,
    add_noise,
    ddim_step,
    make_schedule,
    pred_x0,
)
from .video import (
    ClipIOError,
    ClipManifest,
    MaskClip,
    VideoClip,
    composite,
    load_clip,
    load_image,
    load_mask_clip,
    save_clip,
    save_mask_clip,
)

__version__ = "0.1.0"
