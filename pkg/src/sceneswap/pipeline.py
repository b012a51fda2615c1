"""Three-stage orchestration: background generation, light harmonization,
consistency enhancement.

Stage 1 produces a motion-matched background video from a relit first frame
(prompt mode) or a user-supplied scene image (image mode). Stage 2 composites
the moment-matched foreground over it and optionally re-denoises from an
intermediate noise level (T0 steps) through the text-guided relight path.
Stage 3 encodes the harmonized video, partially re-noises it (T1 steps), and
runs the refinement-projected DDIM loop against the original input.

All intermediates are written as bit-exact raw32 clips so any stage can be
re-run from saved artifacts and reproduce downstream results exactly.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .backends.base import (
    SIGMA_MIN,
    BackendError,
    BackgroundProvider,
    Conditioning,
    Denoiser,
    Inpainter,
    LatentCodec,
    Relighter,
)
from .backends.toy import (
    LaplacianInpainter,
    OracleDenoiser,
    PanningBackgroundProvider,
    ToyCodec,
    ToyRelighter,
    smooth_latent,
)
from .frequency import BlurSpec
from .metrics import compute_report
from .rng import derive_rng
from .rpa import RefineConfig, RpaTrace, denoise_with_rpa
from .scheduler import NoiseSchedule, add_noise, make_schedule
from .video import (
    ClipIOError,
    MaskClip,
    VideoClip,
    composite,
    load_clip,
    load_image,
    load_mask_clip,
    save_clip,
)


class ConfigError(Exception):
    """The pipeline configuration is malformed or inconsistent."""


class StageError(Exception):
    """A pipeline stage failed; carries the stage tag and the cause."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause


PRESETS = {"strong": (0.7, 0.7), "weak": (0.4, 0.4)}

_BACKEND_KINDS = ("toy", "remote")

_DEFAULTS: dict[str, Any] = {
    "t_train": 1000,
    "t_infer": 20,
    "beta_start": 0.00085,
    "beta_end": 0.012,
    "t0": 0.7,
    "t1": 0.7,
    "seed": 0,
    "backend": {
        "codec": "toy",
        "denoiser": "toy",
        "relighter": "toy",
        "inpainter": "toy",
        "background": "toy",
        "remote_url": None,
    },
    "blur": {"sigma": 3.0, "radius": None},
    "harmonize": {"cross_frame": True},
    "rpa": {
        "enabled": True,
        "sigma_min": SIGMA_MIN,
        "mask_dilate_px": 2,
        "trace_path": None,
    },
}

_REQUIRED = ("input", "masks", "out_dir")


def _merge_section(name: str, given: dict, defaults: dict) -> dict:
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys in '{name}': {sorted(unknown)}")
    merged = dict(defaults)
    merged.update(given)
    return merged


@dataclass
class PipelineConfig:
    """Resolved run configuration; build via ``load_config`` or ``from_dict``."""

    input: str
    masks: str
    out_dir: str
    prompt: str | None = None
    background_image: str | None = None
    t_train: int = 1000
    t_infer: int = 20
    beta_start: float = 0.00085
    beta_end: float = 0.012
    t0: int = 14
    t1: int = 14
    seed: int = 0
    backend: dict = field(default_factory=lambda: dict(_DEFAULTS["backend"]))
    blur: dict = field(default_factory=lambda: dict(_DEFAULTS["blur"]))
    harmonize: dict = field(default_factory=lambda: dict(_DEFAULTS["harmonize"]))
    rpa: dict = field(default_factory=lambda: dict(_DEFAULTS["rpa"]))

    def blur_spec(self) -> BlurSpec:
        return BlurSpec(sigma=self.blur["sigma"], radius=self.blur["radius"])

    def to_json(self) -> dict:
        doc = {
            "input": self.input,
            "masks": self.masks,
            "out_dir": self.out_dir,
            "t_train": self.t_train,
            "t_infer": self.t_infer,
            "beta_start": self.beta_start,
            "beta_end": self.beta_end,
            "t0": self.t0,
            "t1": self.t1,
            "seed": self.seed,
            "backend": dict(self.backend),
            "blur": dict(self.blur),
            "harmonize": dict(self.harmonize),
            "rpa": dict(self.rpa),
        }
        if self.prompt is not None:
            doc["prompt"] = self.prompt
        if self.background_image is not None:
            doc["background_image"] = self.background_image
        return doc


def _resolve_steps(name: str, value, t_infer: int) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"'{name}' must be a number, got a boolean")
    if isinstance(value, int):
        steps = value
    elif isinstance(value, float):
        if 0.0 <= value < 1.0:
            steps = int(round(value * t_infer))
        elif value == int(value):
            steps = int(value)
        else:
            raise ConfigError(f"'{name}' fraction must be in [0, 1), got {value}")
    else:
        raise ConfigError(f"'{name}' must be a number, got {type(value).__name__}")
    if not 0 <= steps <= t_infer:
        raise ConfigError(f"'{name}' resolves to {steps}, outside [0, {t_infer}]")
    return steps


def config_from_dict(doc: dict, preset: str | None = None) -> PipelineConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    known_top = set(_DEFAULTS) | set(_REQUIRED) | {"prompt", "background_image"}
    unknown = set(doc) - known_top
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in _REQUIRED:
        if key not in doc:
            raise ConfigError(f"missing required config key '{key}'")

    prompt = doc.get("prompt")
    bg_image = doc.get("background_image")
    if (prompt is None) == (bg_image is None):
        raise ConfigError("exactly one of 'prompt' or 'background_image' must be set")

    t_train = int(doc.get("t_train", _DEFAULTS["t_train"]))
    t_infer = int(doc.get("t_infer", _DEFAULTS["t_infer"]))
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}")
        t0_raw, t1_raw = PRESETS[preset]
    else:
        t0_raw = doc.get("t0", _DEFAULTS["t0"])
        t1_raw = doc.get("t1", _DEFAULTS["t1"])

    backend = _merge_section("backend", doc.get("backend", {}), _DEFAULTS["backend"])
    for role in ("codec", "denoiser", "relighter", "inpainter", "background"):
        if backend[role] not in _BACKEND_KINDS:
            raise ConfigError(f"backend.{role} must be one of {_BACKEND_KINDS}")
    if any(backend[r] == "remote" for r in ("codec", "denoiser", "relighter", "inpainter", "background")):
        if not backend.get("remote_url"):
            raise ConfigError("remote backends require backend.remote_url")

    blur = _merge_section("blur", doc.get("blur", {}), _DEFAULTS["blur"])
    harmonize = _merge_section("harmonize", doc.get("harmonize", {}), _DEFAULTS["harmonize"])
    rpa = _merge_section("rpa", doc.get("rpa", {}), _DEFAULTS["rpa"])

    cfg = PipelineConfig(
        input=str(doc["input"]),
        masks=str(doc["masks"]),
        out_dir=str(doc["out_dir"]),
        prompt=prompt,
        background_image=bg_image,
        t_train=t_train,
        t_infer=t_infer,
        beta_start=float(doc.get("beta_start", _DEFAULTS["beta_start"])),
        beta_end=float(doc.get("beta_end", _DEFAULTS["beta_end"])),
        t0=_resolve_steps("t0", t0_raw, t_infer),
        t1=_resolve_steps("t1", t1_raw, t_infer),
        seed=int(doc.get("seed", _DEFAULTS["seed"])),
        backend=backend,
        blur=blur,
        harmonize=harmonize,
        rpa=rpa,
    )
    try:
        cfg.blur_spec()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path: str | Path, preset: str | None = None) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(doc, preset=preset)


@dataclass
class BackendSet:
    """Bound backend implementations plus the shared schedule."""

    codec: LatentCodec
    relighter: Relighter
    inpainter: Inpainter
    background: BackgroundProvider
    sched: NoiseSchedule
    denoiser_kind: str = "toy"
    fixed_denoiser: Denoiser | None = None

    def stage3_denoiser(self, il_latent: np.ndarray) -> Denoiser:
        """The video denoiser for consistency enhancement.

        Toy mode models the video prior as an oracle toward the
        spatio-temporally smoothed latent of the stage-2 output.
        """
        if self.fixed_denoiser is not None:
            return self.fixed_denoiser
        return OracleDenoiser(smooth_latent(il_latent), self.sched)


def build_backends(cfg: PipelineConfig, sched: NoiseSchedule) -> BackendSet:
    from .backends.remote import (
        RemoteBackgroundProvider,
        RemoteCodec,
        RemoteDenoiser,
        RemoteInpainter,
        RemoteRelighter,
    )

    url = cfg.backend.get("remote_url")
    blur = cfg.blur_spec()

    codec = ToyCodec(sigma_min=cfg.rpa["sigma_min"]) if cfg.backend["codec"] == "toy" else RemoteCodec(url)
    relighter = (
        ToyRelighter(sched=sched, blur=blur)
        if cfg.backend["relighter"] == "toy"
        else RemoteRelighter(url)
    )
    inpainter = LaplacianInpainter() if cfg.backend["inpainter"] == "toy" else RemoteInpainter(url)
    background = (
        PanningBackgroundProvider()
        if cfg.backend["background"] == "toy"
        else RemoteBackgroundProvider(url)
    )
    fixed = RemoteDenoiser(url) if cfg.backend["denoiser"] == "remote" else None
    return BackendSet(
        codec=codec,
        relighter=relighter,
        inpainter=inpainter,
        background=background,
        sched=sched,
        denoiser_kind=cfg.backend["denoiser"],
        fixed_denoiser=fixed,
    )


# --------------------------------------------------------------------------
# stages


def stage1_background(
    input_clip: VideoClip,
    masks: MaskClip,
    backends: BackendSet,
    cfg: PipelineConfig,
) -> VideoClip:
    """Motion-matched background video from a relit or supplied first frame."""
    sched = backends.sched
    if cfg.background_image is not None:
        first = load_image(cfg.background_image)
        if first.shape != input_clip.shape[1:]:
            raise BackendError(
                f"background image {first.shape} does not match frames {input_clip.shape[1:]}"
            )
        panned = backends.background.generate(input_clip, first, cfg.seed)
        return panned
    frame1 = VideoClip(input_clip.frames[:1], fps=input_clip.fps)
    if cfg.t0 == 0:
        relit = frame1
    else:
        t_start = sched.inference_steps[sched.t_infer - cfg.t0]
        eps = derive_rng(cfg.seed, "stage1", "first_frame").standard_normal(frame1.shape)
        noisy = VideoClip(
            add_noise(frame1.frames.astype(np.float64), eps, t_start, sched).astype(np.float32),
            fps=frame1.fps,
        )
        relit = backends.relighter.relight_text_guided_denoise(
            noisy, frame1, cfg.prompt, cfg.t0, cross_frame=cfg.harmonize["cross_frame"]
        )
    panned = backends.background.generate(input_clip, relit.frames[0], cfg.seed)
    # the relit first frame still contains the foreground object; remove it
    return backends.inpainter.fill(panned, masks)


def stage2_harmonize(
    fg: VideoClip,
    masks: MaskClip,
    bg: VideoClip,
    prompt: str,
    t0: int,
    cross_frame: bool,
    relighter: Relighter,
    sched: NoiseSchedule,
    seed: int,
) -> VideoClip:
    """Two-step harmonization: image-guided relight, then partial re-denoise."""
    relit = relighter.relight_image_guided(fg, bg)
    step1 = composite(relit, bg, masks)
    if t0 == 0:
        return step1
    t_start = sched.inference_steps[sched.t_infer - t0]
    # one noise stream per frame index: frames are processed independently
    # (the per-frame jitter stage 3 exists to fix), cross-frame attention is
    # the only inter-frame coupling
    eps = np.stack(
        [
            derive_rng(seed, "stage2", f).standard_normal(step1.shape[1:])
            for f in range(step1.shape[0])
        ]
    )
    noisy = VideoClip(
        add_noise(step1.frames.astype(np.float64), eps, t_start, sched).astype(np.float32),
        fps=step1.fps,
    )
    return relighter.relight_text_guided_denoise(noisy, fg, prompt, t0, cross_frame=cross_frame)


def stage3_enhance(
    il: VideoClip,
    input_clip: VideoClip,
    masks: MaskClip,
    backends: BackendSet,
    cfg: PipelineConfig,
    cond: Conditioning | None = None,
) -> tuple[VideoClip, RpaTrace | None]:
    """Consistency enhancement: partial re-noise in latent space, RPA denoise."""
    sched = backends.sched
    cond = cond or Conditioning(prompt=cfg.prompt or "")
    mu, _ = backends.codec.encode(il)
    if cfg.t1 == 0:
        return backends.codec.decode(mu, fps=il.fps), None
    t_start = sched.inference_steps[sched.t_infer - cfg.t1]
    eps = derive_rng(cfg.seed, "stage3", "latent").standard_normal(mu.shape)
    x_start = add_noise(mu, eps, t_start, sched)
    refine_cfg = RefineConfig(
        blur=cfg.blur_spec(),
        fg_masks=masks,
        bg_fill="inpaint_input",
        inpainter=backends.inpainter,
        mask_dilate_px=cfg.rpa["mask_dilate_px"],
        sigma_min=cfg.rpa["sigma_min"],
    )
    denoiser = backends.stage3_denoiser(mu)
    out, trace = denoise_with_rpa(
        x_start,
        input_clip,
        cond,
        cfg.t1,
        sched,
        denoiser,
        backends.codec,
        refine_cfg,
        rpa_enabled=cfg.rpa["enabled"],
        fps=il.fps,
    )
    return out, trace


@dataclass
class StageArtifacts:
    out_dir: Path
    bg_manifest: Path
    fg_manifest: Path
    harmonized_manifest: Path
    final_manifest: Path
    metrics_path: Path
    trace_path: Path | None
    report: dict


def run_pipeline(cfg: PipelineConfig) -> StageArtifacts:
    """Execute stages 1..3, saving all intermediates and a metrics report."""
    timings: dict[str, float] = {}
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    try:
        input_clip = load_clip(cfg.input)
        masks = load_mask_clip(cfg.masks)
    except ClipIOError:
        raise
    if not masks.matches(input_clip):
        raise ConfigError(
            f"mask clip {masks.shape} does not match input clip {input_clip.shape}"
        )

    sched = make_schedule(cfg.t_train, cfg.t_infer, cfg.beta_start, cfg.beta_end)
    backends = build_backends(cfg, sched)
    prompt = cfg.prompt or ""

    t0 = time.perf_counter()
    try:
        bg = stage1_background(input_clip, masks, backends, cfg)
    except Exception as exc:
        raise StageError("background", exc) from exc
    timings["stage1_background"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    try:
        il = stage2_harmonize(
            input_clip,
            masks,
            bg,
            prompt,
            cfg.t0,
            cfg.harmonize["cross_frame"],
            backends.relighter,
            sched,
            cfg.seed,
        )
    except Exception as exc:
        raise StageError("harmonize", exc) from exc
    timings["stage2_harmonize"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    try:
        final, trace = stage3_enhance(il, input_clip, masks, backends, cfg)
    except Exception as exc:
        raise StageError("enhance", exc) from exc
    timings["stage3_enhance"] = (time.perf_counter() - t0) * 1000.0

    zeros = VideoClip(np.zeros_like(input_clip.frames), fps=input_clip.fps)
    fg_clip = composite(input_clip, zeros, masks)

    bg_man = save_clip(bg, out_dir / "bg", format="raw32")
    fg_man = save_clip(fg_clip, out_dir / "fg", format="raw32")
    il_man = save_clip(il, out_dir / "harmonized", format="raw32")
    final_man = save_clip(final, out_dir / "final", format="raw32")

    trace_path = None
    if trace is not None and cfg.rpa["trace_path"]:
        trace_path = Path(cfg.rpa["trace_path"])
        trace.write_jsonl(trace_path)

    report = compute_report(final, input_clip, bg, masks, cfg.blur_spec()).to_json()
    report["config"] = cfg.to_json()
    report["timings_ms"] = timings
    metrics_path = out_dir / "metrics.json"
    metrics_path.write_text(json.dumps(report, indent=2))
    (out_dir / "config.json").write_text(json.dumps(cfg.to_json(), indent=2))

    return StageArtifacts(
        out_dir=out_dir,
        bg_manifest=Path(bg_man.directory) / "manifest.json",
        fg_manifest=Path(fg_man.directory) / "manifest.json",
        harmonized_manifest=Path(il_man.directory) / "manifest.json",
        final_manifest=Path(final_man.directory) / "manifest.json",
        metrics_path=metrics_path,
        trace_path=trace_path,
        report=report,
    )
