"""Synthetic test clips with known ground truth.

Textures are band-limited (sums of sinusoids with wavelengths of a few
pixels) so they survive a 2x codec round trip; the pan fixture is cropped
from one large textured canvas, which gives exact integer ground-truth
motion and wrap-free frames.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .rng import derive_rng
from .video import MaskClip, VideoClip, save_clip, save_mask_clip


def _band_texture(
    rng: np.random.Generator,
    height: int,
    width: int,
    waves: int = 6,
    min_wavelength: float = 6.0,
    max_wavelength: float = 14.0,
) -> np.ndarray:
    """Zero-mean band-limited texture in roughly [-1, 1], (H, W, 3)."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    out = np.zeros((height, width, 3))
    for _ in range(waves):
        lam = rng.uniform(min_wavelength, max_wavelength)
        theta = rng.uniform(0, np.pi)
        phase = rng.uniform(0, 2 * np.pi)
        color = rng.uniform(0.3, 1.0, size=3)
        wave = np.sin(2 * np.pi * (np.cos(theta) * yy + np.sin(theta) * xx) / lam + phase)
        out += wave[:, :, None] * color
    peak = np.abs(out).max()
    return out / max(peak, 1e-9)


def _smooth_gradient(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    """Slowly varying background field in about [0.25, 0.75], (H, W, 3)."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    out = np.empty((height, width, 3))
    for c in range(3):
        ay, ax = rng.uniform(-1, 1, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        field = np.sin(2 * np.pi * (ay * yy / height + ax * xx / width) / 2 + phase)
        out[:, :, c] = 0.5 + 0.2 * field
    return out


def _disk_mask(
    height: int, width: int, cy: float, cx: float, radius: float, ramp: float = 1.0
) -> np.ndarray:
    """Soft-edged disk: 1 inside, 0 outside, linear ramp of ~2*ramp px."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    dist = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
    return np.clip((radius - dist) / (2.0 * ramp) + 0.5, 0.0, 1.0)


def make_texture_fixture(
    seed: int, frames: int = 8, height: int = 64, width: int = 96, fps: float = 12.0
) -> tuple[VideoClip, MaskClip]:
    """Static camera, textured disk foreground over a smooth background.

    The foreground texture band (wavelengths ~10..18 px) survives a 2x codec
    round trip, and the mask edge ramps over ~4 px so the blend seam stays
    low-frequency; both are needed for high-fidelity detail transfer to be
    observable at all.
    """
    rng = derive_rng(seed, "fixture", "texture")
    bg = _smooth_gradient(rng, height, width) + 0.04 * _band_texture(rng, height, width)
    cy, cx = height / 2.0, width / 2.0
    radius = min(height, width) * 0.40
    mask = _disk_mask(height, width, cy, cx, radius, ramp=3.0)
    fg = 0.5 + 0.45 * _band_texture(rng, height, width, min_wavelength=8.0, max_wavelength=12.0)
    frame = mask[:, :, None] * fg + (1.0 - mask[:, :, None]) * bg
    clip = VideoClip(np.repeat(frame[None], frames, axis=0).astype(np.float32), fps=fps)
    masks = MaskClip(np.repeat(mask[None], frames, axis=0))
    return clip, masks


def make_pan_fixture(
    seed: int,
    frames: int = 8,
    height: int = 32,
    width: int = 48,
    dy: int = 0,
    dx: int = 2,
    fps: float = 12.0,
) -> tuple[VideoClip, MaskClip, list[tuple[int, int]]]:
    """Camera pan of (dy, dx) px/frame over a textured world with a disk object.

    Returns the clip, per-frame masks, and the ground-truth content offsets
    of each frame relative to frame one.
    """
    rng = derive_rng(seed, "fixture", "pan")
    span_y = height + abs(dy) * frames + 2
    span_x = width + abs(dx) * frames + 2
    world = _smooth_gradient(rng, span_y, span_x) + 0.12 * _band_texture(rng, span_y, span_x)
    cy = span_y / 2.0
    cx = width / 2.0 + (abs(dx) * frames) / 2.0
    radius = min(height, width) * 0.28
    world_mask = _disk_mask(span_y, span_x, cy, cx, radius)
    fg = 0.5 + 0.30 * _band_texture(rng, span_y, span_x)
    world = world_mask[:, :, None] * fg + (1.0 - world_mask[:, :, None]) * world

    # frame f's window origin is origin_1 - (dy*f, dx*f), so content shifts by
    # (dy, dx) px/frame; anchor the first window so every origin stays in range
    y00 = 1 + (dy * frames if dy > 0 else 0)
    x00 = 1 + (dx * frames if dx > 0 else 0)
    clip_frames = np.empty((frames, height, width, 3))
    mask_frames = np.empty((frames, height, width))
    offsets = []
    for f in range(frames):
        y0 = y00 - dy * f
        x0 = x00 - dx * f
        clip_frames[f] = world[y0 : y0 + height, x0 : x0 + width]
        mask_frames[f] = world_mask[y0 : y0 + height, x0 : x0 + width]
        offsets.append((dy * f, dx * f))
    clip = VideoClip(clip_frames.astype(np.float32), fps=fps)
    return clip, MaskClip(mask_frames), offsets


def make_background_image(seed: int, height: int = 32, width: int = 48) -> np.ndarray:
    """Smooth foreground-free scene image for image-guided runs."""
    rng = derive_rng(seed, "fixture", "bg_image")
    img = _smooth_gradient(rng, height, width) + 0.05 * _band_texture(rng, height, width)
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def write_fixtures(out_dir: str | Path, seed: int) -> dict:
    """Emit the pan and texture fixtures plus a background image under out_dir."""
    out_dir = Path(out_dir)
    tex_clip, tex_mask = make_texture_fixture(seed)
    pan_clip, pan_mask, offsets = make_pan_fixture(seed)
    save_clip(tex_clip, out_dir / "texture" / "input", format="raw32")
    save_mask_clip(tex_mask, out_dir / "texture" / "masks", format="raw32")
    save_clip(pan_clip, out_dir / "pan" / "input", format="raw32")
    save_mask_clip(pan_mask, out_dir / "pan" / "masks", format="raw32")
    bg_img = make_background_image(seed)
    from PIL import Image

    Image.fromarray(np.rint(bg_img * 255.0).astype(np.uint8), mode="RGB").save(
        out_dir / "bg_image.png"
    )
    info = {
        "seed": seed,
        "pan_offsets": offsets,
        "fixtures": {
            "texture": {"input": "texture/input/manifest.json", "masks": "texture/masks/manifest.json"},
            "pan": {"input": "pan/input/manifest.json", "masks": "pan/masks/manifest.json"},
        },
        "background_image": "bg_image.png",
    }
    (out_dir / "info.json").write_text(json.dumps(info, indent=2))
    return info
