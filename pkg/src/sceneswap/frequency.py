"""Gaussian low-pass filtering and exact low/high frequency band splits.

The blur is a per-frame separable 2-D convolution; there is no temporal
mixing. The 1-D kernel is the Gaussian sampled at integer offsets in
[-radius, radius] and renormalized to sum exactly 1, so constants pass
through unchanged. Borders use edge-inclusive reflection (``a b c d`` pads
to ``b a | a b c d | d c``), which makes the large-sigma limit of the blur
the plain per-frame mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .video import VideoClip

DEFAULT_SIGMA = 3.0


@dataclass(frozen=True)
class BlurSpec:
    """Gaussian blur parameters; radius defaults to ceil(3 * sigma)."""

    sigma: float = DEFAULT_SIGMA
    radius: int | None = None
    border: str = "reflect"

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.border != "reflect":
            raise ValueError(f"unsupported border mode {self.border!r}")
        if self.radius is None:
            object.__setattr__(self, "radius", max(1, math.ceil(3.0 * self.sigma)))
        elif self.radius < 1:
            raise ValueError(f"radius must be >= 1, got {self.radius}")

    def kernel(self) -> np.ndarray:
        """Sampled, exactly normalized 1-D kernel of length 2 * radius + 1."""
        offs = np.arange(-self.radius, self.radius + 1, dtype=np.float64)
        k = np.exp(-0.5 * (offs / self.sigma) ** 2)
        return k / k.sum()


def _convolve_axis(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    r = (len(kernel) - 1) // 2
    pad = [(0, 0)] * arr.ndim
    pad[axis] = (r, r)
    padded = np.pad(arr, pad, mode="symmetric")
    n = arr.shape[axis]
    out = np.zeros(arr.shape, dtype=np.float64)
    sl = [slice(None)] * arr.ndim
    for j, w in enumerate(kernel):
        sl[axis] = slice(j, j + n)
        out += w * padded[tuple(sl)]
    return out


def blur_frames(frames: np.ndarray, spec: BlurSpec) -> np.ndarray:
    """Separable spatial blur of an (F, H, W, C) array, float64 result."""
    _, h, w, _ = frames.shape
    if h < 2 or w < 2:
        raise ValueError(f"frame too small to blur: {h}x{w}")
    k = spec.kernel()
    out = _convolve_axis(frames.astype(np.float64), k, axis=1)
    return _convolve_axis(out, k, axis=2)


def gaussian_blur(clip: VideoClip, spec: BlurSpec | None = None) -> VideoClip:
    """Per-frame separable Gaussian blur with reflect padding."""
    spec = spec or BlurSpec()
    out = blur_frames(clip.frames, spec)
    return VideoClip(out.astype(np.float32), fps=clip.fps)


def split_bands(clip: VideoClip, spec: BlurSpec | None = None) -> tuple[VideoClip, VideoClip]:
    """Return (low, high) bands with low + high == clip up to rounding."""
    lf = gaussian_blur(clip, spec)
    hf = clip.frames - lf.frames
    return lf, VideoClip(hf, fps=clip.fps)
