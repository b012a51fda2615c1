"""Interface contracts for every learned component the engine can bind.

The engine only ever talks to these interfaces; whether they are backed by
analytic toys or a remote model server is a configuration detail. A single
backend instance is never invoked concurrently by the engine.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ..video import MaskClip, VideoClip

SIGMA_MIN = 1e-4


class BackendError(Exception):
    """A bound backend failed or returned something out of contract."""


@dataclass(frozen=True)
class Conditioning:
    """Denoiser conditioning: a prompt plus an opaque auxiliary payload.

    The payload (e.g. serialized edge maps for a control branch) is passed
    through to the denoiser untouched; the engine never interprets it.
    """

    prompt: str = ""
    aux: bytes = b""


class LatentCodec(ABC):
    """Video <-> latent codec with a Gaussian posterior per latent cell.

    ``encode`` returns (mu, sigma) with sigma clamped elementwise to at
    least SIGMA_MIN; both encode and decode must be deterministic.
    """

    @abstractmethod
    def encode(self, clip: VideoClip) -> tuple[np.ndarray, np.ndarray]: ...

    @abstractmethod
    def decode(self, latent: np.ndarray, fps: float = 12.0) -> VideoClip: ...

    @abstractmethod
    def latent_shape(self, clip_shape: tuple[int, int, int, int]) -> tuple[int, int, int, int]: ...


class Denoiser(ABC):
    """Noise predictor eps(x_t, c, t); output shape equals input shape."""

    @abstractmethod
    def eps(self, x_t: np.ndarray, cond: Conditioning, t: int) -> np.ndarray: ...


class Relighter(ABC):
    """Image-guided and text-guided relighting; outputs match fg's shape."""

    @abstractmethod
    def relight_image_guided(self, fg: VideoClip, bg: VideoClip) -> VideoClip: ...

    @abstractmethod
    def relight_text_guided_denoise(
        self,
        noisy: VideoClip,
        fg: VideoClip,
        prompt: str,
        steps: int,
        cross_frame: bool = True,
    ) -> VideoClip: ...


class Inpainter(ABC):
    """Fill the mask=1 region; pixels with mask=0 pass through exactly."""

    @abstractmethod
    def fill(self, clip: VideoClip, mask: MaskClip) -> VideoClip: ...


class BackgroundProvider(ABC):
    """Extend a single frame into a video matching the input's camera motion."""

    @abstractmethod
    def generate(self, input_clip: VideoClip, first_frame: np.ndarray, seed: int) -> VideoClip: ...
