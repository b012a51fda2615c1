"""Fully analytic backend implementations.

These make the whole pipeline runnable and provable at desk scale without
pretrained weights:

* ``ToyCodec``: 2x2 average-pool encoder (mean) with a local-contrast sigma,
  bilinear 2x decoder. Deliberately lossy on non-constant inputs, which is
  the property the refinement projection has to cope with.
* ``OracleDenoiser``: closed-form noise prediction toward a fixed latent
  target; makes every DDIM trajectory land on the target exactly.
* ``ToyRelighter``: image-guided path matches low-frequency moments of the
  foreground to the background; text-guided path runs a pixel-space DDIM
  loop whose per-step clean estimate shrinks toward a prompt-derived tint
  field, with a cross-frame attention hook on coarse features.
* ``LaplacianInpainter``: harmonic fill by red-black Gauss-Seidel sweeps.
* ``PanningBackgroundProvider``: integer global-translation estimation and
  a panning canvas built from the first frame.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..attention import attention
from ..frequency import BlurSpec, blur_frames, gaussian_blur, split_bands
from ..scheduler import NoiseSchedule, make_schedule
from ..video import MaskClip, VideoClip
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


def _up2(arr: np.ndarray, axis: int) -> np.ndarray:
    """Bilinear 2x upsampling along one axis (half-pixel centers)."""
    a = np.moveaxis(arr, axis, 0)
    prev = np.concatenate([a[:1], a[:-1]], axis=0)
    nxt = np.concatenate([a[1:], a[-1:]], axis=0)
    out = np.empty((2 * a.shape[0],) + a.shape[1:], dtype=a.dtype)
    out[0::2] = 0.25 * prev + 0.75 * a
    out[1::2] = 0.75 * a + 0.25 * nxt
    return np.moveaxis(out, 0, axis)


class ToyCodec(LatentCodec):
    """2x spatial compression: mean = 2x2 average pool, sigma from local spread."""

    def __init__(self, sigma_scale: float = 0.05, sigma_min: float = SIGMA_MIN):
        self.sigma_scale = float(sigma_scale)
        self.sigma_min = float(sigma_min)

    def latent_shape(self, clip_shape):
        f, h, w, c = clip_shape
        if h % 2 or w % 2:
            raise BackendError(f"toy codec needs even spatial dims, got {h}x{w}")
        return (f, h // 2, w // 2, c)

    def encode(self, clip: VideoClip):
        f, h, w, c = clip.shape
        if h % 2 or w % 2:
            raise BackendError(f"toy codec needs even spatial dims, got {h}x{w}")
        blocks = clip.frames.astype(np.float64).reshape(f, h // 2, 2, w // 2, 2, c)
        mu = blocks.mean(axis=(2, 4))
        std = blocks.std(axis=(2, 4))
        sigma = np.maximum(self.sigma_min + self.sigma_scale * std, self.sigma_min)
        return mu, sigma

    def decode(self, latent: np.ndarray, fps: float = 12.0) -> VideoClip:
        lat = np.asarray(latent, dtype=np.float64)
        if lat.ndim != 4:
            raise BackendError(f"latent must be 4-D, got shape {lat.shape}")
        out = _up2(_up2(lat, axis=1), axis=2)
        return VideoClip(out.astype(np.float32), fps=fps)


def oracle_eps(x_t: np.ndarray, target: np.ndarray, t: int, sched: NoiseSchedule) -> np.ndarray:
    """Noise prediction that makes pred_x0 return ``target`` exactly.

    eps = (x_t - sqrt(ab_t) * target) / sqrt(1 - ab_t); undefined at t=0.
    """
    x_t = np.asarray(x_t)
    target = np.asarray(target)
    if x_t.shape != target.shape:
        raise ValueError(f"shape mismatch: {x_t.shape} vs {target.shape}")
    ab = sched.alpha_bar_at(t)
    if ab >= 1.0:
        raise ValueError(f"oracle eps undefined at t={t} (alpha_bar=1)")
    return (x_t - np.sqrt(ab) * target) / np.sqrt(1.0 - ab)


class OracleDenoiser(Denoiser):
    """Denoiser whose eps drives every DDIM trajectory to a fixed target."""

    def __init__(self, target: np.ndarray, sched: NoiseSchedule):
        self.target = np.asarray(target, dtype=np.float64)
        self.sched = sched

    def eps(self, x_t: np.ndarray, cond: Conditioning, t: int) -> np.ndarray:
        return oracle_eps(x_t, self.target, t, self.sched)


def _axis_smooth(x: np.ndarray, axis: int, weights) -> np.ndarray:
    a = np.moveaxis(x, axis, 0)
    prev = np.concatenate([a[:1], a[:-1]], axis=0)
    nxt = np.concatenate([a[1:], a[-1:]], axis=0)
    w0, w1, w2 = weights
    return np.moveaxis(w0 * prev + w1 * a + w2 * nxt, 0, axis)


def temporal_smooth(latent: np.ndarray, weights=(0.25, 0.5, 0.25)) -> np.ndarray:
    """[0.25, 0.5, 0.25] moving average along the frame axis, edges replicated."""
    return _axis_smooth(np.asarray(latent, dtype=np.float64), 0, weights)


def smooth_latent(latent: np.ndarray, weights=(0.25, 0.5, 0.25)) -> np.ndarray:
    """Temporal plus spatial [0.25, 0.5, 0.25] smoothing of a latent tensor.

    Stands in for a video diffusion prior: jitter between frames and
    cell-scale noise are both implausible under it.
    """
    x = np.asarray(latent, dtype=np.float64)
    for axis in (0, 1, 2):
        x = _axis_smooth(x, axis, weights)
    return x


def prompt_tint(prompt: str) -> np.ndarray:
    """Deterministic warm/cool RGB shift derived from the prompt hash."""
    digest = hashlib.sha256(prompt.encode("utf-8")).digest()
    warm = digest[0] % 2 == 0
    magnitude = 0.10 + 0.15 * (digest[1] / 255.0)
    direction = np.array([1.0, 0.1, -1.0]) if warm else np.array([-1.0, 0.1, 1.0])
    return magnitude * direction


class ToyRelighter(Relighter):
    """Moment-matching image-guided relight plus a shrinkage-oracle SDEdit path.

    The text-guided path treats the video pixels as the diffusion state. The
    per-step clean estimate spatially smooths the descaled state (a crude
    stand-in for a learned denoiser) and shrinks it toward a flat tint field
    derived from the prompt, so starting from a noisier step (larger T0)
    pulls the result further toward the tint -- the knob the two-step
    harmonization exposes. Because the clean estimate carries no high
    frequencies, the state's noise decays geometrically across steps.
    """

    def __init__(
        self,
        sched: NoiseSchedule | None = None,
        blur: BlurSpec | None = None,
        trust: float = 1.0,
        attn_strength: float = 0.25,
        denoise_sigma: float = 2.0,
    ):
        self.sched = sched or make_schedule()
        self.blur = blur or BlurSpec()
        self.trust = float(trust)
        self.attn_strength = float(attn_strength)
        self.denoise_blur = BlurSpec(sigma=denoise_sigma)

    # -- image-guided ------------------------------------------------------

    def relight_image_guided(self, fg: VideoClip, bg: VideoClip) -> VideoClip:
        if fg.shape != bg.shape:
            raise BackendError(f"fg/bg shape mismatch: {fg.shape} vs {bg.shape}")
        lf_fg, hf_fg = split_bands(fg, self.blur)
        lf_bg = gaussian_blur(bg, self.blur)
        lff = lf_fg.frames.astype(np.float64)
        lfb = lf_bg.frames.astype(np.float64)
        mu_f = lff.mean(axis=(1, 2), keepdims=True)
        sd_f = lff.std(axis=(1, 2), keepdims=True)
        mu_b = lfb.mean(axis=(1, 2), keepdims=True)
        sd_b = lfb.std(axis=(1, 2), keepdims=True)
        scale = np.where(sd_f > 1e-6, sd_b / np.maximum(sd_f, 1e-12), 1.0)
        mapped = (lff - mu_f) * scale + mu_b
        out = hf_fg.frames.astype(np.float64) + mapped
        return VideoClip(out.astype(np.float32), fps=fg.fps)

    # -- text-guided -------------------------------------------------------

    def _attention_mix(self, y: np.ndarray, cross_frame: bool) -> np.ndarray:
        f, h, w, c = y.shape
        if h % 4 or w % 4:
            raise BackendError(f"text-guided relight needs dims divisible by 4, got {h}x{w}")
        pooled = y.reshape(f, h // 4, 4, w // 4, 4, c).mean(axis=(2, 4))
        tokens = pooled.reshape(f, -1, c)
        out = y.copy()
        for i in range(f):
            ref = tokens[0] if cross_frame else tokens[i]
            att = attention(tokens[i], ref, ref)
            delta = (att - tokens[i]).reshape(1, h // 4, w // 4, c)
            up = delta
            for axis in (1, 2, 1, 2):
                up = _up2(up, axis=axis)
            out[i] += self.attn_strength * up[0]
        return out

    def relight_text_guided_denoise(
        self,
        noisy: VideoClip,
        fg: VideoClip,
        prompt: str,
        steps: int,
        cross_frame: bool = True,
    ) -> VideoClip:
        t_total = self.sched.t_infer
        if not 0 <= steps <= t_total:
            raise BackendError(f"steps must be in [0, {t_total}], got {steps}")
        if steps == 0:
            return noisy
        tint = prompt_tint(prompt)
        base = fg.frames.astype(np.float64).mean(axis=(0, 1, 2))
        target = np.broadcast_to(base + tint, noisy.shape).astype(np.float64)
        x = noisy.frames.astype(np.float64)
        tau2 = self.trust**2
        for i in range(t_total - steps, t_total):
            t = self.sched.inference_steps[i]
            ab = self.sched.alpha_bar_at(t)
            weight = ab * tau2 / (ab * tau2 + (1.0 - ab))
            # the denoiser only ever sees its smoothed view of the state, so
            # injected noise decays geometrically instead of riding the eps
            x_seen = blur_frames(x, self.denoise_blur)
            y = weight * (x_seen / np.sqrt(ab)) + (1.0 - weight) * target
            y = self._attention_mix(y, cross_frame)
            eps = (x_seen - np.sqrt(ab) * y) / np.sqrt(1.0 - ab)
            ab_prev = self.sched.alpha_bar_at(self.sched.step_after(i))
            x = np.sqrt(ab_prev) * y + np.sqrt(1.0 - ab_prev) * eps
        return VideoClip(x.astype(np.float32), fps=noisy.fps)


class LaplacianInpainter(Inpainter):
    """Harmonic fill: masked pixels relax to the average of their neighbors."""

    def __init__(self, tol: float = 1e-4, max_iters: int = 2000):
        self.tol = float(tol)
        self.max_iters = int(max_iters)

    def fill(self, clip: VideoClip, mask: MaskClip) -> VideoClip:
        if not mask.matches(clip):
            raise BackendError(f"mask shape {mask.shape} does not match clip {clip.shape}")
        out = clip.frames.astype(np.float64).copy()
        for f in range(clip.shape[0]):
            unknown = mask.values[f] > 0.5
            if not unknown.any():
                continue
            if unknown.all():
                raise BackendError(f"frame {f}: mask covers every pixel, nothing to anchor")
            out[f] = self._fill_frame(out[f], unknown)
        return VideoClip(out.astype(np.float32), fps=clip.fps)

    def _fill_frame(self, frame: np.ndarray, unknown: np.ndarray) -> np.ndarray:
        h, w, _ = frame.shape
        x = frame.copy()
        x[unknown] = frame[~unknown].mean(axis=0)
        counts = np.full((h, w), 4.0)
        counts[0, :] -= 1.0
        counts[-1, :] -= 1.0
        counts[:, 0] -= 1.0
        counts[:, -1] -= 1.0
        yy, xx = np.mgrid[0:h, 0:w]
        checker = (yy + xx) % 2 == 0
        for _ in range(self.max_iters):
            max_update = 0.0
            for parity in (True, False):
                nb = np.zeros_like(x)
                nb[1:, :] += x[:-1, :]
                nb[:-1, :] += x[1:, :]
                nb[:, 1:] += x[:, :-1]
                nb[:, :-1] += x[:, 1:]
                new = nb / counts[:, :, None]
                sel = unknown & (checker == parity)
                if not sel.any():
                    continue
                max_update = max(max_update, float(np.abs(new[sel] - x[sel]).max()))
                x[sel] = new[sel]
            if max_update < self.tol:
                break
        return x


def estimate_shift(frame: np.ndarray, ref: np.ndarray, max_shift: int = 8) -> tuple[int, int]:
    """Exhaustive integer-translation search minimizing overlap MSE.

    Returns (dy, dx) such that frame(p) ~= ref(p - (dy, dx)). Ties prefer
    the smallest displacement, then lexicographic order.
    """
    h, w = frame.shape[:2]
    best = (0, 0)
    best_mse = np.inf
    for dy in range(-max_shift, max_shift + 1):
        ys = slice(max(0, dy), h + min(0, dy))
        ys_ref = slice(max(0, -dy), h + min(0, -dy))
        for dx in range(-max_shift, max_shift + 1):
            xs = slice(max(0, dx), w + min(0, dx))
            xs_ref = slice(max(0, -dx), w + min(0, -dx))
            a = frame[ys, xs]
            b = ref[ys_ref, xs_ref]
            if a.size == 0:
                continue
            mse = float(np.mean((a - b) ** 2))
            key = (mse, abs(dy) + abs(dx), dy, dx)
            if key < (best_mse, abs(best[0]) + abs(best[1]), best[0], best[1]):
                best_mse = mse
                best = (dy, dx)
    return best


class PanningBackgroundProvider(BackgroundProvider):
    """Extends the first frame by panning it along the input's estimated motion.

    Only global integer translation is modeled. Fully deterministic; the
    seed parameter is accepted for interface compatibility.
    """

    def __init__(self, max_shift: int = 8):
        self.max_shift = int(max_shift)

    def estimate_offsets(self, clip: VideoClip) -> list[tuple[int, int]]:
        """Cumulative offsets vs frame one, from adjacent-frame searches."""
        offsets = [(0, 0)]
        for f in range(1, clip.shape[0]):
            dy, dx = estimate_shift(
                clip.frames[f].astype(np.float64),
                clip.frames[f - 1].astype(np.float64),
                self.max_shift,
            )
            offsets.append((offsets[-1][0] + dy, offsets[-1][1] + dx))
        return offsets

    def generate(self, input_clip: VideoClip, first_frame: np.ndarray, seed: int) -> VideoClip:
        f, h, w, _ = input_clip.shape
        first = np.asarray(first_frame, dtype=np.float64)
        if first.shape != (h, w, 3):
            raise BackendError(
                f"first frame is {first.shape}, input frames are {(h, w, 3)}"
            )
        offsets = self.estimate_offsets(input_clip)
        pad = max(1, max(max(abs(dy), abs(dx)) for dy, dx in offsets))
        canvas = np.pad(first, ((pad, pad), (pad, pad), (0, 0)), mode="symmetric")
        frames = np.empty((f, h, w, 3), dtype=np.float64)
        for i, (dy, dx) in enumerate(offsets):
            frames[i] = canvas[pad - dy : pad - dy + h, pad - dx : pad - dx + w]
        return VideoClip(frames.astype(np.float32), fps=input_clip.fps)
