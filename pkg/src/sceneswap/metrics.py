"""Pixel-domain quality metrics for desk-scale runs.

``tem_con`` replaces the usual learned-feature temporal-consistency score
with cosine similarity of mean-centered 16x16 downsampled frames; the form
is preserved but absolute values are not comparable to any published table.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .frequency import BlurSpec, gaussian_blur
from .video import MaskClip, VideoClip

PSNR_CAP_DB = 99.0

_FEATURE_SIZE = 16


@dataclass
class MetricReport:
    tem_con: float
    bg_psnr: float
    fg_hf_corr: float
    tem_con_series: list[float]
    bg_psnr_series: list[float]
    fg_hf_corr_series: list[float]

    def to_json(self) -> dict:
        return {
            "tem_con": self.tem_con,
            "bg_psnr": self.bg_psnr,
            "fg_hf_corr": self.fg_hf_corr,
            "tem_con_series": self.tem_con_series,
            "bg_psnr_series": self.bg_psnr_series,
            "fg_hf_corr_series": self.fg_hf_corr_series,
        }


def _area_resample_axis(arr: np.ndarray, size: int, axis: int) -> np.ndarray:
    a = np.moveaxis(arr, axis, 0)
    n = a.shape[0]
    if n < size:
        a = np.repeat(a, -(-size // n), axis=0)
        n = a.shape[0]
    edges = (np.arange(size) * n) // size
    counts = np.diff(np.append(edges, n)).astype(np.float64)
    sums = np.add.reduceat(a, edges, axis=0)
    out = sums / counts.reshape((size,) + (1,) * (a.ndim - 1))
    return np.moveaxis(out, 0, axis)


def _frame_feature(frame: np.ndarray) -> np.ndarray:
    """Mean-centered 16x16x3 area-downsampled frame, flattened."""
    small = _area_resample_axis(frame.astype(np.float64), _FEATURE_SIZE, axis=0)
    small = _area_resample_axis(small, _FEATURE_SIZE, axis=1)
    vec = small.ravel()
    return vec - vec.mean()


def tem_con_series(clip: VideoClip) -> np.ndarray:
    """Cosine similarity of consecutive frame features; length F - 1.

    Pairs with a zero-norm feature score 1.0 when the frames are identical
    blanks; otherwise the pair is recorded as 0.0 and excluded from means.
    """
    f = clip.shape[0]
    if f < 2:
        raise ValueError("tem_con needs at least 2 frames")
    feats = [_frame_feature(clip.frames[i]) for i in range(f)]
    norms = [float(np.linalg.norm(v)) for v in feats]
    out = np.zeros(f - 1, dtype=np.float64)
    for i in range(f - 1):
        a, b = feats[i], feats[i + 1]
        na, nb = norms[i], norms[i + 1]
        if na < 1e-12 or nb < 1e-12:
            if np.allclose(a, b):
                out[i] = 1.0
            else:
                warnings.warn(f"tem_con: blank frame at pair {i}, pair excluded")
                out[i] = np.nan
        else:
            out[i] = float(a @ b / (na * nb))
    return out


def tem_con(clip: VideoClip) -> float:
    series = tem_con_series(clip)
    valid = series[~np.isnan(series)]
    if valid.size == 0:
        raise ValueError("tem_con: no valid frame pairs")
    return float(valid.mean())


def _bg_mse(out: VideoClip, ref: VideoClip, mask: MaskClip) -> tuple[np.ndarray, np.ndarray]:
    if out.shape != ref.shape:
        raise ValueError(f"shape mismatch: {out.shape} vs {ref.shape}")
    if not mask.matches(out):
        raise ValueError(f"mask shape {mask.shape} does not match {out.shape}")
    sel = mask.values < 0.5
    if not sel.any():
        raise ValueError("bg_psnr: mask leaves no background pixels")
    diff = (out.frames.astype(np.float64) - ref.frames.astype(np.float64)) ** 2
    return diff, sel


def _mse_to_db(mse: float) -> float:
    if mse <= 0.0:
        return PSNR_CAP_DB
    return float(min(PSNR_CAP_DB, -10.0 * np.log10(mse)))


def bg_psnr(out: VideoClip, ref: VideoClip, mask: MaskClip) -> float:
    """PSNR (peak 1.0) over pixels with mask < 0.5, capped at 99 dB."""
    diff, sel = _bg_mse(out, ref, mask)
    return _mse_to_db(float(diff[sel].mean()))


def bg_psnr_series(out: VideoClip, ref: VideoClip, mask: MaskClip) -> np.ndarray:
    diff, sel = _bg_mse(out, ref, mask)
    vals = []
    for f in range(out.shape[0]):
        s = sel[f]
        vals.append(_mse_to_db(float(diff[f][s].mean())) if s.any() else PSNR_CAP_DB)
    return np.array(vals)


def _hf(clip: VideoClip, blur: BlurSpec) -> np.ndarray:
    return clip.frames.astype(np.float64) - gaussian_blur(clip, blur).frames.astype(np.float64)


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        raise ValueError("fg_hf_corr: constant high-frequency band")
    return float(a @ b / (na * nb))


def fg_hf_corr(
    out: VideoClip, input_clip: VideoClip, mask: MaskClip, blur: BlurSpec | None = None
) -> float:
    """Pearson correlation of the high-frequency bands over mask >= 0.5."""
    blur = blur or BlurSpec()
    if out.shape != input_clip.shape:
        raise ValueError(f"shape mismatch: {out.shape} vs {input_clip.shape}")
    if not mask.matches(out):
        raise ValueError(f"mask shape {mask.shape} does not match {out.shape}")
    sel = mask.values >= 0.5
    if not sel.any():
        raise ValueError("fg_hf_corr: mask selects no foreground pixels")
    hf_out = _hf(out, blur)[sel]
    hf_in = _hf(input_clip, blur)[sel]
    return _pearson(hf_out.ravel(), hf_in.ravel())


def fg_hf_corr_series(
    out: VideoClip, input_clip: VideoClip, mask: MaskClip, blur: BlurSpec | None = None
) -> np.ndarray:
    blur = blur or BlurSpec()
    hf_out = _hf(out, blur)
    hf_in = _hf(input_clip, blur)
    sel = mask.values >= 0.5
    vals = []
    for f in range(out.shape[0]):
        s = sel[f]
        vals.append(_pearson(hf_out[f][s].ravel(), hf_in[f][s].ravel()) if s.any() else np.nan)
    return np.array(vals)


def compute_report(
    out: VideoClip,
    input_clip: VideoClip,
    bg_ref: VideoClip,
    mask: MaskClip,
    blur: BlurSpec | None = None,
) -> MetricReport:
    return MetricReport(
        tem_con=tem_con(out),
        bg_psnr=bg_psnr(out, bg_ref, mask),
        fg_hf_corr=fg_hf_corr(out, input_clip, mask, blur),
        tem_con_series=[float(v) for v in tem_con_series(out)],
        bg_psnr_series=[float(v) for v in bg_psnr_series(out, bg_ref, mask)],
        fg_hf_corr_series=[float(v) for v in fg_hf_corr_series(out, input_clip, mask, blur)],
    )
