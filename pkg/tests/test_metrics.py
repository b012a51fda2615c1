import numpy as np
import pytest

from sceneswap.frequency import BlurSpec, gaussian_blur, split_bands
from sceneswap.metrics import (
    bg_psnr,
    compute_report,
    fg_hf_corr,
    tem_con,
    tem_con_series,
)
from sceneswap.video import MaskClip, VideoClip

from _clips import const_clip, random_clip


def reference_tem_con(clip):
    """Independent recomputation: 16x16 area-mean features, mean-centered cosine."""
    f, h, w, _ = clip.shape
    feats = []
    for i in range(f):
        frame = clip.frames[i].astype(np.float64)
        eh = (np.arange(16) * h) // 16
        ew = (np.arange(16) * w) // 16
        ch = np.diff(np.append(eh, h)).astype(np.float64)
        cw = np.diff(np.append(ew, w)).astype(np.float64)
        rows = np.add.reduceat(frame, eh, axis=0) / ch[:, None, None]
        small = np.add.reduceat(rows, ew, axis=1) / cw[None, :, None]
        v = small.ravel()
        feats.append(v - v.mean())
    sims = []
    for a, b in zip(feats, feats[1:]):
        sims.append(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
    return float(np.mean(sims))


class TestTemCon:
    def test_static_clip_is_one(self, rng):
        one = rng.random((1, 16, 16, 3)).astype(np.float32)
        clip = VideoClip(np.repeat(one, 4, axis=0))
        assert tem_con(clip) == pytest.approx(1.0, abs=1e-9)

    def test_antipodal_frames(self, rng):
        a = rng.random((16, 16, 3)).astype(np.float32)
        centered = a - a.mean()
        clip = VideoClip(np.stack([a, a.mean() - centered]))
        assert tem_con(clip) == pytest.approx(-1.0, abs=1e-6)

    def test_matches_independent_recomputation(self, rng):
        frames = [rng.random((20, 28, 3)).astype(np.float32)]
        for _ in range(5):
            frames.append(
                np.clip(frames[-1] + rng.normal(0, 0.05, frames[-1].shape), 0, 1).astype(np.float32)
            )
        clip = VideoClip(np.stack(frames))
        assert tem_con(clip) == pytest.approx(reference_tem_con(clip), abs=1e-9)

    def test_invariant_to_global_intensity_shift(self, rng):
        clip = random_clip(rng, f=4, lo=0.2, hi=0.6)
        shifted = VideoClip(clip.frames + np.float32(0.3))
        # exact up to f32 quantization of the shifted frames
        assert tem_con(shifted) == pytest.approx(tem_con(clip), abs=1e-6)

    def test_identical_blanks_score_one(self):
        clip = const_clip(0.5, f=3)
        assert tem_con(clip) == pytest.approx(1.0)

    def test_blank_vs_textured_excluded_with_warning(self, rng):
        frames = np.stack([
            np.full((16, 16, 3), 0.5, dtype=np.float32),
            rng.random((16, 16, 3)).astype(np.float32),
            rng.random((16, 16, 3)).astype(np.float32),
        ])
        with pytest.warns(UserWarning, match="blank"):
            series = tem_con_series(VideoClip(frames))
        assert np.isnan(series[0])
        assert np.isfinite(series[1])

    def test_needs_two_frames(self, rng):
        with pytest.raises(ValueError):
            tem_con(random_clip(rng, f=1))


class TestBgPsnr:
    def mask_with_center_fg(self, f=2, h=16, w=16):
        m = np.zeros((f, h, w), dtype=np.float32)
        m[:, 4:12, 4:12] = 1.0
        return MaskClip(m)

    def test_identical_capped_99(self, rng):
        clip = random_clip(rng, f=2)
        assert bg_psnr(clip, clip, self.mask_with_center_fg()) == 99.0

    def test_uniform_offset_20db(self):
        a = const_clip(0.5, f=2)
        b = VideoClip(a.frames + np.float32(0.1))
        val = bg_psnr(a, b, self.mask_with_center_fg())
        assert val == pytest.approx(20.0, abs=1e-3)

    def test_foreground_corruption_ignored(self, rng):
        clip = random_clip(rng, f=2)
        mask = self.mask_with_center_fg()
        corrupted = clip.frames.copy()
        corrupted[:, 5:11, 5:11, :] += 0.5
        assert bg_psnr(VideoClip(corrupted), clip, mask) == 99.0

    def test_symmetric(self, rng):
        a, b = random_clip(rng, f=2), random_clip(rng, f=2)
        mask = self.mask_with_center_fg()
        assert bg_psnr(a, b, mask) == pytest.approx(bg_psnr(b, a, mask), abs=1e-12)

    def test_empty_background_rejected(self, rng):
        clip = random_clip(rng, f=2)
        with pytest.raises(ValueError):
            bg_psnr(clip, clip, MaskClip(np.ones((2, 16, 16), dtype=np.float32)))


class TestFgHfCorr:
    def center_mask(self, f=2, h=16, w=16):
        m = np.zeros((f, h, w), dtype=np.float32)
        m[:, 3:13, 3:13] = 1.0
        return MaskClip(m)

    def test_self_correlation_is_one(self, rng):
        clip = random_clip(rng, f=2)
        assert fg_hf_corr(clip, clip, self.center_mask()) == pytest.approx(1.0, abs=1e-9)

    def test_lf_only_output_uncorrelated(self, rng):
        # fine texture far below the blur cutoff over a very smooth base:
        # stripping HF leaves nothing that correlates with it
        spec = BlurSpec(sigma=3.0)
        yy, xx = np.mgrid[0:32, 0:32].astype(np.float64)
        base = 0.5 + 0.15 * np.sin(2 * np.pi * (yy + 0.5 * xx) / 64.0)
        tex = np.zeros((32, 32))
        for lam, theta in ((3.3, 0.4), (3.9, 1.2), (4.4, 2.1)):
            tex += 0.1 * np.sin(2 * np.pi * (np.cos(theta) * yy + np.sin(theta) * xx) / lam)
        frame = np.repeat((base + tex)[:, :, None], 3, axis=2).astype(np.float32)
        clip = VideoClip(np.repeat(frame[None], 2, axis=0))
        m = np.zeros((2, 32, 32), dtype=np.float32)
        m[:, 4:28, 4:28] = 1.0
        lf = gaussian_blur(clip, spec)
        val = fg_hf_corr(lf, clip, MaskClip(m), spec)
        assert abs(val) <= 0.05

    def test_dc_shift_invariant(self, rng):
        clip = random_clip(rng, f=2, lo=0.2, hi=0.7)
        shifted = VideoClip(clip.frames + np.float32(0.2))
        assert fg_hf_corr(shifted, clip, self.center_mask()) == pytest.approx(1.0, abs=1e-6)

    def test_affine_lf_change_keeps_high_correlation(self, rng):
        spec = BlurSpec(sigma=2.0)
        clip = random_clip(rng, f=2, h=32, w=32)
        lf, hf = split_bands(clip, spec)
        modified = VideoClip((1.5 * lf.frames + 0.1 + hf.frames).astype(np.float32))
        m = MaskClip(np.ones((2, 32, 32), dtype=np.float32))
        assert fg_hf_corr(modified, clip, m, spec) >= 0.99

    def test_constant_band_rejected(self):
        clip = const_clip(0.5, f=2)
        with pytest.raises(ValueError):
            fg_hf_corr(clip, clip, self.center_mask())


class TestReport:
    def test_series_lengths_and_finiteness(self, rng):
        out = random_clip(rng, f=4)
        ref = random_clip(rng, f=4)
        m = np.zeros((4, 16, 16), dtype=np.float32)
        m[:, 4:12, 4:12] = 1.0
        report = compute_report(out, ref, ref, MaskClip(m))
        doc = report.to_json()
        assert len(doc["tem_con_series"]) == 3
        assert len(doc["bg_psnr_series"]) == 4
        assert len(doc["fg_hf_corr_series"]) == 4
        for key in ("tem_con", "bg_psnr", "fg_hf_corr"):
            assert np.isfinite(doc[key])
