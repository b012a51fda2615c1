import numpy as np
import pytest

from sceneswap.frequency import BlurSpec, gaussian_blur, split_bands
from sceneswap.video import VideoClip

from _clips import const_clip, random_clip


def dense_blur_oracle(frame: np.ndarray, spec: BlurSpec) -> np.ndarray:
    """Direct 2-D convolution with the outer-product kernel, reflect border."""
    k1 = spec.kernel()
    k2 = np.outer(k1, k1)
    r = spec.radius
    h, w = frame.shape[:2]
    padded = np.pad(frame, ((r, r), (r, r), (0, 0)), mode="symmetric")
    out = np.zeros_like(frame, dtype=np.float64)
    for i in range(h):
        for j in range(w):
            patch = padded[i : i + 2 * r + 1, j : j + 2 * r + 1]
            out[i, j] = np.tensordot(k2, patch, axes=([0, 1], [0, 1]))
    return out


class TestBlurSpec:
    def test_default_radius(self):
        assert BlurSpec(sigma=3.0).radius == 9
        assert BlurSpec(sigma=0.4).radius == 2

    def test_kernel_normalized(self):
        for sigma in (0.7, 1.5, 3.0, 8.0):
            assert abs(BlurSpec(sigma=sigma).kernel().sum() - 1.0) < 1e-15

    def test_invalid(self):
        with pytest.raises(ValueError):
            BlurSpec(sigma=0.0)
        with pytest.raises(ValueError):
            BlurSpec(sigma=1.0, radius=0)
        with pytest.raises(ValueError):
            BlurSpec(sigma=1.0, border="zero")


class TestGaussianBlur:
    def test_constant_unchanged(self):
        clip = const_clip(0.7)
        out = gaussian_blur(clip, BlurSpec(sigma=2.0))
        assert np.allclose(out.frames, 0.7, atol=1e-6)

    def test_impulse_matches_dense_oracle(self):
        spec = BlurSpec(sigma=1.2)
        frames = np.zeros((1, 16, 16, 3), dtype=np.float32)
        frames[0, 8, 8, :] = 1.0
        out = gaussian_blur(VideoClip(frames), spec)
        oracle = dense_blur_oracle(frames[0].astype(np.float64), spec)
        assert np.abs(out.frames[0] - oracle).max() <= 1e-6

    def test_separable_matches_dense_on_random(self, rng):
        spec = BlurSpec(sigma=2.0)
        clip = random_clip(rng, f=1, h=16, w=16)
        out = gaussian_blur(clip, spec)
        oracle = dense_blur_oracle(clip.frames[0].astype(np.float64), spec)
        assert np.abs(out.frames[0] - oracle).max() <= 1e-6

    def test_no_temporal_mixing(self, rng):
        clip = random_clip(rng, f=3)
        out = gaussian_blur(clip, BlurSpec(sigma=1.5))
        single = gaussian_blur(VideoClip(clip.frames[1:2]), BlurSpec(sigma=1.5))
        assert np.array_equal(out.frames[1], single.frames[0])

    def test_large_sigma_approaches_frame_mean(self, rng):
        clip = random_clip(rng, f=1, h=16, w=16)
        out = gaussian_blur(clip, BlurSpec(sigma=16.0))
        mean = clip.frames.reshape(1, -1, 3).mean(axis=1)
        assert np.abs(out.frames.reshape(1, -1, 3) - mean[:, None, :]).max() <= 1e-3

    def test_shift_equivariance_interior(self, rng):
        spec = BlurSpec(sigma=1.0)
        r = spec.radius
        frames = rng.random((1, 24, 24, 3)).astype(np.float32)
        shifted = np.roll(frames, 1, axis=2)
        a = gaussian_blur(VideoClip(frames), spec).frames
        b = gaussian_blur(VideoClip(shifted), spec).frames
        interior = np.s_[:, r + 1 : -r - 1, r + 1 : -r - 1, :]
        assert np.allclose(np.roll(a, 1, axis=2)[interior], b[interior], atol=1e-6)


class TestSplitBands:
    def test_reconstruction_identity(self, rng):
        clip = random_clip(rng)
        lf, hf = split_bands(clip, BlurSpec(sigma=2.0))
        recon = lf.frames.astype(np.float64) + hf.frames.astype(np.float64)
        assert np.abs(recon - clip.frames).max() <= 1e-7

    def test_constant_has_zero_hf(self):
        _, hf = split_bands(const_clip(0.3), BlurSpec(sigma=2.0))
        assert np.abs(hf.frames).max() <= 1e-6

    def test_blur_reduces_hf_energy(self, rng):
        spec = BlurSpec(sigma=2.0)
        clip = random_clip(rng)
        _, hf = split_bands(clip, spec)
        _, hf_of_blurred = split_bands(gaussian_blur(clip, spec), spec)
        assert np.linalg.norm(hf_of_blurred.frames) <= np.linalg.norm(hf.frames)
