"""The desk-scale quality metrics and what moves them.

tem_con measures frame-to-frame feature similarity, bg_psnr measures how
intact a region outside the mask is, fg_hf_corr measures how much of the
input's texture survived into the output's foreground.
"""

import numpy as np

from sceneswap import BlurSpec, MaskClip, VideoClip, bg_psnr, fg_hf_corr, gaussian_blur, tem_con
from sceneswap.fixtures import make_pan_fixture, make_texture_fixture

clip, mask = make_texture_fixture(seed=0)
pan, pan_mask, _ = make_pan_fixture(seed=0)

print("tem_con of a static clip              :", round(tem_con(clip), 6))
print("tem_con of a panning clip             :", round(tem_con(pan), 6))
jitter = clip.frames + np.random.default_rng(0).normal(0, 0.03, clip.shape).astype(np.float32)
print("tem_con with per-frame jitter         :", round(tem_con(VideoClip(jitter)), 6))

print("\nbg_psnr of identical clips            :", bg_psnr(clip, clip, mask), "dB (capped)")
offset = VideoClip(clip.frames + np.float32(0.1))
print("bg_psnr with a uniform 0.1 offset     :", round(bg_psnr(offset, clip, mask), 2), "dB")

print("\nfg_hf_corr out == input               :", round(fg_hf_corr(clip, clip, mask), 6))
blurred = gaussian_blur(clip, BlurSpec(sigma=3.0))
print("fg_hf_corr after stripping the texture:", round(fg_hf_corr(blurred, clip, mask), 6))
shifted = VideoClip(clip.frames + np.float32(0.2))
print("fg_hf_corr after a DC light shift     :", round(fg_hf_corr(shifted, clip, mask), 6),
      "(texture metrics ignore illumination changes)")
