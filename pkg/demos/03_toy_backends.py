"""The analytic backends: codec, inpainter, background provider, relighter.

Each one is a small, fully deterministic stand-in with the same contract a
pretrained model would satisfy, so the whole pipeline runs and is provable
on a laptop.
"""

import numpy as np

from sceneswap import (
    LaplacianInpainter,
    MaskClip,
    PanningBackgroundProvider,
    ToyCodec,
    ToyRelighter,
    VideoClip,
)
from sceneswap.fixtures import make_pan_fixture, make_texture_fixture

# --- latent codec: 2x2 mean pool down, bilinear up; lossy on texture
codec = ToyCodec()
clip, mask = make_texture_fixture(seed=0, frames=2)
mu, sigma = codec.encode(clip)
print("clip", clip.shape, "-> latent", mu.shape)
print("sigma range: [%.2e, %.2e] (floor 1e-4 + local contrast)" % (sigma.min(), sigma.max()))
roundtrip = codec.decode(mu)
print("roundtrip error on texture: %.4f (lossy: this is what the projection fixes)"
      % np.abs(roundtrip.frames - clip.frames).max())

flat = VideoClip(np.full((1, 8, 8, 3), 0.3, dtype=np.float32))
print("roundtrip error on a constant:",
      np.abs(codec.decode(codec.encode(flat)[0]).frames - flat.frames).max())

# --- harmonic inpainter: masked pixels relax to their neighbors
inp = LaplacianInpainter()
frame = np.full((1, 16, 16, 3), 0.25, dtype=np.float32)
frame[0, :, 8:] = 0.75  # two-tone background
hole = np.zeros((1, 16, 16), dtype=np.float32)
hole[0, 6:10, 6:10] = 1.0
filled = inp.fill(VideoClip(frame), MaskClip(hole))
print("\ninpainted hole values span [%.3f, %.3f] (smooth bridge between 0.25 and 0.75)"
      % (filled.frames[0, 6:10, 6:10].min(), filled.frames[0, 6:10, 6:10].max()))

# --- background provider: estimates the camera pan, then pans the new scene
pan, _, true_offsets = make_pan_fixture(seed=0)
prov = PanningBackgroundProvider()
print("\ntrue offsets:     ", true_offsets)
print("estimated offsets:", prov.estimate_offsets(pan))

# --- image-guided relighter: matches low-band moments, keeps texture
rel = ToyRelighter()
dark = VideoClip(np.clip(clip.frames * 0.4, 0, 1))
relit = rel.relight_image_guided(clip, dark)
print("\nfg mean %.3f, dark-bg mean %.3f -> relit mean %.3f"
      % (clip.frames.mean(), dark.frames.mean(), relit.frames.mean()))
