"""The refinement projection: re-encode an edited video without codec damage.

Re-encoding a decoded video normally lands somewhere else in latent space
(reconstruction error plus posterior sampling noise). The projection instead
solves for the deterministic sample direction that reproduces the current
latent exactly, then reuses that direction with the refined video's
posterior. Identity refinement therefore costs exactly nothing.
"""

import numpy as np

from sceneswap import (
    BlurSpec,
    Conditioning,
    LaplacianInpainter,
    MaskClip,
    OracleDenoiser,
    RefineConfig,
    ToyCodec,
    denoise_with_rpa,
    make_schedule,
    project,
)
from sceneswap.fixtures import make_texture_fixture
from sceneswap.rng import derive_rng

codec = ToyCodec()
rng = np.random.default_rng(0)

# 1. the alignment property: project(x, decode(x)) == x
x0t = rng.standard_normal((2, 8, 12, 3))
projected = project(x0t, codec.decode(x0t), codec)
print("alignment deviation:", np.abs(projected - x0t).max())

# naive re-encoding of the same video misses by the reconstruction error
mu, _ = codec.encode(codec.decode(x0t))
print("naive re-encode deviation:", np.abs(mu - x0t).max())

# 2. inside the denoising loop: refined foreground, protected background
sched = make_schedule()
clip, mask = make_texture_fixture(seed=0)
target = codec.encode(clip)[0]
den = OracleDenoiser(target, sched)
cfg = RefineConfig(blur=BlurSpec(), fg_masks=mask, inpainter=LaplacianInpainter())
t_start = sched.inference_steps[sched.t_infer - 14]
from sceneswap import add_noise

x_start = add_noise(target, derive_rng(0, "demo").standard_normal(target.shape), t_start, sched)
out, trace = denoise_with_rpa(
    x_start, clip, Conditioning("demo"), 14, sched, den, codec, cfg, rpa_enabled=True
)
print("\nper-step diagnostics (t, roundtrip error RMS, background deviation RMS):")
for rec in trace.steps[:5]:
    print(f"  t={rec.t:4d}  recon {rec.recon_rms:.2e}  bg dev {rec.bg_dev_rms:.2e}")
print("  ...")
print("background cells never drift: max bg deviation over all steps =",
      max(r.bg_dev_rms for r in trace.steps))
