"""Low/high frequency band splitting, the workhorse of foreground refinement.

The high band carries edges and texture; the low band carries colors and
illumination. Their sum reconstructs the frame exactly, which is what lets
the pipeline swap one band without touching the other.
"""

from pathlib import Path

import numpy as np

from sceneswap import BlurSpec, VideoClip, save_clip, split_bands
from sceneswap.fixtures import make_texture_fixture

out_dir = Path(__file__).parent / "out" / "bands"

clip, mask = make_texture_fixture(seed=0, frames=1)
spec = BlurSpec(sigma=3.0)
lf, hf = split_bands(clip, spec)

recon = lf.frames.astype(np.float64) + hf.frames.astype(np.float64)
print("kernel length:", 2 * spec.radius + 1, " weights sum:", spec.kernel().sum())
print("reconstruction error:", np.abs(recon - clip.frames).max())
print("LF range: [%.3f, %.3f]" % (lf.frames.min(), lf.frames.max()))
print("HF range: [%.3f, %.3f] (zero-centered texture)" % (hf.frames.min(), hf.frames.max()))

# save viewable previews; HF is shifted to mid-grey
save_clip(clip, out_dir / "input", format="raster8")
save_clip(lf, out_dir / "low", format="raster8")
save_clip(VideoClip(hf.frames + np.float32(0.5)), out_dir / "high", format="raster8")
print("previews written under", out_dir)

# a constant image has no high band at all
flat = VideoClip(np.full((1, 16, 16, 3), 0.42, dtype=np.float32))
_, hf_flat = split_bands(flat, spec)
print("HF of a constant image:", np.abs(hf_flat.frames).max())
