"""Cross-frame attention: every frame attends to the first frame's keys/values.

That single substitution is the whole style-consistency mechanism: frame i's
output stops depending on frame j's keys and values for every j except 1.
"""

import numpy as np

from sceneswap import AttentionBatch, attention, cross_frame_attention

rng = np.random.default_rng(0)

# plain scaled dot-product attention on tiny matrices
q = np.array([[1.0, 0.0]])
k = np.array([[1.0, 0.0], [0.0, 1.0]])
v = np.array([[1.0, 0.0], [0.0, 1.0]])
print("attention weights lean toward the matching key:")
print(attention(q, k, v))

# cross-frame: mutate later frames' K/V and observe nothing changes
qs = [rng.standard_normal((6, 3)) for _ in range(4)]
ks = [rng.standard_normal((6, 3)) for _ in range(4)]
vs = [rng.standard_normal((6, 3)) for _ in range(4)]
base = cross_frame_attention(AttentionBatch(qs=qs, ks=ks, vs=vs))
ks_mut = [ks[0]] + [rng.standard_normal((6, 3)) for _ in range(3)]
vs_mut = [vs[0]] + [rng.standard_normal((6, 3)) for _ in range(3)]
mutated = cross_frame_attention(AttentionBatch(qs=qs, ks=ks_mut, vs=vs_mut))
print("\nframe outputs after mutating K/V of frames 2..4:")
for i, (a, b) in enumerate(zip(base, mutated)):
    print(f"  frame {i}: identical = {np.array_equal(a, b)}")

# in the pipeline this is why per-frame relighting stops drifting in style:
# frame statistics are pulled toward frame 1's
from sceneswap import ToyRelighter, VideoClip, add_noise, make_schedule

sched = make_schedule()
rel = ToyRelighter(sched=sched)
frames = rng.random((4, 32, 48, 3)).astype(np.float32) * 0.4 + 0.3
frames[2] += 0.2  # one frame drifts brighter
clip = VideoClip(np.clip(frames, 0, 1))
t_start = sched.inference_steps[sched.t_infer - 8]
eps = rng.standard_normal(clip.shape)
noisy = VideoClip(add_noise(clip.frames.astype(np.float64), eps, t_start, sched).astype(np.float32))
on = rel.relight_text_guided_denoise(noisy, clip, "soft daylight", 8, cross_frame=True)
off = rel.relight_text_guided_denoise(noisy, clip, "soft daylight", 8, cross_frame=False)
spread = lambda c: float(np.ptp(c.frames.mean(axis=(1, 2, 3))))  # noqa: E731
print("\nper-frame mean spread: input %.4f | cross-frame on %.4f | off %.4f"
      % (spread(clip), spread(on), spread(off)))
print("(cross-frame attention pulls the outlier frame toward frame 1's statistics)")
