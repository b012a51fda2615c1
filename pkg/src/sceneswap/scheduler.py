"""Noise schedule, DDPM forward noising, and deterministic DDIM stepping.

Timesteps run over 0..t_train inclusive. The cumulative signal level
``alpha_bar`` is 1 exactly at t=0 (empty product) and decreases monotonically
with t. Inference visits a strictly decreasing subsequence of training
timesteps; one denoising step moves the state from timestep t to the next
smaller timestep (0 after the final step).

All arithmetic here is done in float64; latents keep whatever dtype numpy
promotion gives them (float64 for float64 inputs).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ALPHA_BAR_FLOOR = 1e-8

DEFAULT_T_TRAIN = 1000
DEFAULT_BETA_START = 0.00085
DEFAULT_BETA_END = 0.012


class DegenerateTimestepError(ValueError):
    """alpha_bar at the requested timestep is too small to divide by."""


@dataclass(frozen=True)
class NoiseSchedule:
    """Immutable alpha_bar table plus the inference timestep subsequence.

    ``alpha_bar`` has t_train + 1 entries; ``alpha_bar[0] == 1.0`` exactly.
    ``inference_steps`` is strictly decreasing and never contains 0.
    """

    alpha_bar: np.ndarray
    inference_steps: tuple[int, ...]
    t_train: int = field(init=False)

    def __post_init__(self):
        ab = np.ascontiguousarray(self.alpha_bar, dtype=np.float64)
        ab.setflags(write=False)
        object.__setattr__(self, "alpha_bar", ab)
        object.__setattr__(self, "inference_steps", tuple(int(t) for t in self.inference_steps))
        object.__setattr__(self, "t_train", len(ab) - 1)

    @property
    def t_infer(self) -> int:
        return len(self.inference_steps)

    def alpha_bar_at(self, t: int) -> float:
        if not 0 <= t <= self.t_train:
            raise ValueError(f"timestep {t} outside [0, {self.t_train}]")
        return float(self.alpha_bar[t])

    def step_after(self, index: int) -> int:
        """Training timestep reached after the inference step at ``index``."""
        if index + 1 < len(self.inference_steps):
            return self.inference_steps[index + 1]
        return 0


def make_schedule(
    t_train: int = DEFAULT_T_TRAIN,
    t_infer: int = 20,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> NoiseSchedule:
    """Scaled-linear beta schedule: betas linearly spaced in the sqrt domain.

    ``alpha_bar[t]`` is the product of (1 - beta_s) for s = 1..t. Inference
    timesteps are round(t_train * k / t_infer) for k = t_infer..1, descending.
    """
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ValueError(f"invalid beta range ({beta_start}, {beta_end})")
    if not (1 <= t_infer <= t_train):
        raise ValueError(f"need 1 <= t_infer <= t_train, got {t_infer}, {t_train}")
    betas = np.linspace(beta_start**0.5, beta_end**0.5, t_train, dtype=np.float64) ** 2
    alpha_bar = np.empty(t_train + 1, dtype=np.float64)
    alpha_bar[0] = 1.0
    alpha_bar[1:] = np.cumprod(1.0 - betas)
    steps = tuple(int(round(t_train * k / t_infer)) for k in range(t_infer, 0, -1))
    return NoiseSchedule(alpha_bar=alpha_bar, inference_steps=steps)


def _check_shapes(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def add_noise(x0: np.ndarray, eps: np.ndarray, t: int, sched: NoiseSchedule) -> np.ndarray:
    """DDPM forward process: sqrt(ab_t) * x0 + sqrt(1 - ab_t) * eps."""
    x0 = np.asarray(x0)
    eps = np.asarray(eps)
    _check_shapes(x0, eps)
    ab = sched.alpha_bar_at(t)
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def pred_x0(x_t: np.ndarray, eps_pred: np.ndarray, t: int, sched: NoiseSchedule) -> np.ndarray:
    """Denoised-latent prediction: (x_t - sqrt(1 - ab_t) * eps) / sqrt(ab_t)."""
    x_t = np.asarray(x_t)
    eps_pred = np.asarray(eps_pred)
    _check_shapes(x_t, eps_pred)
    ab = sched.alpha_bar_at(t)
    if ab < ALPHA_BAR_FLOOR:
        raise DegenerateTimestepError(f"alpha_bar({t}) = {ab:.3e} below floor")
    return (x_t - np.sqrt(1.0 - ab) * eps_pred) / np.sqrt(ab)


def ddim_step(
    x0_hat: np.ndarray, eps_pred: np.ndarray, t_prev: int, sched: NoiseSchedule
) -> np.ndarray:
    """Deterministic DDIM update toward the next (smaller) timestep.

    x_{t_prev} = sqrt(ab_{t_prev}) * x0_hat + sqrt(1 - ab_{t_prev}) * eps_pred
    """
    x0_hat = np.asarray(x0_hat)
    eps_pred = np.asarray(eps_pred)
    _check_shapes(x0_hat, eps_pred)
    ab = sched.alpha_bar_at(t_prev)
    return np.sqrt(ab) * x0_hat + np.sqrt(1.0 - ab) * eps_pred
