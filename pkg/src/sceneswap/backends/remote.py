"""HTTP clients for the remote-backend wire protocol.

Requests are JSON documents ``{op, shape, dtype: "f32", data_b64, params}``
POSTed to one endpoint per operation; responses are ``{shape, data_b64}``
or ``{error}``. Tensor payloads are little-endian float32, row-major.
Operations with more than one tensor input carry the extras inside
``params`` as ``{shape, data_b64}`` objects:

* ``/encode``     clip -> stacked [2, f, h, w, c] (mu, sigma)
* ``/decode``     latent -> clip
* ``/eps``        x_t (+ params t, prompt, aux_b64) -> eps
* ``/relight_img``fg (+ params bg) -> clip
* ``/relight_txt``noisy (+ params fg, prompt, steps, cross_frame) -> clip
* ``/inpaint``    clip (+ params mask) -> clip
* ``/background`` clip (+ params first_frame, seed) -> clip
"""

from __future__ import annotations

import base64
import json
import urllib.error
import urllib.request

import numpy as np

from ..video import MaskClip, VideoClip
from .base import (
    BackendError,
    BackgroundProvider,
    Conditioning,
    Denoiser,
    Inpainter,
    LatentCodec,
    Relighter,
)

WIRE_DTYPE = "f32"


def tensor_to_wire(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr, dtype="<f4")
    return {
        "shape": list(arr.shape),
        "data_b64": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def tensor_from_wire(doc: dict) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in doc["shape"])
        raw = base64.b64decode(doc["data_b64"], validate=True)
    except (KeyError, ValueError, TypeError) as exc:
        raise BackendError(f"malformed tensor payload: {exc}") from exc
    expect = int(np.prod(shape)) * 4
    if len(raw) != expect:
        raise BackendError(f"tensor payload is {len(raw)} bytes, expected {expect}")
    return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float32)


class RemoteClient:
    """Shared POST/JSON transport for all remote backends."""

    def __init__(self, base_url: str, timeout: float = 60.0):
        if not base_url:
            raise BackendError("remote backend requires a base URL")
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def call(self, op: str, tensor: np.ndarray, params: dict | None = None) -> np.ndarray:
        body = {"op": op, "dtype": WIRE_DTYPE, "params": params or {}}
        body.update(tensor_to_wire(tensor))
        data = json.dumps(body).encode("utf-8")
        req = urllib.request.Request(
            f"{self.base_url}/{op}",
            data=data,
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                doc = json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            try:
                msg = json.loads(exc.read().decode("utf-8")).get("error", str(exc))
            except Exception:
                msg = str(exc)
            raise BackendError(f"{op}: server error: {msg}") from exc
        except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
            raise BackendError(f"{op}: transport failure: {exc}") from exc
        if "error" in doc:
            raise BackendError(f"{op}: {doc['error']}")
        return tensor_from_wire(doc)


class RemoteCodec(LatentCodec):
    def __init__(self, base_url: str, timeout: float = 60.0):
        self.client = RemoteClient(base_url, timeout)

    def latent_shape(self, clip_shape):
        f, h, w, c = clip_shape
        return (f, h // 2, w // 2, c)

    def encode(self, clip: VideoClip):
        out = self.client.call("encode", clip.frames, {"fps": clip.fps})
        if out.ndim != 5 or out.shape[0] != 2:
            raise BackendError(f"encode returned shape {out.shape}, expected [2,...]")
        return out[0].astype(np.float64), out[1].astype(np.float64)

    def decode(self, latent: np.ndarray, fps: float = 12.0) -> VideoClip:
        out = self.client.call("decode", np.asarray(latent), {"fps": fps})
        return VideoClip(out, fps=fps)


class RemoteDenoiser(Denoiser):
    def __init__(self, base_url: str, timeout: float = 60.0):
        self.client = RemoteClient(base_url, timeout)

    def eps(self, x_t: np.ndarray, cond: Conditioning, t: int) -> np.ndarray:
        params = {
            "t": int(t),
            "prompt": cond.prompt,
            "aux_b64": base64.b64encode(cond.aux).decode("ascii"),
        }
        out = self.client.call("eps", np.asarray(x_t), params)
        if out.shape != tuple(np.asarray(x_t).shape):
            raise BackendError(f"eps returned shape {out.shape}, expected {np.asarray(x_t).shape}")
        return out.astype(np.float64)


class RemoteRelighter(Relighter):
    def __init__(self, base_url: str, timeout: float = 60.0):
        self.client = RemoteClient(base_url, timeout)

    def relight_image_guided(self, fg: VideoClip, bg: VideoClip) -> VideoClip:
        out = self.client.call("relight_img", fg.frames, {"bg": tensor_to_wire(bg.frames)})
        return VideoClip(out, fps=fg.fps)

    def relight_text_guided_denoise(self, noisy, fg, prompt, steps, cross_frame=True):
        params = {
            "fg": tensor_to_wire(fg.frames),
            "prompt": prompt,
            "steps": int(steps),
            "cross_frame": bool(cross_frame),
        }
        out = self.client.call("relight_txt", noisy.frames, params)
        return VideoClip(out, fps=noisy.fps)


class RemoteInpainter(Inpainter):
    def __init__(self, base_url: str, timeout: float = 60.0):
        self.client = RemoteClient(base_url, timeout)

    def fill(self, clip: VideoClip, mask: MaskClip) -> VideoClip:
        out = self.client.call("inpaint", clip.frames, {"mask": tensor_to_wire(mask.values)})
        return VideoClip(out, fps=clip.fps)


class RemoteBackgroundProvider(BackgroundProvider):
    def __init__(self, base_url: str, timeout: float = 60.0):
        self.client = RemoteClient(base_url, timeout)

    def generate(self, input_clip: VideoClip, first_frame: np.ndarray, seed: int) -> VideoClip:
        params = {"first_frame": tensor_to_wire(np.asarray(first_frame)), "seed": int(seed)}
        out = self.client.call("background", input_clip.frames, params)
        return VideoClip(out, fps=input_clip.fps)
