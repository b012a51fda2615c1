"""Model registry for the bridge endpoints.

Each endpoint binds one named model. The built-in ``stub-*`` models are
shape-correct, deterministic loopback implementations used for conformance
testing and for exercising the engine's remote mode without any weights.
Identifiers that are not stubs are treated as pretrained-model ids; loading
them requires the corresponding integration to be installed, which this
package does not ship.
"""

from __future__ import annotations

import numpy as np

from .wire import WireError, decode_tensor

ENDPOINTS = (
    "encode",
    "decode",
    "eps",
    "relight_img",
    "relight_txt",
    "inpaint",
    "background",
)


class ModelError(RuntimeError):
    """A bound model failed while serving a request (maps to HTTP 500)."""


def _stub_encode(tensor: np.ndarray, params: dict) -> np.ndarray:
    if tensor.ndim != 4:
        raise ModelError(f"encode expects (F,H,W,C), got {tensor.shape}")
    f, h, w, c = tensor.shape
    if h % 2 or w % 2:
        raise ModelError(f"stub codec needs even spatial dims, got {h}x{w}")
    pooled = tensor.reshape(f, h // 2, 2, w // 2, 2, c).mean(axis=(2, 4))
    sigma = np.full_like(pooled, 1e-3)
    return np.stack([pooled, sigma]).astype(np.float32)


def _stub_decode(tensor: np.ndarray, params: dict) -> np.ndarray:
    if tensor.ndim != 4:
        raise ModelError(f"decode expects (f,h,w,c), got {tensor.shape}")
    return np.repeat(np.repeat(tensor, 2, axis=1), 2, axis=2)


def _stub_zero(tensor: np.ndarray, params: dict) -> np.ndarray:
    return np.zeros_like(tensor)


def _stub_echo(tensor: np.ndarray, params: dict) -> np.ndarray:
    return tensor


def _stub_repeat_first_frame(tensor: np.ndarray, params: dict) -> np.ndarray:
    try:
        first = decode_tensor(params["first_frame"])
    except KeyError as exc:
        raise ModelError("background op requires params.first_frame") from exc
    except WireError as exc:
        raise ModelError(str(exc)) from exc
    return np.repeat(first[None], tensor.shape[0], axis=0)


_STUBS = {
    "stub-pool-codec": {"encode": _stub_encode, "decode": _stub_decode},
    "stub-zero": {"eps": _stub_zero},
    "stub-echo": {
        "eps": _stub_echo,
        "relight_img": _stub_echo,
        "relight_txt": _stub_echo,
        "inpaint": _stub_echo,
    },
    "stub-repeat": {"background": _stub_repeat_first_frame},
}

DEFAULT_MODELS = {
    "encode": "stub-pool-codec",
    "decode": "stub-pool-codec",
    "eps": "stub-zero",
    "relight_img": "stub-echo",
    "relight_txt": "stub-echo",
    "inpaint": "stub-echo",
    "background": "stub-repeat",
}


def resolve(endpoint: str, model_id: str):
    """Return the callable serving ``endpoint`` under ``model_id``."""
    if endpoint not in ENDPOINTS:
        raise ValueError(f"unknown endpoint {endpoint!r}")
    stub = _STUBS.get(model_id)
    if stub is not None:
        fn = stub.get(endpoint)
        if fn is None:
            raise ValueError(f"model {model_id!r} does not serve {endpoint!r}")
        return fn
    raise ValueError(
        f"model {model_id!r} for {endpoint!r} is not available: pretrained-model "
        f"integrations are not bundled with this bridge"
    )
