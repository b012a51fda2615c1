"""Tensor wire format: little-endian float32, row-major, base64 in JSON.

Requests are ``{op, shape, dtype: "f32", data_b64, params}``; responses are
``{shape, data_b64}`` or ``{error}``. Side tensors travel inside ``params``
as nested ``{shape, data_b64}`` objects.
"""

from __future__ import annotations

import base64
import binascii
import math

import numpy as np

WIRE_DTYPE = "f32"


class WireError(ValueError):
    """Malformed tensor payload (maps to HTTP 400)."""


def encode_tensor(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr, dtype="<f4")
    return {
        "shape": list(arr.shape),
        "data_b64": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def decode_tensor(doc: dict) -> np.ndarray:
    if not isinstance(doc, dict):
        raise WireError("tensor payload must be an object")
    try:
        shape = tuple(int(s) for s in doc["shape"])
        raw = base64.b64decode(doc["data_b64"], validate=True)
    except KeyError as exc:
        raise WireError(f"tensor payload missing {exc}") from exc
    except (binascii.Error, ValueError, TypeError) as exc:
        raise WireError(f"bad base64 tensor data: {exc}") from exc
    if any(s < 0 for s in shape):
        raise WireError(f"negative dimension in shape {shape}")
    expect = math.prod(shape) * 4
    if len(raw) != expect:
        raise WireError(f"payload is {len(raw)} bytes, shape {shape} needs {expect}")
    return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float32)
