import numpy as np
import pytest

from sceneswap_bridge.wire import WireError, decode_tensor, encode_tensor


def test_roundtrip_bit_exact():
    rng = np.random.default_rng(0)
    for shape in ((1,), (2, 3), (1, 8, 8, 3), (2, 4, 4, 3)):
        arr = rng.standard_normal(shape).astype(np.float32)
        back = decode_tensor(encode_tensor(arr))
        assert np.array_equal(back, arr)
        assert back.dtype == np.float32


def test_little_endian_layout():
    arr = np.array([1.0], dtype=np.float32)
    doc = encode_tensor(arr)
    import base64

    assert base64.b64decode(doc["data_b64"]) == b"\x00\x00\x80?"


def test_malformed_payloads_rejected():
    with pytest.raises(WireError):
        decode_tensor({"shape": [2], "data_b64": "!!!notb64!!!"})
    with pytest.raises(WireError):
        decode_tensor({"shape": [3], "data_b64": "AAAA"})  # 3 bytes short
    with pytest.raises(WireError):
        decode_tensor({"data_b64": "AAAA"})
    with pytest.raises(WireError):
        decode_tensor({"shape": [-1], "data_b64": ""})
    with pytest.raises(WireError):
        decode_tensor("not a dict")
