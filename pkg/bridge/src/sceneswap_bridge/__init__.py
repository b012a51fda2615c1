from .models import DEFAULT_MODELS, ENDPOINTS, ModelError, resolve
from .server import BridgeConfig, make_server, serve
from .wire import WireError, decode_tensor, encode_tensor

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MODELS",
    "ENDPOINTS",
    "ModelError",
    "resolve",
    "BridgeConfig",
    "make_server",
    "serve",
    "WireError",
    "decode_tensor",
    "encode_tensor",
]
