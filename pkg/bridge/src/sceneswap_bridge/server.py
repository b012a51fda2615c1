"""HTTP server exposing bound models behind the remote-backend wire protocol.

Stateless per request; the single-threaded stdlib server serializes access
to the models, so concurrent clients simply queue. Status codes: 400 for a
malformed tensor or request body, 404 for an unknown endpoint, 413 for an
oversize payload, 500 for a model failure (message included).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, HTTPServer

from .models import DEFAULT_MODELS, ENDPOINTS, ModelError, resolve
from .wire import WireError, decode_tensor, encode_tensor

DEFAULT_MAX_TENSOR_BYTES = 64 * 1024 * 1024


@dataclass
class BridgeConfig:
    host: str = "127.0.0.1"
    port: int = 8490
    models: dict = field(default_factory=lambda: dict(DEFAULT_MODELS))
    device: str = "cpu"
    max_tensor_bytes: int = DEFAULT_MAX_TENSOR_BYTES

    def __post_init__(self):
        unknown = set(self.models) - set(ENDPOINTS)
        if unknown:
            raise ValueError(f"unknown endpoints in model map: {sorted(unknown)}")
        # resolve every enabled endpoint now: fail at startup, not per request
        self.handlers = {ep: resolve(ep, mid) for ep, mid in self.models.items()}


class BridgeHandler(BaseHTTPRequestHandler):
    config: BridgeConfig  # injected by make_server

    def log_message(self, *args):
        pass

    def _reply(self, doc: dict, status: int = 200) -> None:
        body = json.dumps(doc).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        endpoint = self.path.strip("/")
        handler = self.config.handlers.get(endpoint)
        if handler is None:
            self._reply({"error": f"unknown endpoint {endpoint!r}"}, status=404)
            return
        length = int(self.headers.get("Content-Length", 0))
        if length > self.config.max_tensor_bytes:
            self._reply({"error": f"request body {length} bytes exceeds limit"}, status=413)
            return
        try:
            doc = json.loads(self.rfile.read(length).decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            self._reply({"error": f"invalid JSON body: {exc}"}, status=400)
            return
        try:
            tensor = decode_tensor(doc)
        except WireError as exc:
            self._reply({"error": str(exc)}, status=400)
            return
        if tensor.nbytes > self.config.max_tensor_bytes:
            self._reply({"error": f"tensor {tensor.nbytes} bytes exceeds limit"}, status=413)
            return
        params = doc.get("params") or {}
        try:
            out = handler(tensor, params)
        except ModelError as exc:
            self._reply({"error": str(exc)}, status=500)
            return
        except Exception as exc:  # pragma: no cover - defensive
            self._reply({"error": f"model failure: {exc}"}, status=500)
            return
        self._reply(encode_tensor(out))


def make_server(cfg: BridgeConfig) -> HTTPServer:
    handler = type("BoundBridgeHandler", (BridgeHandler,), {"config": cfg})
    return HTTPServer((cfg.host, cfg.port), handler)


def serve(cfg: BridgeConfig) -> None:
    server = make_server(cfg)
    print(f"sceneswap-bridge listening on {cfg.host}:{server.server_port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sceneswap-bridge",
        description="Model sidecar speaking the engine's remote-backend wire protocol",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8490)
    parser.add_argument("--models", default=None,
                        help="JSON file mapping endpoints to model ids (default: stubs)")
    parser.add_argument("--max-tensor-bytes", type=int, default=DEFAULT_MAX_TENSOR_BYTES)
    args = parser.parse_args(argv)
    models = dict(DEFAULT_MODELS)
    if args.models:
        models.update(json.loads(open(args.models).read()))
    try:
        cfg = BridgeConfig(
            host=args.host, port=args.port, models=models,
            max_tensor_bytes=args.max_tensor_bytes,
        )
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    serve(cfg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
