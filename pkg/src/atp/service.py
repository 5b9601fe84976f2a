"""HTTP verification gate.

Generation itself is out of scope: the service answers whether a request
would be accepted and can protect images for registered owners. Keys never
leave the server; clients refer to them by key id.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.responses import JSONResponse, Response

from . import __version__
from .auth import as_message
from .bdct import pad_to_multiple
from .gate import DEFAULT_THRESHOLD, rejected, verify_image, verify_request
from .imageio import ImageDecodeError, decode_image, encode_image
from .masking import AtpKey, load_key
from .pipeline import protect

DEFAULT_MAX_BYTES = 16 * 1024 * 1024
CHUNK = 1 << 16


@dataclass(frozen=True)
class GateConfig:
    """Immutable service configuration.

    ``keys`` maps key id -> (AtpKey, expected message bits).
    """

    keys: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    listen: str = "127.0.0.1:8000"
    threshold: float = DEFAULT_THRESHOLD
    max_image_bytes: int = DEFAULT_MAX_BYTES

    @classmethod
    def build(cls, keys: dict, **kw) -> "GateConfig":
        store = {kid: (key, as_message(msg, key.L)) for kid, (key, msg) in keys.items()}
        return cls(MappingProxyType(store), **kw)

    @classmethod
    def load(cls, path) -> "GateConfig":
        """Read a JSON config; key file paths are relative to the config file.

        ``{"listen": "host:port", "threshold": 0.09375, "max_image_bytes": N,
        "keys": {"<id>": {"key_file": "owner.key", "message": "deadbeef"}}}``
        """
        path = Path(path)
        raw = json.loads(path.read_text())
        keys = {}
        for kid, entry in raw.get("keys", {}).items():
            kf = Path(entry["key_file"])
            if not kf.is_absolute():
                kf = path.parent / kf
            keys[kid] = (load_key(kf), entry["message"])
        kw = {k: raw[k] for k in ("listen", "threshold", "max_image_bytes") if k in raw}
        if os.environ.get("ATP_LISTEN"):
            kw["listen"] = os.environ["ATP_LISTEN"]
        return cls.build(keys, **kw)


def _read_capped(upload: UploadFile, cap: int) -> bytes:
    buf = bytearray()
    while True:
        chunk = upload.file.read(CHUNK)
        if not chunk:
            return bytes(buf)
        buf += chunk
        if len(buf) > cap:
            raise HTTPException(413, f"image exceeds {cap} bytes")


def _lookup(cfg: GateConfig, key_id: str):
    try:
        return cfg.keys[key_id]
    except KeyError:
        raise HTTPException(404, f"unknown key_id {key_id!r}") from None


def create_app(cfg: GateConfig) -> FastAPI:
    app = FastAPI(title="ATP verification gate", version=__version__)

    @app.get("/v1/healthz")
    def healthz():
        return {"status": "ok" if cfg.keys else "degraded", "version": __version__,
                "keys": len(cfg.keys)}

    @app.post("/v1/verify")
    def verify(key_id: str = Form(...), images: list[UploadFile] = File(...)):
        key, expected = _lookup(cfg, key_id)
        items = []
        for up in images:
            data = _read_capped(up, cfg.max_image_bytes)
            try:
                items.append(decode_image(data))
            except ImageDecodeError as exc:
                items.append(rejected(str(exc), cfg.threshold))
        verdict = verify_request(items, key, expected, cfg.threshold)
        body = json.dumps(verdict.to_json(), sort_keys=True, separators=(",", ":"))
        return Response(body, media_type="application/json")

    @app.post("/v1/protect")
    def protect_endpoint(
        key_id: str = Form(...),
        image: UploadFile = File(...),
        epsilon: float = Form(0.05),
        alpha: float = Form(0.005),
        steps: int = Form(50),
        seed: int = Form(0),
        pad: bool = Form(False),
    ):
        key, expected = _lookup(cfg, key_id)
        data = _read_capped(image, cfg.max_image_bytes)
        try:
            img = decode_image(data)
        except ImageDecodeError as exc:
            raise HTTPException(422, str(exc)) from None
        h, w = img.shape[:2]
        if (h % key.N or w % key.N) and not pad:
            raise HTTPException(422, f"image size {h}x{w} not divisible by {key.N}")
        try:
            res = protect(pad_to_multiple(img, key.N), key, expected, epsilon, alpha, steps, seed)
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from None
        png = encode_image(res.clamped()[:h, :w])
        check = verify_image(decode_image(png), key, expected, pad=pad)
        if check.bit_error != 0.0:
            raise HTTPException(422, f"self-check failed (bit error {check.bit_error})")
        return Response(png, media_type="image/png")

    @app.exception_handler(ValueError)
    def _value_error(request, exc):
        return JSONResponse({"detail": str(exc)}, status_code=422)

    return app
