"""Read-only inference HTTP service: one checkpoint, one attribute.

JSON bodies with base64 PNG payloads keep the browser client free of
multipart handling. Malformed requests map to 400 (including schema
validation), oversized images to 413, and requests before a model is
loaded to 503.
"""

from __future__ import annotations

import base64
import binascii
import io
import time
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from PIL import Image, UnidentifiedImageError
from pydantic import BaseModel

from .editing import ModelBundle, edit_array, mask_from_array

DEFAULT_PORT = 8089
DEFAULT_MAX_EDGE = 2048


class EditRequest(BaseModel):
    image: str  # base64 PNG
    mask: Optional[str] = None  # base64 PNG; absent -> alpha channel or full mask
    attribute: float


class ModelInfo(BaseModel):
    attribute_name: str
    checkpoint_id: str


class EditResponse(BaseModel):
    image: str
    model_info: ModelInfo
    latency_ms: float


class _ClientError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def _decode_png(field: str, payload: str) -> np.ndarray:
    try:
        raw = base64.b64decode(payload, validate=True)
        with Image.open(io.BytesIO(raw)) as img:
            return np.asarray(img.convert("RGBA"), dtype=np.uint8)
    except (binascii.Error, UnidentifiedImageError, OSError, ValueError) as exc:
        raise _ClientError(400, f"field '{field}' is not a base64 PNG: {exc}") from exc


def _encode_png(arr: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def create_app(checkpoint_path: Optional[Path] = None, max_edge: int = DEFAULT_MAX_EDGE) -> FastAPI:
    app = FastAPI(title="attriforge inference service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.bundle = ModelBundle(checkpoint_path) if checkpoint_path else None
    app.state.max_edge = max_edge

    @app.exception_handler(RequestValidationError)
    async def _validation_to_400(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.exception_handler(_ClientError)
    async def _client_error(request: Request, exc: _ClientError):
        return JSONResponse(status_code=exc.status, content={"detail": exc.message})

    @app.get("/health")
    def health():
        bundle: Optional[ModelBundle] = app.state.bundle
        if bundle is None:
            return JSONResponse(status_code=503, content={"status": "unloaded"})
        return {
            "status": "ok",
            "checkpoint_id": bundle.checkpoint_id,
            "attribute_name": bundle.attribute_name,
        }

    @app.post("/edit", response_model=EditResponse)
    def edit(request: EditRequest):
        start = time.perf_counter()
        bundle: Optional[ModelBundle] = app.state.bundle
        if bundle is None:
            raise _ClientError(503, "no model loaded")
        if not 0.0 <= request.attribute <= 1.0:
            raise _ClientError(400, f"attribute {request.attribute} outside [0,1]")
        rgba = _decode_png("image", request.image)
        if max(rgba.shape[:2]) > app.state.max_edge:
            raise _ClientError(
                413, f"image edge {max(rgba.shape[:2])} exceeds the limit of {app.state.max_edge}"
            )
        if request.mask is not None:
            mask_arr = _decode_png("mask", request.mask)
            if mask_arr.shape[:2] != rgba.shape[:2]:
                raise _ClientError(400, "mask dimensions differ from the image")
            mask = mask_from_array(mask_arr)
        else:
            mask = mask_from_array(rgba)

        edited_rgb = edit_array(bundle.generator, rgba[..., :3], mask, request.attribute)
        out = np.dstack([edited_rgb, rgba[..., 3]])  # keep the original alpha plane
        return EditResponse(
            image=_encode_png(out),
            model_info=ModelInfo(
                attribute_name=bundle.attribute_name, checkpoint_id=bundle.checkpoint_id
            ),
            latency_ms=(time.perf_counter() - start) * 1000.0,
        )

    return app


def run_server(checkpoint_path: Path, host: str = "127.0.0.1", port: int = DEFAULT_PORT) -> None:
    import uvicorn

    uvicorn.run(create_app(checkpoint_path), host=host, port=port)
