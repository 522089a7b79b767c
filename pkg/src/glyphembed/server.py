"""HTTP service over an immutable font-embedding index.

Every non-2xx response carries the ApiError JSON body {status, code, message};
no stack traces leak. Responses are pure functions of (index, request), so the
service is safe under concurrent load and repeated requests are byte-identical.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image
from starlette.exceptions import HTTPException as StarletteHTTPException

from .errors import GlyphEmbedError, ModelUnavailable
from .fontindex import (
    INDEX_VERSION,
    FontEmbeddingIndex,
    glyph_asset_path,
    preview_asset_path,
    project_2d,
    query,
)

MAX_UPLOAD_BYTES = 1 << 20  # 1 MiB
MAX_K = 50


class ApiException(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"status": status, "code": code, "message": message}
    )


def _preview_url(font_id: str) -> str:
    return f"/api/preview/{font_id}.png"


def _decode_upload(data: bytes, size: int) -> np.ndarray:
    """Grayscale-convert and rescale any uploaded image to the index glyph size."""
    try:
        img = Image.open(io.BytesIO(data)).convert("L")
    except Exception as exc:
        raise ApiException(400, "bad_request", f"cannot decode image: {exc}") from exc
    if img.size != (size, size):
        img = img.resize((size, size), Image.Resampling.BOX)
    return np.asarray(img, dtype=np.float64) / 255.0


def create_app(
    index: FontEmbeddingIndex,
    model=None,
    assets_dir=None,
    static_dir=None,
    default_k: int = 10,
) -> FastAPI:
    app = FastAPI(title="glyphembed", docs_url=None, redoc_url=None, openapi_url=None)
    assets_dir = Path(assets_dir) if assets_dir is not None else None
    # The map is a pure function of the index; compute once at startup.
    map_payload = project_2d(index).to_dict() if index.n_fonts >= 3 else None

    @app.exception_handler(ApiException)
    async def _api_exc(_req, exc: ApiException):
        return _error_response(exc.status, exc.code, exc.message)

    @app.exception_handler(RequestValidationError)
    async def _validation_exc(_req, exc: RequestValidationError):
        return _error_response(400, "bad_request", str(exc.errors()[:1]))

    @app.exception_handler(StarletteHTTPException)
    async def _http_exc(_req, exc: StarletteHTTPException):
        code = "not_found" if exc.status_code == 404 else "error"
        return _error_response(exc.status_code, code, str(exc.detail))

    @app.exception_handler(Exception)
    async def _any_exc(_req, exc: Exception):
        return _error_response(500, "internal", exc.__class__.__name__)

    @app.get("/api/health")
    def health():
        return {"status": "ok", "index_version": INDEX_VERSION}

    @app.get("/api/fonts")
    def fonts():
        return {
            "fonts": [
                {"id": fid, "preview_url": _preview_url(fid)} for fid in index.font_ids
            ]
        }

    @app.get("/api/charset")
    def charset():
        return {"id": index.charset.id, "chars": index.charset.chars()}

    @app.get("/api/map")
    def latent_map():
        if map_payload is None:
            raise ApiException(400, "bad_request", "index too small for a 2D map (< 3 fonts)")
        return map_payload

    def _asset_png(path: Path) -> FileResponse:
        if assets_dir is None or not path.is_file():
            raise ApiException(404, "not_found", "no such asset")
        return FileResponse(path, media_type="image/png")

    @app.get("/api/glyph/{font_id}/{cp_hex}.png")
    def glyph_png(font_id: str, cp_hex: str):
        if font_id not in index.font_ids:
            raise ApiException(404, "not_found", f"unknown font {font_id!r}")
        try:
            cp = int(cp_hex, 16)
        except ValueError:
            raise ApiException(400, "bad_request", f"bad codepoint {cp_hex!r}")
        if cp not in index.charset:
            raise ApiException(404, "not_found", f"U+{cp:04X} not in index charset")
        return _asset_png(glyph_asset_path(assets_dir, font_id, cp))

    @app.get("/api/preview/{font_id}.png")
    def preview_png(font_id: str):
        if font_id not in index.font_ids:
            raise ApiException(404, "not_found", f"unknown font {font_id!r}")
        return _asset_png(preview_asset_path(assets_dir, font_id))

    def _parse_k_mode(request: Request):
        params = request.query_params
        try:
            k = int(params.get("k", default_k))
        except ValueError:
            raise ApiException(400, "bad_request", f"k must be an integer, got {params.get('k')!r}")
        if not 1 <= k <= MAX_K:
            raise ApiException(400, "bad_request", f"k must be in [1, {MAX_K}], got {k}")
        mode = params.get("mode", "per_glyph")
        if mode not in ("per_glyph", "aggregate"):
            raise ApiException(400, "bad_request", f"mode must be per_glyph or aggregate, got {mode!r}")
        return k, mode

    async def _probe_from_request(request: Request):
        ctype = request.headers.get("content-type", "")
        body = await request.body()
        if len(body) > MAX_UPLOAD_BYTES:
            raise ApiException(413, "payload_too_large", f"request exceeds {MAX_UPLOAD_BYTES} bytes")
        if ctype.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("image")
            if upload is None:
                raise ApiException(400, "bad_request", "multipart field 'image' is required")
            data = await upload.read()
            if len(data) > MAX_UPLOAD_BYTES:
                raise ApiException(413, "payload_too_large", f"image exceeds {MAX_UPLOAD_BYTES} bytes")
            if model is None:
                raise ApiException(503, "model_unavailable", "no encoder model loaded for image probes")
            return _decode_upload(data, index.size)
        try:
            payload = json.loads(body)
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise ApiException(400, "bad_request", "body must be multipart or JSON {font_id, char}")
        if not isinstance(payload, dict) or "font_id" not in payload or "char" not in payload:
            raise ApiException(400, "bad_request", "JSON body needs font_id and char")
        font_id, char = payload["font_id"], payload["char"]
        if font_id not in index.font_ids:
            raise ApiException(404, "not_found", f"unknown font {font_id!r}")
        if not isinstance(char, str) or len(char) != 1 or ord(char) not in index.charset:
            raise ApiException(404, "not_found", f"char {char!r} not in index charset")
        f = index.font_index(font_id)
        c = index.charset.index_of(ord(char))
        return index.glyph_vectors[f, c]

    @app.post("/api/retrieve")
    async def retrieve(request: Request):
        k, mode = _parse_k_mode(request)
        probe = await _probe_from_request(request)
        try:
            results = query(index, probe, k=k, mode=mode, model=model)
        except ModelUnavailable as exc:
            raise ApiException(503, "model_unavailable", str(exc))
        except GlyphEmbedError as exc:
            raise ApiException(400, "bad_request", str(exc))
        return {
            "results": [
                dict(r.to_dict(), preview_url=_preview_url(r.font_id)) for r in results
            ]
        }

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app


def serve(index, model=None, assets_dir=None, static_dir=None, port: int = 8080, default_k: int = 10):
    import uvicorn

    app = create_app(index, model, assets_dir, static_dir, default_k)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
