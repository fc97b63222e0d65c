"""HTTP service exposing the recoloring pipeline over a directory store.

Designs are uploaded as multipart bundles and addressed by content hash;
every raster the pipeline produces is stored once and served back through
``/api/assets/{ref}``. Requests are stateless apart from the immutable
design/asset store, so concurrent recolors of one design match serial runs.
"""

import base64
import hashlib
import io
import json
import shutil
import tempfile
from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, UploadFile
from fastapi.responses import JSONResponse, Response
from PIL import Image

from .bundle import load_bundle
from .errors import RecolorError
from .palette import DEFAULT_PALETTE_SIZE
from .recolor import PhotoContextCache, recolor_instruction
from .sourcecolor import DEFAULT_CONFIDENCE_THRESHOLD

API_PREFIX = "/api"


def _png_bytes(arr, mode=None):
    img = Image.fromarray(np.asarray(arr))
    if mode:
        img = img.convert(mode)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def _gray_png(mask01):
    return _png_bytes(np.clip(np.round(np.asarray(mask01) * 255.0), 0, 255).astype(np.uint8))


class DesignStore:
    """Directory-backed store for bundles, assets and result records."""

    def __init__(self, root):
        self.root = Path(root)
        (self.root / "designs").mkdir(parents=True, exist_ok=True)
        (self.root / "assets").mkdir(parents=True, exist_ok=True)
        (self.root / "results").mkdir(parents=True, exist_ok=True)
        self._bundles = {}

    def put_design(self, design_bytes, photo_bytes, ann_bytes):
        digest = hashlib.sha256(design_bytes + photo_bytes + ann_bytes).hexdigest()[:16]
        dest = self.root / "designs" / digest
        if dest.exists():
            existing = b"".join(
                (dest / name).read_bytes()
                for name in ("design.png", "photo.png", "annotations.json")
            )
            if existing != design_bytes + photo_bytes + ann_bytes:
                raise FileExistsError(digest)
            return digest
        tmp = Path(tempfile.mkdtemp(dir=self.root))
        try:
            (tmp / "design.png").write_bytes(design_bytes)
            (tmp / "photo.png").write_bytes(photo_bytes)
            (tmp / "annotations.json").write_bytes(ann_bytes)
            load_bundle(tmp)  # validate before committing
            tmp.rename(dest)
        except Exception:
            shutil.rmtree(tmp, ignore_errors=True)
            raise
        return digest

    def bundle(self, design_id):
        path = self.root / "designs" / design_id
        if not path.exists():
            raise KeyError(design_id)
        if design_id not in self._bundles:
            self._bundles[design_id] = load_bundle(path)
        return self._bundles[design_id]

    def put_asset(self, png_bytes):
        ref = hashlib.sha256(png_bytes).hexdigest()[:16]
        path = self.root / "assets" / f"{ref}.png"
        if not path.exists():
            path.write_bytes(png_bytes)
        return ref

    def asset(self, ref):
        path = self.root / "assets" / f"{ref}.png"
        if not path.exists():
            raise KeyError(ref)
        return path.read_bytes()

    def put_result(self, ref, record):
        path = self.root / "results" / f"{ref}.json"
        path.write_text(json.dumps(record, sort_keys=True), encoding="utf-8")

    def result(self, ref):
        path = self.root / "results" / f"{ref}.json"
        if not path.exists():
            raise KeyError(ref)
        return json.loads(path.read_text(encoding="utf-8"))


def _error_response(exc):
    body = {"stage": exc.stage, "code": exc.code, "message": str(exc)}
    if exc.suggestion:
        body["suggestion"] = exc.suggestion
    return JSONResponse(status_code=422, content=body)


def create_app(
    store_path,
    threshold_default=DEFAULT_CONFIDENCE_THRESHOLD,
    palette_n=DEFAULT_PALETTE_SIZE,
):
    store = DesignStore(store_path)
    cache = PhotoContextCache()
    app = FastAPI(title="designrecolor")
    app.state.store = store

    @app.post(f"{API_PREFIX}/designs")
    async def upload_design(
        design: UploadFile = File(...),
        photo: UploadFile = File(...),
        annotations: UploadFile = File(...),
    ):
        try:
            design_id = store.put_design(
                await design.read(), await photo.read(), await annotations.read()
            )
        except FileExistsError as exc:
            return JSONResponse(status_code=409, content={"error": f"store conflict: {exc}"})
        except RecolorError as exc:
            return JSONResponse(
                status_code=400,
                content={"error": str(exc), "stage": exc.stage, "code": exc.code},
            )
        bundle = store.bundle(design_id)
        return {
            "design_id": design_id,
            "elements": len(bundle.elements),
            "photo_rect": list(bundle.photo_rect),
        }

    @app.get(f"{API_PREFIX}/designs/{{design_id}}")
    def design_meta(design_id: str):
        try:
            bundle = store.bundle(design_id)
        except KeyError:
            return JSONResponse(status_code=404, content={"error": "unknown design"})
        design_ref = store.put_asset(_png_bytes(bundle.design))
        photo_ref = store.put_asset(_png_bytes(bundle.photo))
        return {
            "design_id": design_id,
            "photo_rect": list(bundle.photo_rect),
            "design_ref": design_ref,
            "photo_ref": photo_ref,
            "elements": [
                {
                    "id": el.id,
                    "class": el.cls,
                    "color": list(el.color) if el.color else None,
                    "pixels": int(el.mask.sum()),
                }
                for el in bundle.elements
            ],
            "photo_objects": [obj.phrase for obj in bundle.photo_objects],
        }

    def _decode_mask(payload, shape):
        raw = base64.b64decode(payload)
        with Image.open(io.BytesIO(raw)) as im:
            arr = np.asarray(im.convert("L"))
        if arr.shape != shape:
            raise ValueError(f"mask {arr.shape} does not match photo {shape}")
        return arr >= 128

    def _run(bundle, instruction, threshold, mask_b64, design_id, base_ref=None):
        user_mask = None
        if mask_b64:
            user_mask = _decode_mask(mask_b64, bundle.photo.shape[:2])
        results = recolor_instruction(
            bundle,
            instruction,
            user_mask=user_mask,
            threshold=threshold,
            palette_n=palette_n,
            cache=cache,
        )
        from .instructions import parse_instruction, recognize_granularity

        granularity = recognize_granularity(parse_instruction(instruction), bundle)

        regions = []
        seen_regions = {}
        entries = []
        for res in results:
            if res.region_index not in seen_regions:
                init_ref = store.put_asset(
                    _gray_png(res.outcome.init.mask.astype(np.float64))
                )
                soft_ref = store.put_asset(_gray_png(res.outcome.soft.m_f))
                seen_regions[res.region_index] = len(regions)
                regions.append(
                    {
                        "region_index": res.region_index,
                        "phrase": res.region.phrase,
                        "provider": res.outcome.init.provider,
                        "initial_mask_ref": init_ref,
                        "soft_mask_ref": soft_ref,
                    }
                )
            photo_ref = store.put_asset(_png_bytes(res.photo))
            design_ref = store.put_asset(_png_bytes(res.design))
            store.put_result(
                photo_ref,
                {"design_id": design_id, "photo_ref": photo_ref, "base_ref": base_ref},
            )
            entries.append(
                {
                    "result_ref": photo_ref,
                    "image_ref": photo_ref,
                    "design_ref": design_ref,
                    "source_color": list(res.source_color),
                    "confidence": res.confidence,
                    "region_index": res.region_index,
                    "overlap_rates": res.overlap_rates,
                    "delta_L": res.delta_l,
                    "clamped": res.clamped,
                }
            )
        seen = set()
        source_colors = []
        for res in results:
            key = tuple(res.source_color)
            if key not in seen:
                seen.add(key)
                source_colors.append(
                    {
                        "rgb": list(res.source_color),
                        "confidence": res.confidence,
                        "element_id": res.source_element_id,
                    }
                )
        return {
            "granularity": granularity,
            "threshold": threshold,
            "source_colors": source_colors,
            "regions": regions,
            "results": entries,
        }

    @app.post(f"{API_PREFIX}/recolor")
    def recolor(payload: dict):
        design_id = payload.get("design_id")
        instruction = payload.get("instruction")
        if not design_id or not instruction:
            return JSONResponse(
                status_code=400, content={"error": "design_id and instruction required"}
            )
        try:
            bundle = store.bundle(design_id)
        except KeyError:
            return JSONResponse(status_code=404, content={"error": "unknown design"})
        threshold = float(payload.get("threshold", threshold_default))
        try:
            return _run(bundle, instruction, threshold, payload.get("mask"), design_id)
        except RecolorError as exc:
            return _error_response(exc)
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.post(f"{API_PREFIX}/iterate")
    def iterate(payload: dict):
        design_id = payload.get("design_id")
        result_ref = payload.get("result_ref")
        instruction = payload.get("instruction")
        if not design_id or not result_ref or not instruction:
            return JSONResponse(
                status_code=400,
                content={"error": "design_id, result_ref and instruction required"},
            )
        try:
            record = store.result(result_ref)
            base = store.bundle(record["design_id"])
            photo_png = store.asset(record["photo_ref"])
        except KeyError:
            return JSONResponse(status_code=404, content={"error": "unknown result"})
        if record["design_id"] != design_id:
            return JSONResponse(
                status_code=409, content={"error": "result belongs to another design"}
            )
        with Image.open(io.BytesIO(photo_png)) as im:
            photo = np.asarray(im.convert("RGB"), dtype=np.uint8)
        from .bundle import DesignBundle

        derived = DesignBundle(
            design=base.insert_photo(photo),
            photo=photo,
            photo_rect=base.photo_rect,
            elements=base.elements,
            photo_objects=base.photo_objects,
        )
        threshold = float(payload.get("threshold", threshold_default))
        try:
            return _run(
                derived, instruction, threshold, payload.get("mask"), design_id,
                base_ref=result_ref,
            )
        except RecolorError as exc:
            return _error_response(exc)
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get(f"{API_PREFIX}/assets/{{ref}}")
    def asset(ref: str):
        try:
            return Response(content=store.asset(ref), media_type="image/png")
        except KeyError:
            return JSONResponse(status_code=404, content={"error": "unknown asset"})

    return app


def serve(port, store_path, threshold_default=DEFAULT_CONFIDENCE_THRESHOLD,
          palette_n=DEFAULT_PALETTE_SIZE, host="127.0.0.1"):
    import uvicorn

    app = create_app(store_path, threshold_default, palette_n)
    uvicorn.run(app, host=host, port=port, log_level="warning")
