"""Annotated design bundles: raster, element annotations, photo placement.

A bundle on disk is a directory holding ``design.png`` (8-bit RGB),
``photo.png`` and ``annotations.json``. Element masks are stored as
run-length encodings over the flattened row-major raster: a flat list of
(start, length) pairs with strictly increasing, non-overlapping runs.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .colorcore import COLOR_TERMS, NONE_TERM, classify_color_term
from .errors import BundleError

ANNOTATION_VERSION = 1

# element hierarchy: leaf -> group (roots map to None)
LEAF_CLASSES = (
    "background",
    "title",
    "subtitle",
    "plain-text",
    "shape-without-content",
    "background-shape",
    "photo",
)
GROUP_CLASSES = ("text", "shape")
PARENT = {
    "title": "text",
    "subtitle": "text",
    "plain-text": "text",
    "shape-without-content": "shape",
    "background-shape": "shape",
    "background": None,
    "photo": None,
}
TEXT_BASED = frozenset({"text", "title", "subtitle", "plain-text"})
FILLED_BASED = frozenset(
    {"background", "shape", "shape-without-content", "background-shape"}
)


def is_text_based(cls):
    return cls in TEXT_BASED


def is_filled_based(cls):
    return cls in FILLED_BASED


def class_matches(leaf, query):
    """True when ``leaf`` is ``query`` or a descendant of the group ``query``."""
    return leaf == query or PARENT.get(leaf) == query


def encode_rle(mask):
    """Maximal-run RLE of a boolean mask over the flattened row-major array."""
    flat = np.asarray(mask).ravel().astype(bool)
    if flat.size == 0:
        return []
    edges = np.flatnonzero(np.diff(flat.astype(np.int8)))
    starts = np.concatenate(([0], edges + 1))
    ends = np.concatenate((edges + 1, [flat.size]))
    out = []
    for s, e in zip(starts, ends):
        if flat[s]:
            out.extend((int(s), int(e - s)))
    return out


def decode_rle(runs, shape):
    flat = np.zeros(int(np.prod(shape)), dtype=bool)
    if len(runs) % 2 != 0:
        raise BundleError("run-length data must hold (start, length) pairs", code="malformed-annotation")
    prev_end = -1
    for i in range(0, len(runs), 2):
        s, ln = int(runs[i]), int(runs[i + 1])
        if ln <= 0 or s <= prev_end or s + ln > flat.size:
            raise BundleError(f"invalid run ({s},{ln})", code="malformed-annotation")
        flat[s : s + ln] = True
        prev_end = s + ln - 1
    return flat.reshape(shape)


@dataclass
class DesignElement:
    id: str
    cls: str
    mask: np.ndarray  # bool, design-sized
    color: tuple | None = None  # annotated fill/text color

    def validate(self, design_shape):
        if self.cls not in LEAF_CLASSES:
            raise BundleError(
                f"element {self.id}: unknown class {self.cls!r}",
                code="unknown-element-class",
            )
        if self.mask.shape != design_shape[:2]:
            raise BundleError(
                f"element {self.id}: mask shape {self.mask.shape} does not match "
                f"design {design_shape[:2]}",
                code="dimension-mismatch",
            )
        if not self.mask.any():
            raise BundleError(f"element {self.id}: empty mask", code="malformed-annotation")
        if self.color is not None:
            r, g, b = self.color
            if not all(0 <= v <= 255 for v in (r, g, b)):
                raise BundleError(
                    f"element {self.id}: color out of range", code="malformed-annotation"
                )


@dataclass
class PhotoObject:
    """A region annotation inside the photo: noun phrase plus known mask."""

    phrase: str
    mask: np.ndarray  # bool, photo-sized
    color: tuple | None = None


@dataclass
class DesignBundle:
    design: np.ndarray  # HxWx3 uint8
    photo: np.ndarray  # hxwx3 uint8
    photo_rect: tuple  # (x, y, w, h) inside the design
    elements: list = field(default_factory=list)
    photo_objects: list = field(default_factory=list)

    def validate(self):
        if self.design.ndim != 3 or self.design.shape[2] != 3:
            raise BundleError("design must be HxWx3", code="dimension-mismatch")
        x, y, w, h = self.photo_rect
        H, W = self.design.shape[:2]
        if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > W or y + h > H:
            raise BundleError("photo rect outside design bounds", code="dimension-mismatch")
        if self.photo.shape[:2] != (h, w):
            raise BundleError(
                f"photo raster {self.photo.shape[:2]} does not match rect {(h, w)}",
                code="dimension-mismatch",
            )
        for el in self.elements:
            el.validate(self.design.shape)
        for obj in self.photo_objects:
            if obj.mask.shape != self.photo.shape[:2]:
                raise BundleError(
                    f"photo object {obj.phrase!r}: mask does not match photo",
                    code="dimension-mismatch",
                )
        return self

    def element_color(self, el):
        """Annotated color, or the voted dominant color when absent."""
        if el.color is not None:
            return tuple(int(v) for v in el.color)
        from .sourcecolor import dominant_color  # local import: avoids cycle

        return dominant_color(self, el)

    def elements_of(self, cls, attr=NONE_TERM):
        """Elements whose leaf class matches ``cls`` (hierarchy-aware), then
        filtered by color term when ``attr`` is given. Annotation order."""
        out = []
        for el in self.elements:
            if not class_matches(el.cls, cls):
                continue
            if attr != NONE_TERM:
                if attr not in COLOR_TERMS:
                    raise BundleError(f"unknown color term {attr!r}", code="malformed-annotation")
                if classify_color_term(self.element_color(el)) != attr:
                    continue
            out.append(el)
        return out

    def insert_photo(self, photo):
        """Design raster with ``photo`` placed at the photo rect."""
        x, y, w, h = self.photo_rect
        out = self.design.copy()
        out[y : y + h, x : x + w] = photo
        return out


def elements_of(bundle, cls, attr=NONE_TERM):
    return bundle.elements_of(cls, attr)


def _read_png(path):
    if not path.exists():
        raise BundleError(f"missing file: {path.name}", code="missing-file")
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def _write_png(path, arr):
    Image.fromarray(np.asarray(arr, dtype=np.uint8)).save(path, format="PNG")


def load_bundle(path):
    """Load and validate a bundle directory."""
    root = Path(path)
    design = _read_png(root / "design.png")
    photo = _read_png(root / "photo.png")
    ann_path = root / "annotations.json"
    if not ann_path.exists():
        raise BundleError("missing file: annotations.json", code="missing-file")
    try:
        ann = json.loads(ann_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BundleError(f"annotations.json: {exc}", code="malformed-annotation") from exc

    try:
        rect = tuple(int(v) for v in ann["photo_rect"])
        raw_elements = ann["elements"]
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleError(f"annotations.json: {exc!r}", code="malformed-annotation") from exc

    elements = []
    for raw in raw_elements:
        try:
            el = DesignElement(
                id=str(raw["id"]),
                cls=str(raw["class"]),
                mask=decode_rle(raw["mask_rle"], design.shape[:2]),
                color=tuple(int(v) for v in raw["color"]) if raw.get("color") else None,
            )
        except BundleError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise BundleError(
                f"element {raw.get('id', '?')}: {exc!r}", code="malformed-annotation"
            ) from exc
        elements.append(el)

    objects = []
    for raw in ann.get("photo_objects", []):
        objects.append(
            PhotoObject(
                phrase=str(raw["phrase"]),
                mask=decode_rle(raw["mask_rle"], photo.shape[:2]),
                color=tuple(int(v) for v in raw["color"]) if raw.get("color") else None,
            )
        )

    bundle = DesignBundle(
        design=design,
        photo=photo,
        photo_rect=rect,
        elements=elements,
        photo_objects=objects,
    )
    return bundle.validate()


def bundle_annotations(bundle):
    """The annotation document for a bundle, as a JSON-ready dict."""
    doc = {
        "version": ANNOTATION_VERSION,
        "photo_rect": [int(v) for v in bundle.photo_rect],
        "elements": [
            {
                "id": el.id,
                "class": el.cls,
                "color": [int(v) for v in el.color] if el.color is not None else None,
                "mask_rle": encode_rle(el.mask),
            }
            for el in bundle.elements
        ],
    }
    if bundle.photo_objects:
        doc["photo_objects"] = [
            {
                "phrase": obj.phrase,
                "color": [int(v) for v in obj.color] if obj.color is not None else None,
                "mask_rle": encode_rle(obj.mask),
            }
            for obj in bundle.photo_objects
        ]
    return doc


def save_bundle(bundle, path):
    """Write a bundle directory; save->load round trips bit-exactly."""
    bundle.validate()
    root = Path(path)
    try:
        root.mkdir(parents=True, exist_ok=True)
        _write_png(root / "design.png", bundle.design)
        _write_png(root / "photo.png", bundle.photo)
        text = json.dumps(bundle_annotations(bundle), sort_keys=True, indent=1)
        (root / "annotations.json").write_text(text, encoding="utf-8")
    except OSError as exc:
        raise BundleError(f"cannot write bundle: {exc}", code="io-failure") from exc


def bundles_equal(a, b):
    if not (
        np.array_equal(a.design, b.design)
        and np.array_equal(a.photo, b.photo)
        and tuple(a.photo_rect) == tuple(b.photo_rect)
        and len(a.elements) == len(b.elements)
        and len(a.photo_objects) == len(b.photo_objects)
    ):
        return False
    for ea, eb in zip(a.elements, b.elements):
        if (
            ea.id != eb.id
            or ea.cls != eb.cls
            or ea.color != eb.color
            or not np.array_equal(ea.mask, eb.mask)
        ):
            return False
    for oa, ob in zip(a.photo_objects, b.photo_objects):
        if oa.phrase != ob.phrase or oa.color != ob.color or not np.array_equal(oa.mask, ob.mask):
            return False
    return True
