"""Synthetic annotated graphic designs with recoloring instructions.

Every case is a design bundle (background bands, decorative shapes,
pseudo-text glyph runs, one pasted photo with flat-colored objects) plus a
manifest of instructions whose ground-truth source colors equal the
annotated element colors exactly. Generation is fully determined by
(seed, case index), so datasets are byte-reproducible and cases can be
produced in parallel.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from hashlib import sha256
from pathlib import Path

import numpy as np
from scipy import fft as sfft
from scipy import ndimage

from .bundle import DesignBundle, DesignElement, PhotoObject, save_bundle
from .colorcore import NONE_TERM, bin_key, classify_color_term, rgb_to_lab
from .errors import DatasetError
from .instructions import (
    DEFAULT_LEXICON,
    RegionDescriptor,
    granularity_of,
    make_source_descriptor,
)

# Curated pool covering the 11 basic color terms (3 shades per term).
COLOR_POOL = {
    "blue": [(25, 70, 210), (60, 120, 230), (15, 40, 140)],
    "brown": [(139, 69, 19), (120, 66, 30), (101, 55, 22)],
    "green": [(40, 160, 60), (25, 120, 45), (90, 180, 70)],
    "orange": [(240, 130, 30), (230, 110, 25), (250, 150, 50)],
    "pink": [(240, 105, 180), (250, 130, 190), (230, 90, 160)],
    "purple": [(130, 50, 200), (110, 40, 170), (90, 30, 150)],
    "red": [(220, 30, 40), (180, 20, 30), (200, 35, 45)],
    "yellow": [(250, 210, 40), (240, 200, 30), (255, 220, 60)],
    # neutrals keep equal channels: HSL saturation is unstable near the
    # lightness extremes for even slightly unequal ones
    "black": [(12, 12, 12), (24, 24, 24), (5, 5, 5)],
    "grey": [(128, 128, 128), (160, 160, 160), (96, 96, 96)],
    "white": [(245, 245, 245), (252, 252, 252), (238, 238, 238)],
}
POOL_FLAT = [(term, rgb) for term, shades in COLOR_POOL.items() for rgb in shades]

OBJECT_NOUNS = (
    "sofa", "hat", "car", "ball", "cup", "boat",
    "shirt", "flower", "door", "chair", "vase", "kite",
)

TEXT_CONTRAST_DL = 25.0
SHAPE_CONTRAST_DL = 10.0
MIXED_LABEL = -2  # anti-aliased blend pixels, excluded from every mask


@dataclass
class GeneratorConfig:
    seed: int = 0
    count: int = 10
    canvas_sizes: tuple = ((400, 320), (480, 360), (320, 400), (400, 400), (360, 480))
    degrade: bool = False
    degrade_strength: float = 1.0
    gradient_overlay: bool = True
    photo_dir: str | None = None


@dataclass
class GeneratedCase:
    bundle: DesignBundle
    instructions: list


def _delta_l(c1, c2):
    return abs(float(rgb_to_lab(np.asarray(c1, float))[0] - rgb_to_lab(np.asarray(c2, float))[0]))


def _pick_color(rng, used_bins, *, min_dl=None, against=(), term=None, exclude_terms=()):
    """Pool color with an unused histogram bin and the required contrast."""
    candidates = [
        (t, rgb)
        for t, rgb in POOL_FLAT
        if (term is None or t == term)
        and t not in exclude_terms
        and bin_key(rgb) not in used_bins
        and (min_dl is None or all(_delta_l(rgb, c) >= min_dl for c in against))
    ]
    if not candidates:
        return None
    t, rgb = candidates[rng.integers(0, len(candidates))]
    used_bins.add(bin_key(rgb))
    return t, rgb


# ---------------------------------------------------------------------------
# photo synthesis


def _smooth_noise(rng, shape, sigma, amp):
    noise = rng.normal(0.0, 1.0, size=shape)
    noise = ndimage.gaussian_filter(noise, sigma=(sigma, sigma, 0))
    peak = np.abs(noise).max()
    return noise / peak * amp if peak > 0 else noise


def generate_photo(rng, size=(160, 224), with_objects=True):
    """Procedural photo: a smooth two-shade gradient plus flat objects with
    known masks (the region ground truth)."""
    h, w = size
    term = list(COLOR_POOL)[rng.integers(0, len(COLOR_POOL))]
    shades = COLOR_POOL[term]
    c0 = np.array(shades[rng.integers(0, len(shades))], float)
    c1 = np.array(shades[rng.integers(0, len(shades))], float)
    ang = rng.uniform(0, 2 * np.pi)
    yy, xx = np.mgrid[0:h, 0:w]
    t = (np.cos(ang) * xx / max(w - 1, 1)) + (np.sin(ang) * yy / max(h - 1, 1))
    t = (t - t.min()) / max(t.max() - t.min(), 1e-9)
    photo = c0[None, None] * (1 - t[..., None]) + c1[None, None] * t[..., None]
    photo += _smooth_noise(rng, (h, w, 3), sigma=6.0, amp=8.0)

    objects = []
    if with_objects:
        n_obj = int(rng.integers(1, 4))
        nouns = [str(s) for s in rng.permutation(np.array(OBJECT_NOUNS))]
        taken = np.zeros((h, w), bool)
        used_terms = {term}
        for i in range(n_obj):
            pick = _pick_color(rng, set(), exclude_terms=used_terms)
            if pick is None:
                break
            oterm, orgb = pick
            for _ in range(12):
                ow = int(rng.integers(max(12, w // 6), max(14, w // 3)))
                oh = int(rng.integers(max(12, h // 6), max(14, h // 3)))
                ox = int(rng.integers(0, max(1, w - ow)))
                oy = int(rng.integers(0, max(1, h - oh)))
                kind = ("ellipse", "rect", "triangle")[rng.integers(0, 3)]
                ys, xs = np.mgrid[0:h, 0:w]
                if kind == "ellipse":
                    cy, cx = oy + oh / 2.0, ox + ow / 2.0
                    mask = ((xs - cx) / (ow / 2.0)) ** 2 + ((ys - cy) / (oh / 2.0)) ** 2 <= 1.0
                elif kind == "rect":
                    mask = (ys >= oy) & (ys < oy + oh) & (xs >= ox) & (xs < ox + ow)
                else:  # right triangle anchored at the box's bottom-left
                    inside = (ys >= oy) & (ys < oy + oh) & (xs >= ox) & (xs < ox + ow)
                    mask = inside & ((xs - ox) / ow + (oy + oh - 1 - ys) / oh <= 1.0)
                if mask.sum() < 32 or (mask & taken).any():
                    continue
                shade = rng.uniform(-5, 5)
                photo[mask] = np.array(orgb, float) + shade
                taken |= mask
                used_terms.add(oterm)
                objects.append(PhotoObject(phrase=nouns[i], mask=mask, color=tuple(orgb)))
                break
    return np.clip(np.round(photo), 0, 255).astype(np.uint8), objects


def _load_photo_pool(photo_dir):
    from PIL import Image

    paths = sorted(Path(photo_dir).glob("*.png")) + sorted(Path(photo_dir).glob("*.jpg"))
    pool = []
    for p in paths:
        with Image.open(p) as im:
            pool.append(np.asarray(im.convert("RGB"), dtype=np.uint8))
    if not pool:
        raise DatasetError(f"no photos found in {photo_dir}", code="empty-photo-dir")
    return pool


# ---------------------------------------------------------------------------
# design synthesis


def _rounded_rect_sdf(ys, xs, y0, x0, h, w, radius):
    cy, cx = y0 + h / 2.0, x0 + w / 2.0
    qy = np.abs(ys + 0.5 - cy) - (h / 2.0 - radius)
    qx = np.abs(xs + 0.5 - cx) - (w / 2.0 - radius)
    outer = np.sqrt(np.maximum(qx, 0.0) ** 2 + np.maximum(qy, 0.0) ** 2)
    inner = np.minimum(np.maximum(qx, qy), 0.0)
    return outer + inner - radius


def _paint_hard(canvas, labels, mask, color, label):
    canvas[mask] = color
    labels[mask] = label


def _paint_glyph(canvas, labels, sdf_region, bbox, color, label):
    """Anti-aliased blob: full-coverage pixels own the label, blends are
    marked mixed so no element mask includes them."""
    y0, y1, x0, x1 = bbox
    coverage = np.clip(0.5 - sdf_region, 0.0, 1.0)
    region = canvas[y0:y1, x0:x1]
    canvas[y0:y1, x0:x1] = coverage[..., None] * np.asarray(color, float) + (
        1 - coverage[..., None]
    ) * region
    lab = labels[y0:y1, x0:x1]
    lab[coverage >= 0.999] = label
    lab[(coverage > 0.0) & (coverage < 0.999)] = MIXED_LABEL


def _free_rows(occupied, height, margin, canvas_h):
    """Candidate y positions where a horizontal band of `height` is free."""
    ys = []
    for y in range(margin, canvas_h - margin - height):
        if not occupied[y : y + height].any():
            ys.append(y)
    return ys


def generate_design(cfg, rng, photo_pool=None):
    """One annotated design. Raises layout-infeasible after 10 attempts."""
    for _ in range(10):
        bundle = _try_generate_design(cfg, rng, photo_pool)
        if bundle is not None:
            return bundle
    raise DatasetError("layout infeasible after 10 attempts", code="layout-infeasible")


def _try_generate_design(cfg, rng, photo_pool=None):
    W, H = cfg.canvas_sizes[rng.integers(0, len(cfg.canvas_sizes))]
    canvas = np.zeros((H, W, 3), float)
    labels = np.full((H, W), -1, dtype=np.int32)
    used_bins = set()
    elements = []  # (id, class, color)
    margin = max(8, int(0.04 * min(W, H)))

    def new_id():
        return f"e{len(elements)}"

    # background: solid or two bands (each band its own element)
    two_band = rng.random() < 0.5
    band_colors = []
    if two_band:
        vertical = rng.random() < 0.5
        split = int((0.35 + 0.3 * rng.random()) * (W if vertical else H))
        for bi in range(2):
            pick = _pick_color(rng, used_bins)
            if pick is None:
                return None
            term, rgb = pick
            mask = np.zeros((H, W), bool)
            if vertical:
                mask[:, :split] = bi == 0
                mask[:, split:] = bi == 1
            else:
                mask[:split] = bi == 0
                mask[split:] = bi == 1
            _paint_hard(canvas, labels, mask, rgb, len(elements))
            elements.append(DesignElement(id=new_id(), cls="background", mask=None, color=rgb))
            band_colors.append(rgb)
    else:
        pick = _pick_color(rng, used_bins)
        if pick is None:
            return None
        term, rgb = pick
        _paint_hard(canvas, labels, np.ones((H, W), bool), rgb, len(elements))
        elements.append(DesignElement(id=new_id(), cls="background", mask=None, color=rgb))
        band_colors.append(rgb)

    ys_full, xs_full = np.mgrid[0:H, 0:W]

    # background shapes: large rounded rectangles behind everything else
    for _ in range(int(rng.integers(0, 3))):
        bw = int(rng.uniform(0.3, 0.6) * W)
        bh = int(rng.uniform(0.2, 0.45) * H)
        bx = int(rng.integers(0, W - bw))
        by = int(rng.integers(0, H - bh))
        under = [tuple(c) for c in np.unique(canvas[by : by + bh, bx : bx + bw].reshape(-1, 3), axis=0)]
        pick = _pick_color(rng, used_bins, min_dl=SHAPE_CONTRAST_DL, against=under)
        if pick is None:
            continue
        term, rgb = pick
        sdf = _rounded_rect_sdf(ys_full, xs_full, by, bx, bh, bw, radius=min(bw, bh) * 0.15)
        _paint_hard(canvas, labels, sdf <= 0, rgb, len(elements))
        elements.append(DesignElement(id=new_id(), cls="background-shape", mask=None, color=rgb))

    # photo placement
    pw = int(rng.uniform(0.35, 0.55) * W)
    ph = int(rng.uniform(0.3, 0.5) * H)
    px = int(rng.integers(margin, W - pw - margin))
    py = int(rng.integers(int(0.3 * H), H - ph - margin))
    if photo_pool:
        src = photo_pool[rng.integers(0, len(photo_pool))]
        sh, sw = src.shape[:2]
        if sh < ph or sw < pw:
            photo, objects = generate_photo(rng, (ph, pw))
        else:
            oy = int(rng.integers(0, sh - ph + 1))
            ox = int(rng.integers(0, sw - pw + 1))
            photo, objects = src[oy : oy + ph, ox : ox + pw].copy(), []
    else:
        photo, objects = generate_photo(rng, (ph, pw))
    canvas[py : py + ph, px : px + pw] = photo
    labels[py : py + ph, px : px + pw] = len(elements)
    elements.append(DesignElement(id=new_id(), cls="photo", mask=None, color=None))
    photo_rect = (px, py, pw, ph)
    occupied_rows = np.zeros(H, bool)
    occupied_rows[max(0, py - 4) : py + ph + 4] = True

    # content shapes, clear of the photo
    for _ in range(int(rng.integers(0, 3))):
        sw_ = int(rng.uniform(0.1, 0.25) * W)
        sh_ = int(rng.uniform(0.08, 0.2) * H)
        for _try in range(8):
            sx = int(rng.integers(margin, W - sw_ - margin))
            sy = int(rng.integers(margin, H - sh_ - margin))
            if not (sx + sw_ < px or sx > px + pw or sy + sh_ < py or sy > py + ph):
                continue
            under = [tuple(c) for c in np.unique(canvas[sy : sy + sh_, sx : sx + sw_].reshape(-1, 3), axis=0)]
            pick = _pick_color(rng, used_bins, min_dl=SHAPE_CONTRAST_DL, against=under)
            if pick is None:
                break
            term, rgb = pick
            kind = ("rect", "circle")[rng.integers(0, 2)]
            if kind == "rect":
                mask = np.zeros((H, W), bool)
                mask[sy : sy + sh_, sx : sx + sw_] = True
            else:
                r = min(sw_, sh_) / 2
                cy, cx = sy + sh_ / 2, sx + sw_ / 2
                mask = ((xs_full - cx) ** 2 + (ys_full - cy) ** 2) <= r * r
            _paint_hard(canvas, labels, mask, rgb, len(elements))
            elements.append(
                DesignElement(id=new_id(), cls="shape-without-content", mask=None, color=rgb)
            )
            break

    # pseudo-text: title, optional subtitle, plain-text blocks
    text_specs = [("title", 1, 0.055)]
    if rng.random() < 0.8:
        text_specs.append(("subtitle", 1, 0.038))
    for _ in range(int(rng.integers(0, 3))):
        text_specs.append(("plain-text", 1, 0.028))

    for cls, _count, rel_h in text_specs:
        gh = max(7, int(rel_h * H))
        rows = _free_rows(occupied_rows, gh + 4, margin, H)
        if not rows:
            if cls == "title":
                return None
            continue
        gy = rows[rng.integers(0, len(rows))]
        x0 = margin + int(rng.integers(0, max(1, W // 8)))
        bbox_w = int(rng.uniform(0.45, 0.8) * (W - 2 * margin))
        under = [
            tuple(c)
            for c in np.unique(canvas[gy : gy + gh, x0 : x0 + bbox_w].reshape(-1, 3), axis=0)
        ]
        pick = _pick_color(rng, used_bins, min_dl=TEXT_CONTRAST_DL, against=under)
        if pick is None:
            if cls == "title":
                return None
            continue
        term, rgb = pick
        label = len(elements)
        # word blobs across the row, anti-aliased rounded rects
        x = x0
        words = 0
        while x < x0 + bbox_w - gh and words < 6:
            wl = int(rng.uniform(1.2, 3.2) * gh)
            wl = min(wl, x0 + bbox_w - x)
            if wl < gh:
                break
            ys, xs = np.mgrid[gy : gy + gh, x : x + wl]
            sdf = _rounded_rect_sdf(ys, xs, gy, x, gh, wl, radius=gh * 0.3)
            _paint_glyph(canvas, labels, sdf, (gy, gy + gh, x, x + wl), rgb, label)
            x += wl + max(3, gh // 2)
            words += 1
        if words == 0:
            if cls == "title":
                return None
            continue
        elements.append(DesignElement(id=new_id(), cls=cls, mask=None, color=rgb))
        occupied_rows[max(0, gy - 3) : gy + gh + 3] = True

    # materialize visibility masks from the label map
    design = np.clip(np.round(canvas), 0, 255).astype(np.uint8)
    final_elements = []
    for i, el in enumerate(elements):
        mask = labels == i
        if not mask.any():
            return None  # fully occluded element; relayout
        el.mask = mask
        final_elements.append(el)

    bundle = DesignBundle(
        design=design,
        photo=design[py : py + ph, px : px + pw].copy(),
        photo_rect=photo_rect,
        elements=final_elements,
        photo_objects=objects,
    )
    return bundle.validate()


# ---------------------------------------------------------------------------
# instruction synthesis


def _surface_form(lexicon, cls, plural=False):
    options = [
        phrase
        for phrase, (canon, is_plural) in lexicon.elements.items()
        if canon == cls and is_plural == plural
    ]
    return sorted(options)


def _render_instruction(rng, lexicon, source_text, regions):
    region_text = " and ".join(
        f"the {r.color_adj} {r.phrase}" if r.color_adj != NONE_TERM else f"the {r.phrase}"
        for r in regions
    )
    src = source_text if source_text.startswith("all ") else f"the {source_text}"
    verb = " ".join(lexicon.verbs[rng.integers(0, len(lexicon.verbs))])
    if rng.random() < 0.5:
        conj = sorted(lexicon.conjunctions)[rng.integers(0, len(lexicon.conjunctions))]
        return f"{verb} {region_text} {conj} {src}"
    return f"use {src} to {verb} {region_text}"


def _sample_regions(rng, bundle):
    if bundle.photo_objects:
        k = 2 if (len(bundle.photo_objects) > 1 and rng.random() < 0.25) else 1
        idx = rng.choice(len(bundle.photo_objects), size=k, replace=False)
        regions = []
        for i in idx:
            obj = bundle.photo_objects[int(i)]
            # keep the color adjective most of the time so color seeding works
            adj = classify_color_term(obj.color) if rng.random() < 0.7 else NONE_TERM
            regions.append(RegionDescriptor(phrase=obj.phrase, color_adj=adj))
        return regions
    noun = str(OBJECT_NOUNS[rng.integers(0, len(OBJECT_NOUNS))])
    return [RegionDescriptor(phrase=noun)]


def generate_instructions(bundle, rng, lexicon=DEFAULT_LEXICON):
    """Well-posed instruction cases with ground truth for a bundle."""
    by_query = {}
    for el in bundle.elements:
        if el.color is None:
            continue
        groups = [el.cls]
        parent = {"title": "text", "subtitle": "text", "plain-text": "text",
                  "shape-without-content": "shape", "background-shape": "shape"}.get(el.cls)
        if parent:
            groups.append(parent)
        for g in groups:
            by_query.setdefault(g, []).append(el)

    candidates = []  # (source_descriptor, surface_text, gt elements)
    for cls, els in sorted(by_query.items()):
        forms = _surface_form(lexicon, cls)
        if not forms:
            continue
        form = forms[rng.integers(0, len(forms))]
        # bare class reference
        src = make_source_descriptor(cls)
        candidates.append((src, form, els))
        if src.quantifier == "all" and len(els) > 1 and rng.random() < 0.5:
            # verbalize the quantifier explicitly half the time
            plural_forms = _surface_form(lexicon, cls, plural=True)
            if plural_forms and rng.random() < 0.5:
                pf = plural_forms[rng.integers(0, len(plural_forms))]
                candidates.append((make_source_descriptor(cls, plural=True), pf, els))
            else:
                candidates.append(
                    (make_source_descriptor(cls, explicit_all=True), f"all {form}", els)
                )
        # attribute-qualified reference, only when unambiguous
        terms = {}
        for el in els:
            terms.setdefault(classify_color_term(el.color), []).append(el)
        for term, matched in sorted(terms.items()):
            if len(matched) == 1:
                candidates.append(
                    (make_source_descriptor(cls, attr=term), f"{term} {form}", [matched[0]])
                )

    instructions = []
    for src, surface, els in candidates:
        regions = _sample_regions(rng, bundle)
        # dedupe identical colors for the ground truth set
        seen = set()
        gt_colors = []
        for el in els:
            key = bin_key(el.color)
            if key not in seen:
                seen.add(key)
                gt_colors.append(list(el.color))
        instructions.append(
            {
                "text": _render_instruction(rng, lexicon, surface, regions),
                "source": {"cls": src.cls, "attr": src.attr, "quantifier": src.quantifier},
                "regions": [
                    {"phrase": r.phrase, "color_adj": r.color_adj} for r in regions
                ],
                "granularity": granularity_of(bundle, src),
                "gt_source_colors": gt_colors,
                "gt_element_ids": [el.id for el in els],
            }
        )
    return instructions


# ---------------------------------------------------------------------------
# degradation


_QUANT_BASE = 6.0
_QUANT_SLOPE = 1.5


def degrade_design(bundle, strength, gradient=True, rng=None):
    """Block-DCT quantization noise plus an optional lightness ramp on fills.

    Annotations (colors, masks) stay untouched; ground truth remains the
    clean colors. Strength 0 is the identity.
    """
    if strength <= 0:
        return bundle
    rng = rng if rng is not None else np.random.default_rng(0)
    design = bundle.design.astype(np.float64)
    H, W = design.shape[:2]

    if gradient:
        ys, xs = np.mgrid[0:H, 0:W]
        for el in bundle.elements:
            if el.cls not in ("background", "background-shape", "shape-without-content"):
                continue
            ang = rng.uniform(0, 2 * np.pi)
            proj = np.cos(ang) * xs + np.sin(ang) * ys
            sel = el.mask
            pr = proj[sel]
            if pr.size < 2 or pr.max() - pr.min() < 1e-9:
                continue
            ramp = (pr - pr.min()) / (pr.max() - pr.min()) * 2.0 - 1.0
            design[sel] += (4.0 * strength) * ramp[:, None]

    # pad to 8x8 blocks, quantize DCT coefficients, restore
    ph = (-H) % 8
    pw = (-W) % 8
    padded = np.pad(design, ((0, ph), (0, pw), (0, 0)), mode="edge")
    hb, wb = padded.shape[0] // 8, padded.shape[1] // 8
    blocks = padded.reshape(hb, 8, wb, 8, 3)
    coeff = sfft.dctn(blocks, axes=(1, 3), norm="ortho")
    u = np.arange(8)
    step = (_QUANT_BASE + _QUANT_SLOPE * (u[:, None] + u[None, :])) * strength
    step = step[None, :, None, :, None]
    coeff = np.round(coeff / step) * step
    restored = sfft.idctn(coeff, axes=(1, 3), norm="ortho")
    degraded = restored.reshape(padded.shape)[:H, :W]
    degraded = np.clip(np.round(degraded), 0, 255).astype(np.uint8)

    x, y, w, h = bundle.photo_rect
    return DesignBundle(
        design=degraded,
        photo=degraded[y : y + h, x : x + w].copy(),
        photo_rect=bundle.photo_rect,
        elements=bundle.elements,
        photo_objects=bundle.photo_objects,
    )


# ---------------------------------------------------------------------------
# dataset assembly


def generate_case(cfg, index, photo_pool=None):
    rng = np.random.default_rng([cfg.seed, index])
    bundle = generate_design(cfg, rng, photo_pool)
    instructions = generate_instructions(bundle, rng)
    if cfg.degrade:
        bundle = degrade_design(
            bundle, cfg.degrade_strength, gradient=cfg.gradient_overlay, rng=rng
        )
    return GeneratedCase(bundle=bundle, instructions=instructions)


def _write_case(cfg, index, out_dir, photo_pool=None):
    case = generate_case(cfg, index, photo_pool)
    case_dir = Path(out_dir) / f"case_{index:04d}"
    save_bundle(case.bundle, case_dir)
    doc = {"case": index, "instructions": case.instructions}
    (case_dir / "instructions.json").write_text(
        json.dumps(doc, sort_keys=True, indent=1), encoding="utf-8"
    )
    terms = set()
    classes = set()
    for el in case.bundle.elements:
        classes.add(el.cls)
        if el.color is not None:
            terms.add(classify_color_term(el.color))
    return {
        "case": index,
        "instructions": len(case.instructions),
        "terms": sorted(terms),
        "classes": sorted(classes),
    }


def generate_dataset(cfg, out_dir, workers=1):
    """Write `cfg.count` cases plus a summary document; returns the summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    photo_pool = _load_photo_pool(cfg.photo_dir) if cfg.photo_dir else None
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            stats = list(
                pool.map(
                    _write_case_star,
                    [(cfg, i, str(out), cfg.photo_dir) for i in range(cfg.count)],
                )
            )
    else:
        stats = [_write_case(cfg, i, out, photo_pool) for i in range(cfg.count)]

    terms = sorted(set().union(*(s["terms"] for s in stats)) if stats else set())
    classes = sorted(set().union(*(s["classes"] for s in stats)) if stats else set())
    summary = {
        "count": cfg.count,
        "seed": cfg.seed,
        "degrade": cfg.degrade,
        "degrade_strength": cfg.degrade_strength,
        "total_instructions": sum(s["instructions"] for s in stats),
        "color_terms_covered": terms,
        "element_classes_covered": classes,
        "cases": stats,
    }
    (out / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=1), encoding="utf-8"
    )
    return summary


def _write_case_star(args):
    cfg, index, out_dir, photo_dir = args
    pool = _load_photo_pool(photo_dir) if photo_dir else None
    return _write_case(cfg, index, out_dir, pool)


def directory_digest(path):
    """Order-independent content hash of a directory tree."""
    root = Path(path)
    h = sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def dataset_cases(path):
    root = Path(path)
    return sorted(d for d in root.iterdir() if d.is_dir() and d.name.startswith("case_"))
