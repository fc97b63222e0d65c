"""Layer selection by overlap rate, lightness-transfer recoloring, and the
end-to-end instruction entry point.

Target layers take the source color's chroma; each keeps its original
lightness offset from the dominant layer so texture gradients survive.
"""

import hashlib
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .colorcore import lab_to_rgb_float, rgb_to_lab, round_half_up
from .errors import SelectError
from .instructions import parse_instruction, split_multi_region
from .palette import DEFAULT_PALETTE_SIZE, decompose_layers, extract_palette
from .regions import PhotoGraph, build_semantic_layers, initial_mask, refine_soft_mask
from .sourcecolor import DEFAULT_CONFIDENCE_THRESHOLD, predict_source_colors

TOP_N_TARGET_LAYERS = 4


@dataclass
class OverlapScore:
    layer_pos: int  # position in the semantic layer list
    palette_index: int
    side: str
    o: float


@dataclass
class RegionOutcome:
    region: object  # RegionDescriptor
    init: object  # InitialRegionMask
    soft: object  # SoftRegionMasks
    overlap: list  # OverlapScore per semantic layer
    targets: list  # selected layer positions, dominant first


@dataclass
class RecolorResult:
    photo: np.ndarray  # recolored photo raster
    design: np.ndarray  # full design with the photo re-inserted
    source_color: tuple
    confidence: float
    region_index: int
    source_element_id: str = ""
    region: object = None
    target_layers: list = field(default_factory=list)  # (palette_index, side)
    overlap_rates: list = field(default_factory=list)  # o of selected layers
    delta_l: list = field(default_factory=list)
    clamped: bool = False
    outcome: RegionOutcome = None


def compute_overlap_rates(layers, m_f):
    """Share of each layer's opacity mass lying inside the soft foreground."""
    scores = []
    for pos, layer in enumerate(layers):
        total = float(layer.alpha.sum())
        o = float((layer.alpha * m_f).sum()) / total if total > 0 else 0.0
        scores.append(
            OverlapScore(layer_pos=pos, palette_index=layer.palette_index, side=layer.side, o=o)
        )
    return scores


def select_target_layers(scores, n=TOP_N_TARGET_LAYERS):
    """Top-n layer positions by overlap rate; zero-overlap layers never
    qualify, ties resolve to the lower layer position."""
    ranked = sorted((s for s in scores if s.o > 0.0), key=lambda s: (-s.o, s.layer_pos))
    if not ranked:
        raise SelectError("no layer overlaps the target region", code="no-overlapping-layer")
    return [s.layer_pos for s in ranked[:n]]


def recolor_with_source(decomposition, layers, targets, source_color):
    """Recolor the selected layers with a source color and recompose.

    The dominant (first) target anchors the lightness offsets: layer i's new
    color is Lab(L(source) + dL_i, a(source), b(source)) with L clamped to
    [0, 100], converted back to RGB with gamut clamping. Non-target layers
    recompose unchanged.
    """
    src_lab = rgb_to_lab(np.asarray(source_color, dtype=np.float64))
    layer_l = [float(rgb_to_lab(layers[pos].color)[0]) for pos in targets]
    anchor = layer_l[0]

    q = len(layers)
    h, w = layers[0].alpha.shape
    alpha_stack = np.stack([layer.alpha for layer in layers]).reshape(q, h * w)
    new_colors = np.stack([layer.color for layer in layers])

    delta_l = []
    clamped_any = False
    for i, pos in enumerate(targets):
        dl = layer_l[i] - anchor
        lhat = src_lab[0] + dl
        if lhat < 0.0 or lhat > 100.0:
            clamped_any = True
            lhat = min(max(lhat, 0.0), 100.0)
        rgb, clipped = lab_to_rgb_float(np.array([lhat, src_lab[1], src_lab[2]]))
        clamped_any = clamped_any or bool(clipped)
        new_colors[pos] = rgb
        delta_l.append(dl)

    flat = np.einsum("qp,qc->pc", alpha_stack, new_colors)
    photo = round_half_up(np.clip(flat, 0.0, 255.0)).astype(np.uint8).reshape(h, w, 3)
    return RecolorResult(
        photo=photo,
        design=None,
        source_color=tuple(int(v) for v in np.asarray(source_color).ravel()),
        confidence=1.0,
        region_index=0,
        target_layers=[(layers[p].palette_index, layers[p].side) for p in targets],
        delta_l=delta_l,
        clamped=clamped_any,
    )


@dataclass
class PhotoContext:
    decomposition: object
    graph: PhotoGraph


class PhotoContextCache:
    """LRU cache of per-photo decompositions and KNN graphs."""

    def __init__(self, capacity=8):
        self.capacity = capacity
        self._store = OrderedDict()

    @staticmethod
    def _key(photo, palette_n, spatial_scale):
        digest = hashlib.sha256(photo.tobytes()).hexdigest()
        return (digest, photo.shape, palette_n, spatial_scale)

    def get(self, photo, palette_n=DEFAULT_PALETTE_SIZE, spatial_scale=None):
        key = self._key(photo, palette_n, spatial_scale)
        if key in self._store:
            self._store.move_to_end(key)
            return self._store[key]
        pal = extract_palette(photo, palette_n)
        ctx = PhotoContext(
            decomposition=decompose_layers(photo, pal, spatial_scale=spatial_scale),
            graph=PhotoGraph(photo, spatial_scale=spatial_scale),
        )
        self._store[key] = ctx
        while len(self._store) > self.capacity:
            self._store.popitem(last=False)
        return ctx


GLOBAL_CONTEXT_CACHE = PhotoContextCache()


def recolor_instruction(
    bundle,
    text,
    user_mask=None,
    threshold=DEFAULT_CONFIDENCE_THRESHOLD,
    palette_n=DEFAULT_PALETTE_SIZE,
    top_n=TOP_N_TARGET_LAYERS,
    cache=None,
):
    """Run the full pipeline for one instruction.

    Returns one RecolorResult per (region, source color), region-major.
    Stage-specific errors propagate with their stage tags.
    """
    cache = cache if cache is not None else GLOBAL_CONTEXT_CACHE
    ast = parse_instruction(text)
    parts = split_multi_region(ast)
    source_set = predict_source_colors(bundle, ast.source, threshold=threshold)
    ctx = cache.get(bundle.photo, palette_n)

    results = []
    for region_index, part in enumerate(parts):
        region = part.regions[0]
        init = initial_mask(
            bundle.photo, region, user_mask=user_mask, objects=bundle.photo_objects
        )
        soft = refine_soft_mask(bundle.photo, init, graph=ctx.graph)
        layers = build_semantic_layers(ctx.decomposition, soft)
        overlap = compute_overlap_rates(layers, soft.m_f)
        targets = select_target_layers(overlap, n=top_n)
        outcome = RegionOutcome(
            region=region, init=init, soft=soft, overlap=overlap, targets=targets
        )
        for sc in source_set.colors:
            res = recolor_with_source(ctx.decomposition, layers, targets, sc.color)
            res.design = bundle.insert_photo(res.photo)
            res.confidence = sc.confidence
            res.source_element_id = sc.element_id
            res.region_index = region_index
            res.region = region
            res.overlap_rates = [overlap[p].o for p in targets]
            res.outcome = outcome
            results.append(res)
    return results


def result_manifest(instruction_text, results, image_paths=None):
    """Machine-readable manifest for a recolor run."""
    entries = []
    for i, res in enumerate(results):
        entries.append(
            {
                "image_path": image_paths[i] if image_paths else None,
                "source_color": list(res.source_color),
                "confidence": res.confidence,
                "region_index": res.region_index,
                "region_phrase": res.region.phrase if res.region else None,
                "target_layers": [[idx, side] for idx, side in res.target_layers],
                "overlap_rates": res.overlap_rates,
                "delta_L": res.delta_l,
                "clamped": res.clamped,
            }
        )
    return {"instruction": instruction_text, "results": entries}
