"""Deterministic source-color prediction from annotated design elements.

Per element: select pixels above the adaptive mask-mean threshold, bucket
their unique colors into 6x6x6 histogram bins, score bins class-aware (max
member count for text-like elements, summed counts for filled ones), refine
each surviving bin to a weighted-mean color with a relative-dominance
confidence, then merge across elements.
"""

from dataclasses import dataclass, field

import numpy as np

from .bundle import is_text_based
from .colorcore import (
    NONE_TERM,
    classify_color_term,
    pack_rgb,
    round_half_up,
    unpack_rgb,
)
from .errors import PredictionError

TOP_K_BASE_COLORS = 10
DEFAULT_CONFIDENCE_THRESHOLD = 0.55
# the looser test-time gate also in common use
LENIENT_CONFIDENCE_THRESHOLD = 0.5


@dataclass
class BaseColorCandidate:
    color: tuple
    bin: tuple  # (i, j, k) histogram bin coordinates
    pixel_count: int
    bin_score: int
    # bin membership, kept for the refinement step
    member_colors: np.ndarray = field(repr=False, default=None)
    member_counts: np.ndarray = field(repr=False, default=None)


@dataclass
class SourceColor:
    color: tuple
    confidence: float
    element_id: str
    bin: tuple


@dataclass
class SourceColorSet:
    colors: list  # SourceColor, descending confidence
    threshold: float
    granularity: str


def candidate_pixels(bundle, element):
    """Design pixels whose mask value exceeds the mask mean.

    Returns (flat_indices, colors). For a binary mask this is exactly the
    masked-in pixels whenever coverage is below 100%.
    """
    mask = np.asarray(element.mask, dtype=np.float64)
    v = float(mask.mean())
    sel = mask.ravel() > v
    if not sel.any():
        raise PredictionError(
            f"element {element.id}: mask is uniform, no pixels above its mean",
            code="empty-selection",
        )
    idx = np.flatnonzero(sel)
    colors = bundle.design.reshape(-1, 3)[idx]
    return idx, colors


def vote_base_colors(flat_indices, colors, cls, k=TOP_K_BASE_COLORS):
    """Class-aware histogram voting over unique candidate colors.

    Bins are ranked by score (max unique-color count for text-based classes,
    summed counts for filled ones); each of the top-k bins contributes its
    most frequent unique color, ties broken by first row-major occurrence.
    """
    packed = pack_rgb(colors)
    order = np.argsort(packed, kind="stable")
    sp = packed[order]
    sidx = np.asarray(flat_indices)[order]
    starts = np.flatnonzero(np.concatenate(([True], sp[1:] != sp[:-1])))
    uniq = sp[starts]
    counts = np.diff(np.concatenate((starts, [sp.size])))
    # first occurrence = smallest flat index among equal colors
    first = np.minimum.reduceat(sidx, starts)

    rgb = unpack_rgb(uniq)
    bins = rgb.astype(np.int64) * 6 // 256
    bkey = (bins[:, 0] * 6 + bins[:, 1]) * 6 + bins[:, 2]

    border = np.argsort(bkey, kind="stable")
    bk = bkey[border]
    bstarts = np.flatnonzero(np.concatenate(([True], bk[1:] != bk[:-1])))
    text = is_text_based(cls)

    cands = []
    tiebreak = []
    for gi, s in enumerate(bstarts):
        e = bstarts[gi + 1] if gi + 1 < len(bstarts) else bk.size
        members = border[s:e]
        mcounts = counts[members]
        mfirst = first[members]
        score = int(mcounts.max()) if text else int(mcounts.sum())
        # representative: most pixels, then earliest occurrence
        best = np.lexsort((mfirst, -mcounts))[0]
        rep = members[best]
        cands.append(
            BaseColorCandidate(
                color=tuple(int(c) for c in rgb[rep]),
                bin=tuple(int(b) for b in bins[rep]),
                pixel_count=int(counts[rep]),
                bin_score=score,
                member_colors=rgb[members],
                member_counts=mcounts,
            )
        )
        tiebreak.append(int(mfirst.min()))
    # rank bins: score desc, then earliest member occurrence (order independent)
    ranked = sorted(range(len(cands)), key=lambda i: (-cands[i].bin_score, tiebreak[i]))
    return [cands[i] for i in ranked[:k]]


def refine_source_color(element, cand, max_bin_score, attr=NONE_TERM):
    """Weighted bin-mean color with relative-dominance confidence."""
    w = cand.member_counts.astype(np.float64)
    mean = (cand.member_colors.astype(np.float64) * w[:, None]).sum(axis=0) / w.sum()
    final = tuple(int(v) for v in round_half_up(mean))
    confidence = cand.bin_score / float(max_bin_score) if max_bin_score > 0 else 0.0
    if attr != NONE_TERM and classify_color_term(final) != attr:
        confidence = 0.0
    return SourceColor(
        color=final, confidence=confidence, element_id=element.id, bin=cand.bin
    )


def element_source_colors(bundle, element, attr=NONE_TERM, k=TOP_K_BASE_COLORS):
    idx, colors = candidate_pixels(bundle, element)
    cands = vote_base_colors(idx, colors, element.cls, k=k)
    top = max(c.bin_score for c in cands)
    return [refine_source_color(element, c, top, attr=attr) for c in cands]


def dominant_color(bundle, element):
    """Top voted color of an element, used when no annotation is present."""
    return element_source_colors(bundle, element)[0].color


def predict_source_colors(
    bundle, source, threshold=DEFAULT_CONFIDENCE_THRESHOLD, k=TOP_K_BASE_COLORS
):
    """Resolve a source descriptor to confident colors.

    Fine-granularity descriptors return exactly the top color; coarse ones
    return every color whose confidence clears the threshold. Colors falling
    into the same histogram bin are merged keeping the highest confidence.
    """
    from .instructions import granularity_of  # local import: avoids cycle

    granularity = granularity_of(bundle, source)  # raises no-matching-element
    elements = bundle.elements_of(source.cls, source.attr)

    merged = {}
    order = []
    for el in elements:
        for sc in element_source_colors(bundle, el, attr=source.attr, k=k):
            key = sc.bin
            if key not in merged:
                merged[key] = sc
                order.append(key)
            elif sc.confidence > merged[key].confidence:
                merged[key] = sc

    ranked = sorted(order, key=lambda key: -merged[key].confidence)
    survivors = [merged[key] for key in ranked if merged[key].confidence > threshold]
    if not survivors:
        raise PredictionError(
            f"no color above confidence {threshold} for {source.cls}",
            code="no-confident-color",
        )
    if granularity == "fine":
        survivors = survivors[:1]
    return SourceColorSet(colors=survivors, threshold=threshold, granularity=granularity)


def prediction_report(instruction_text, result):
    """The report document exchanged with the CLI, service and UI."""
    return {
        "instruction": instruction_text,
        "granularity": result.granularity,
        "threshold": result.threshold,
        "colors": [
            {
                "rgb": list(sc.color),
                "confidence": sc.confidence,
                "element_id": sc.element_id,
            }
            for sc in result.colors
        ],
    }
