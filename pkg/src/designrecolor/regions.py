"""Target-region masks: initial providers, edge-aware soft refinement, and
pairing of soft color layers with the foreground/background split.

Refinement minimizes a KNN-affinity smoothness term anchored to the initial
mask: sum over feature-space neighbor pairs of w_pq (m_p - m_q)^2 plus
mu * c_p (m_p - init_p)^2, where confidence c_p is high on the eroded mask
interior and outside the dilated mask, and low in the uncertain band.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import ndimage
from scipy.spatial import cKDTree

from .colorcore import NONE_TERM, classify_color_terms
from .errors import MaskError, RefineError

KNN_K = 10
DATA_WEIGHT = 10.0  # mu
ERODE_RADIUS = 3
DILATE_RADIUS = 5
BAND_CONFIDENCE = 0.05
SOLVER_RTOL = 1e-4
SOLVER_MAXITER = 2000
SEED_MORPH_RADIUS = 2
SEED_MIN_AREA_FRAC = 0.01


@dataclass
class InitialRegionMask:
    mask: np.ndarray  # bool, photo-sized
    provider: str  # annotation | color-seed | user-supplied


@dataclass
class SoftRegionMasks:
    m_f: np.ndarray
    m_b: np.ndarray
    converged: bool = True


@dataclass
class SemanticColorLayer:
    palette_index: int
    side: str  # foreground | background
    color: np.ndarray
    alpha: np.ndarray


def _disk(radius):
    y, x = np.ogrid[-radius : radius + 1, -radius : radius + 1]
    return x * x + y * y <= radius * radius


def initial_mask(photo, region, user_mask=None, objects=None):
    """Initial binary region mask for a region descriptor.

    Provider priority: an explicit user mask, then an annotated photo object
    whose phrase matches, then color seeding from the region's color
    adjective.
    """
    photo = np.asarray(photo)
    if user_mask is not None:
        mask = np.asarray(user_mask).astype(bool)
        if mask.shape != photo.shape[:2]:
            raise MaskError("user mask does not match photo dimensions", code="dimension-mismatch")
        if not mask.any():
            raise MaskError("user mask is empty", code="empty-mask")
        return InitialRegionMask(mask=mask, provider="user-supplied")

    for obj in objects or []:
        if obj.phrase.strip().lower() == region.phrase.strip().lower():
            return InitialRegionMask(mask=obj.mask.astype(bool), provider="annotation")

    if region.color_adj == NONE_TERM:
        raise MaskError(
            f"no mask provider for region {region.phrase!r}: no color adjective, "
            "no user mask, no matching annotation",
            code="no-provider",
        )
    terms = classify_color_terms(photo.reshape(-1, 3)).reshape(photo.shape[:2])
    seed = terms == region.color_adj
    structure = _disk(SEED_MORPH_RADIUS)
    seed = ndimage.binary_opening(seed, structure=structure)
    seed = ndimage.binary_closing(seed, structure=structure)
    labels, count = ndimage.label(seed)
    if count:
        sizes = ndimage.sum_labels(seed, labels, index=np.arange(1, count + 1))
        min_px = SEED_MIN_AREA_FRAC * photo.shape[0] * photo.shape[1]
        keep = np.flatnonzero(sizes >= min_px) + 1
        seed = np.isin(labels, keep)
    if not seed.any():
        raise MaskError(
            f"color seed {region.color_adj!r} selected no region", code="empty-mask"
        )
    return InitialRegionMask(mask=seed, provider="color-seed")


class PhotoGraph:
    """KNN-affinity Laplacian over (r, g, b, lx, ly) pixel features.

    Built once per photo and reused across refinements; the solve itself is
    cheap compared to the neighbor search.
    """

    def __init__(self, photo, k=KNN_K, spatial_scale=None):
        photo = np.asarray(photo, dtype=np.uint8)
        h, w = photo.shape[:2]
        lam = spatial_scale if spatial_scale is not None else 255.0 / max(h, w)
        yy, xx = np.mgrid[0:h, 0:w]
        feats = np.column_stack(
            [
                photo.reshape(-1, 3).astype(np.float64),
                (lam * xx).ravel(),
                (lam * yy).ravel(),
            ]
        )
        n = feats.shape[0]
        tree = cKDTree(feats)
        dist, idx = tree.query(feats, k=k + 1, workers=-1)
        dist, idx = dist[:, 1:], idx[:, 1:]
        # median heuristic over a deterministic sample of edge distances
        flat = dist.ravel()
        sample = flat[:: max(1, flat.size // 10_000)]
        sigma = max(float(np.median(sample)), 1e-6)
        wgt = np.exp(-(dist**2) / (2.0 * sigma * sigma))
        rows = np.repeat(np.arange(n), k)
        W = sp.coo_matrix((wgt.ravel(), (rows, idx.ravel())), shape=(n, n)).tocsr()
        W = (W + W.T) * 0.5
        self.shape = (h, w)
        self.sigma = sigma
        self.laplacian = (sp.diags(np.asarray(W.sum(axis=1)).ravel()) - W).tocsr()


def refine_soft_mask(photo, init, graph=None, mu=DATA_WEIGHT):
    """Soft foreground/background masks from an initial binary mask."""
    photo = np.asarray(photo)
    mask = np.asarray(init.mask if isinstance(init, InitialRegionMask) else init).astype(bool)
    if mask.shape != photo.shape[:2]:
        raise RefineError("initial mask does not match photo", code="dimension-mismatch")
    if not mask.any():
        raise RefineError("initial mask is empty", code="empty-mask")

    interior = ndimage.binary_erosion(mask, structure=_disk(ERODE_RADIUS))
    outside = ~ndimage.binary_dilation(mask, structure=_disk(DILATE_RADIUS))
    if not outside.any():
        raise RefineError(
            "initial mask covers the photo: no confident background remains",
            code="degenerate-mask",
        )

    if graph is None:
        graph = PhotoGraph(photo)
    if graph.shape != photo.shape[:2]:
        raise RefineError("photo graph does not match photo", code="dimension-mismatch")

    conf = np.full(mask.shape, BAND_CONFIDENCE)
    conf[interior] = 1.0
    conf[outside] = 1.0
    c = conf.ravel()
    target = mask.ravel().astype(np.float64)

    A = graph.laplacian + mu * sp.diags(c)
    b = mu * c * target
    precond = sp.diags(1.0 / A.diagonal())
    x, info = spla.cg(
        A,
        b,
        x0=target,
        rtol=SOLVER_RTOL,
        atol=0.0,
        maxiter=SOLVER_MAXITER,
        M=precond,
    )
    converged = info == 0
    if not converged:
        warnings.warn("soft mask solver hit the iteration cap; using best iterate")
    m_f = np.clip(x.reshape(mask.shape), 0.0, 1.0)
    return SoftRegionMasks(m_f=m_f, m_b=1.0 - m_f, converged=converged)


def build_semantic_layers(decomposition, soft):
    """Pair every soft color layer with both soft region masks (Q = 2N).

    Foreground layers come first (by palette index), then background layers.
    """
    first = decomposition.layers[0].alpha
    if soft.m_f.shape != first.shape:
        raise RefineError(
            "soft masks and decomposition cover different rasters",
            code="dimension-mismatch",
        )
    out = []
    for side, m in (("foreground", soft.m_f), ("background", soft.m_b)):
        for layer in decomposition.layers:
            out.append(
                SemanticColorLayer(
                    palette_index=layer.palette_index,
                    side=side,
                    color=layer.color.copy(),
                    alpha=layer.alpha * m,
                )
            )
    return out
