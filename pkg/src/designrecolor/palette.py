"""Convex-hull color palettes and additive soft color-layer decomposition.

The palette is the simplified convex hull of the photo's RGB cloud: edges
are greedily collapsed into a replacement point placed beyond every incident
facet plane, so the hull stays a superset of the cloud while adding minimal
volume; out-of-gamut vertices are clipped at the end.

Decomposition lifts pixels into (r, g, b, lx, ly) space, computes barycentric
weights over the Delaunay tessellation of that cloud's hull vertices, maps
each hull vertex onto the palette by RGB-space barycentric weights, and
composes the two sparse weight maps into per-pixel palette opacities.
"""

import math
import time
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import linprog, nnls
from scipy.spatial import ConvexHull, Delaunay, QhullError, cKDTree

from .colorcore import round_half_up
from .errors import PaletteError

DEFAULT_PALETTE_SIZE = 6
MAX_PALETTE_SIZE = 12
AUTO_MAX_SIZE = 10
AUTO_FIT_RMSE = 2.0 / 255.0
MAX_HULL_POINTS = 100_000

_RANK_RTOL = 1e-9
_BOX_LO, _BOX_HI = -2000.0, 2255.0


@dataclass
class Palette:
    colors: np.ndarray  # (N, 3) float64 within [0, 255]
    fit_rmse: float = 0.0
    warning: str | None = None

    def __post_init__(self):
        self.colors = np.asarray(self.colors, dtype=np.float64)
        n = len(self.colors)
        if n < 2 or n > MAX_PALETTE_SIZE:
            raise PaletteError(f"palette size {n} outside [2, {MAX_PALETTE_SIZE}]")
        d = np.linalg.norm(self.colors[:, None] - self.colors[None, :], axis=-1)
        np.fill_diagonal(d, np.inf)
        if d.min() < 1e-6:
            raise PaletteError("palette holds near-duplicate vertices")

    def __len__(self):
        return len(self.colors)


@dataclass
class SoftColorLayer:
    palette_index: int
    color: np.ndarray  # palette entry, float64
    alpha: np.ndarray  # (h, w) float64 in [0, 1]


@dataclass
class Decomposition:
    palette: Palette
    layers: list
    reconstruction_rmse: float
    # diagnostics
    weight_sum_error: float = 0.0
    min_weight_preclamp: float = 0.0
    max_snap_distance: float = 0.0
    max_palette_projection: float = 0.0
    elapsed: float = 0.0

    def alpha_stack(self):
        """(N, h, w) stacked opacity fields."""
        return np.stack([layer.alpha for layer in self.layers])


def _subspace(points, rtol=_RANK_RTOL):
    """Affine rank, mean and orthonormal basis of a point cloud.

    Full-rank clouds get basis=None so callers can skip the projection (a
    rotation that only slows hull computation and adds float noise).
    """
    pts = np.asarray(points, dtype=np.float64)
    mean = pts.mean(axis=0)
    centered = pts - mean
    # SVD of the covariance factors; rows of vt span the cloud
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s.size == 0 or s[0] < 1e-9:
        rank = 0
    else:
        rank = int(np.sum(s > s[0] * rtol))
    if rank == pts.shape[1]:
        return rank, mean, None
    return rank, mean, vt[:rank]


def _project(points, mean, basis):
    if basis is None:
        return np.asarray(points, dtype=np.float64)
    return (np.asarray(points, dtype=np.float64) - mean) @ basis.T


def _unproject(coords, mean, basis):
    if basis is None:
        return np.asarray(coords, dtype=np.float64)
    return mean + np.asarray(coords, dtype=np.float64) @ basis


def _facet_measures(hull):
    """d-1 dimensional measure of each triangulated hull facet."""
    pts = hull.points[hull.simplices]
    d = hull.points.shape[1]
    if d == 2:
        return np.linalg.norm(pts[:, 1] - pts[:, 0], axis=1)
    if d == 3:
        return 0.5 * np.linalg.norm(
            np.cross(pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0]), axis=1
        )
    edges = pts[:, 1:] - pts[:, :1]
    gram = edges @ edges.transpose(0, 2, 1)
    det = np.linalg.det(gram)
    k = pts.shape[1] - 1
    return np.sqrt(np.clip(det, 0, None)) / math.factorial(k)


def _solve_cone(cost, normals, offsets, dim):
    """Minimize cost.p subject to normals.p + offsets >= 0.

    The optimum of a pointed cone sits on an intersection of ``dim`` active
    planes, so enumerate those intersections; fall back to an LP solver for
    degenerate constraint sets.
    """
    k = len(normals)
    if k >= dim:
        idx = np.array(list(combinations(range(k), dim)))
        mats = normals[idx]
        rhs = -offsets[idx]
        det = np.abs(np.linalg.det(mats))
        ok = det > 1e-9
        if ok.any():
            sols = np.linalg.solve(mats[ok], rhs[ok][..., None])[..., 0]
            feas = (sols @ normals.T + offsets >= -1e-6).all(axis=1)
            feas &= (sols >= _BOX_LO).all(axis=1) & (sols <= _BOX_HI).all(axis=1)
            if feas.any():
                cand = sols[feas]
                return cand[int(np.argmin(cand @ cost))]
    res = linprog(
        cost,
        A_ub=-normals,
        b_ub=offsets,
        bounds=[(_BOX_LO, _BOX_HI)] * dim,
        method="highs",
    )
    return res.x if res.success else None


def _collapse_cost(hull, measures, u, v):
    """Least-added-volume replacement point for collapsing edge (u, v)."""
    incident = np.any(hull.simplices == u, axis=1) | np.any(hull.simplices == v, axis=1)
    eqs = hull.equations[incident]
    mes = measures[incident]
    dim = hull.points.shape[1]
    cost = (mes[:, None] * eqs[:, :dim]).sum(axis=0)
    p = _solve_cone(cost, eqs[:, :dim], eqs[:, dim], dim)
    if p is None:
        return np.inf, None
    added = float((mes * (eqs[:, :dim] @ p + eqs[:, dim])).sum()) / dim
    return added, p


def _hull_edges(hull):
    edges = set()
    for simplex in hull.simplices:
        for a, b in combinations(sorted(int(x) for x in simplex), 2):
            edges.add((a, b))
    return sorted(edges)


def _vertex_adjacency(hull):
    adj = {}
    for a, b in _hull_edges(hull):
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    return adj


def simplify_hull(points, n):
    """Collapse hull edges (least added volume first) until <= n vertices.

    Operates in the cloud's intrinsic dimension. Cached edge costs are
    invalidated only around each collapse, keyed by vertex coordinates.
    """
    pts = np.asarray(points, dtype=np.float64)
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise PaletteError(f"hull construction failed: {exc}") from exc
    verts = pts[hull.vertices]
    cache = {}
    while len(verts) > n:
        hull = ConvexHull(verts)
        verts = hull.points[hull.vertices]
        if len(verts) <= n:
            break
        measures = _facet_measures(hull)
        best = (np.inf, None, None)
        for u, v in _hull_edges(hull):
            key = (hull.points[u].tobytes(), hull.points[v].tobytes())
            if key in cache:
                cost, p = cache[key]
            else:
                cost, p = _collapse_cost(hull, measures, u, v)
                cache[key] = (cost, p)
            if cost < best[0] - 1e-12:
                best = (cost, (u, v), p)
        if best[1] is None:
            break
        u, v = best[1]
        adjacency = _vertex_adjacency(hull)
        touched = {u, v} | adjacency.get(u, set()) | adjacency.get(v, set())
        touched_keys = {hull.points[t].tobytes() for t in touched}
        cache = {
            key: val
            for key, val in cache.items()
            if key[0] not in touched_keys and key[1] not in touched_keys
        }
        keep = np.ones(len(hull.points), dtype=bool)
        keep[[u, v]] = False
        verts = np.vstack([hull.points[keep], best[2]])
    return verts


def _strided_sample(arr, cap):
    if len(arr) <= cap:
        return arr
    stride = int(np.ceil(len(arr) / cap))
    return arr[::stride]


def _fit_rmse(colors, vertices):
    """Hull-fit error estimate: signed plane distances of sampled colors."""
    sample = _strided_sample(colors, 5000)
    rank, mean, basis = _subspace(vertices)
    if rank == 0:
        dist = np.linalg.norm(sample - vertices[0], axis=1)
        return float(np.sqrt(np.mean(dist**2)) / 255.0)
    proj = _project(sample, mean, basis)
    vproj = _project(vertices, mean, basis)
    # out-of-subspace residual
    resid2 = np.sum((sample - _unproject(proj, mean, basis)) ** 2, axis=1)
    if rank == 1:
        lo, hi = vproj.min(), vproj.max()
        t = proj[:, 0]
        inplane = np.maximum(np.maximum(lo - t, t - hi), 0.0)
        d2 = inplane**2 + resid2
    else:
        hull = ConvexHull(vproj)
        signed = (proj @ hull.equations[:, :rank].T + hull.equations[:, rank]).max(axis=1)
        d2 = np.maximum(signed, 0.0) ** 2 + resid2
    return float(np.sqrt(np.mean(d2)) / 255.0)


def luma_order(colors):
    arr = np.asarray(colors, dtype=np.float64)
    luma = arr @ np.array([0.2126, 0.7152, 0.0722])
    return np.lexsort((-arr[:, 2], -arr[:, 1], -arr[:, 0], -luma))


def extract_palette(photo, n=DEFAULT_PALETTE_SIZE):
    """Palette of ``n`` colors (or ``"auto"``) from a photo raster."""
    flat = np.asarray(photo).reshape(-1, 3)
    flat = _strided_sample(flat, MAX_HULL_POINTS)
    colors = np.unique(flat.astype(np.float64), axis=0)
    if len(colors) < 2:
        raise PaletteError(
            "photo holds fewer than 2 distinct colors", code="degenerate-color-cloud"
        )
    rank, mean, basis = _subspace(colors)
    auto = n == "auto"
    if not auto:
        n = int(n)
        if n < 2 or n > MAX_PALETTE_SIZE:
            raise PaletteError(f"palette size {n} outside [2, {MAX_PALETTE_SIZE}]")

    warning = None
    if rank == 1:
        # principal segment: the two extreme colors
        t = _project(colors, mean, basis)[:, 0]
        verts = np.vstack([colors[np.argmin(t)], colors[np.argmax(t)]])
        if not auto and n > 2:
            warning = "degenerate color cloud: segment palette of 2 colors"
    else:
        proj = _project(colors, mean, basis)
        hull0 = ConvexHull(proj)
        if not auto and n > len(hull0.vertices):
            warning = f"requested {n} colors but the hull has {len(hull0.vertices)} vertices"
            verts_p = proj[hull0.vertices]
        elif auto:
            verts_p = None
            for size in range(max(rank + 1, 2), AUTO_MAX_SIZE + 1):
                cand = simplify_hull(proj, size)
                back = _unproject(cand, mean, basis)
                if _fit_rmse(colors, np.clip(back, 0.0, 255.0)) <= AUTO_FIT_RMSE:
                    verts_p = cand
                    break
            if verts_p is None:
                verts_p = simplify_hull(proj, AUTO_MAX_SIZE)
        else:
            verts_p = simplify_hull(proj, n)
        verts = _unproject(verts_p, mean, basis)

    verts = np.clip(verts, 0.0, 255.0)
    # clipping may merge vertices; drop near-duplicates, keeping first
    kept = []
    for v in verts:
        if all(np.linalg.norm(v - k) > 1e-6 for k in kept):
            kept.append(v)
    if len(kept) < len(verts):
        warning = warning or "gamut clipping merged palette vertices"
    verts = np.asarray(kept)
    verts = verts[luma_order(verts)]
    return Palette(colors=verts, fit_rmse=_fit_rmse(colors, verts), warning=warning)


def _barycentric_weights(tess, points, dim):
    """Per-point simplex ids and barycentric weights; repairs bad rows."""
    simplex = tess.find_simplex(points)
    safe = np.clip(simplex, 0, None)
    T = tess.transform[safe]
    bary = np.einsum("nij,nj->ni", T[:, :dim, :], points - T[:, dim, :])
    weights = np.concatenate([bary, (1.0 - bary.sum(axis=1))[:, None]], axis=1)
    vertex_ids = tess.simplices[safe]

    bad = (simplex < 0) | ~np.isfinite(weights).all(axis=1) | (weights.min(axis=1) < -1e-6)
    max_snap = 0.0
    if bad.any():
        bad_idx = np.flatnonzero(bad)
        retry = tess.find_simplex(points[bad_idx], bruteforce=True, tol=1e-8)
        tree = cKDTree(tess.points)
        for j, pi in enumerate(bad_idx):
            si = int(retry[j])
            if si < 0:
                _, nearest = tree.query(points[pi])
                si = int(tess.vertex_to_simplex[nearest])
            T = tess.transform[si]
            b = T[:dim, :] @ (points[pi] - T[dim, :])
            w = np.concatenate([b, [1.0 - b.sum()]])
            w = np.clip(w, 0.0, None)
            s = w.sum()
            w = w / s if s > 0 else np.full(dim + 1, 1.0 / (dim + 1))
            snapped = w @ tess.points[tess.simplices[si]]
            max_snap = max(max_snap, float(np.linalg.norm(snapped - points[pi])))
            weights[pi] = w
            vertex_ids[pi] = tess.simplices[si]
    return vertex_ids, weights, max_snap


def _segment_weights(coords, lo, hi):
    """1D barycentric interpolation between two endpoint coordinates."""
    span = hi - lo
    t = np.clip((coords - lo) / span, 0.0, 1.0) if span > 1e-12 else np.zeros_like(coords)
    return np.stack([1.0 - t, t], axis=1)


def _palette_weights(vertex_rgb, palette):
    """RGB-space barycentric weights of each vertex over the palette."""
    pal = palette.colors
    n_pal = len(pal)
    rank, mean, basis = _subspace(pal)
    proj = _project(vertex_rgb, mean, basis)
    resid = vertex_rgb - _unproject(proj, mean, basis)
    out_of_plane = np.linalg.norm(resid, axis=1)
    W = np.zeros((len(vertex_rgb), n_pal))
    max_proj = float(out_of_plane.max()) if len(out_of_plane) else 0.0

    if rank == 0:
        W[:, 0] = 1.0
        dist = np.linalg.norm(vertex_rgb - pal[0], axis=1)
        return W, float(dist.max())

    pproj = _project(pal, mean, basis)
    if rank == 1:
        order = np.argsort(pproj[:, 0], kind="stable")
        coords = proj[:, 0]
        seg = np.clip(np.searchsorted(pproj[order, 0], coords) - 1, 0, n_pal - 2)
        lo = pproj[order, 0][seg]
        hi = pproj[order, 0][seg + 1]
        span = np.maximum(hi - lo, 1e-12)
        tt = np.clip((coords - lo) / span, 0.0, 1.0)
        rows = np.arange(len(coords))
        W[rows, order[seg]] = 1.0 - tt
        W[rows, order[seg + 1]] += tt
        recon = W @ pal
        dist = np.linalg.norm(recon - vertex_rgb, axis=1)
        return W, float(dist.max()) if len(dist) else 0.0

    tess = Delaunay(pproj)
    simplex = tess.find_simplex(proj)
    inside = simplex >= 0
    if inside.any():
        T = tess.transform[simplex[inside]]
        bary = np.einsum("nij,nj->ni", T[:, :rank, :], proj[inside] - T[:, rank, :])
        wfull = np.concatenate([bary, (1.0 - bary.sum(axis=1))[:, None]], axis=1)
        neg = wfull.min(axis=1) < -1e-9
        rows = np.flatnonzero(inside)
        cols = tess.simplices[simplex[inside]]
        for r, c, w, bad in zip(rows, cols, wfull, neg):
            if not bad:
                W[r, c] = w
        inside_ok = np.zeros(len(proj), dtype=bool)
        inside_ok[rows[~neg]] = True
    else:
        inside_ok = np.zeros(len(proj), dtype=bool)

    # vertices outside the simplified palette hull: simplex-constrained
    # least squares projection
    K = 1e4
    A = np.vstack([pproj.T, np.full(n_pal, K)])
    for r in np.flatnonzero(~inside_ok):
        sol, _ = nnls(A, np.concatenate([proj[r], [K]]))
        total = sol.sum()
        if total > 0:
            sol = sol / total
        else:
            sol = np.full(n_pal, 1.0 / n_pal)
        W[r] = sol
        recon = sol @ pproj
        d = np.sqrt(np.sum((recon - proj[r]) ** 2) + out_of_plane[r] ** 2)
        max_proj = max(max_proj, float(d))
    return W, max_proj


def decompose_layers(photo, palette, spatial_scale=None):
    """Decompose a photo into additive soft layers, one per palette color."""
    t_start = time.perf_counter()
    photo = np.asarray(photo, dtype=np.uint8)
    h, w = photo.shape[:2]
    lam = spatial_scale if spatial_scale is not None else 255.0 / max(h, w)
    yy, xx = np.mgrid[0:h, 0:w]
    pts5 = np.column_stack(
        [
            photo.reshape(-1, 3).astype(np.float64),
            (lam * xx).ravel(),
            (lam * yy).ravel(),
        ]
    )

    rank, mean, basis = _subspace(pts5)
    if rank == 0:
        raise PaletteError("photo is a single constant color", code="degenerate-tessellation")
    proj = _project(pts5, mean, basis)
    max_snap = 0.0
    if rank == 1:
        coords = proj[:, 0]
        imin, imax = int(np.argmin(coords)), int(np.argmax(coords))
        vertex_ids = np.repeat([[0, 1]], len(coords), axis=0)
        weights = _segment_weights(coords, coords[imin], coords[imax])
        hull_vertices = np.array([imin, imax])
    else:
        try:
            hull = ConvexHull(proj)
            tess = Delaunay(proj[hull.vertices])
        except QhullError as exc:
            raise PaletteError(
                f"degenerate point cloud: {exc}", code="degenerate-tessellation"
            ) from exc
        vertex_ids, weights, max_snap = _barycentric_weights(tess, proj, rank)
        hull_vertices = hull.vertices

    vertex_rgb = pts5[hull_vertices][:, :3]
    W2, max_proj = _palette_weights(vertex_rgb, palette)

    n_pal = len(palette)
    npix = len(pts5)
    alphas = np.zeros((npix, n_pal))
    for j in range(weights.shape[1]):
        alphas += weights[:, j : j + 1] * W2[vertex_ids[:, j]]

    min_pre = float(alphas.min())
    sums = alphas.sum(axis=1)
    sum_err = float(np.abs(sums - 1.0).max())
    alphas = np.clip(alphas, 0.0, None)
    alphas /= alphas.sum(axis=1, keepdims=True)

    layers = [
        SoftColorLayer(
            palette_index=i,
            color=palette.colors[i].copy(),
            alpha=alphas[:, i].reshape(h, w),
        )
        for i in range(n_pal)
    ]
    recon = alphas @ palette.colors
    rmse = float(
        np.sqrt(np.mean((recon - photo.reshape(-1, 3).astype(np.float64)) ** 2)) / 255.0
    )
    return Decomposition(
        palette=palette,
        layers=layers,
        reconstruction_rmse=rmse,
        weight_sum_error=sum_err,
        min_weight_preclamp=min_pre,
        max_snap_distance=max_snap,
        max_palette_projection=max_proj,
        elapsed=time.perf_counter() - t_start,
    )


def reconstruct_image(decomposition):
    """Sum of alpha-weighted layer colors, rounded to 8-bit RGB."""
    first = decomposition.layers[0].alpha
    acc = np.zeros((*first.shape, 3))
    for layer in decomposition.layers:
        acc += layer.alpha[..., None] * layer.color
    return round_half_up(np.clip(acc, 0.0, 255.0)).astype(np.uint8)
