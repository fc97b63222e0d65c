import numpy as np
import pytest

from designrecolor.errors import MaskError, RefineError
from designrecolor.instructions import RegionDescriptor
from designrecolor.palette import Palette, decompose_layers
from designrecolor.regions import (
    PhotoGraph,
    build_semantic_layers,
    initial_mask,
    refine_soft_mask,
)
from designrecolor.synth import generate_photo


def two_region_photo(size=32):
    img = np.zeros((size, size, 3), np.uint8)
    img[:, : size // 2] = (25, 70, 210)
    img[:, size // 2 :] = (250, 210, 40)
    init = np.zeros((size, size), bool)
    init[:, : size // 2] = True
    return img, init


def test_initial_mask_user_passthrough():
    img, init = two_region_photo()
    out = initial_mask(img, RegionDescriptor(phrase="thing"), user_mask=init)
    assert out.provider == "user-supplied"
    assert np.array_equal(out.mask, init)


def test_initial_mask_annotation_match():
    rng = np.random.default_rng(2)
    photo, objects = generate_photo(rng, (64, 80))
    assert objects
    obj = objects[0]
    out = initial_mask(photo, RegionDescriptor(phrase=obj.phrase.upper()), objects=objects)
    assert out.provider == "annotation"
    assert np.array_equal(out.mask, obj.mask)


def test_initial_mask_color_seed_iou():
    from designrecolor.colorcore import classify_color_term

    hits = 0
    total = 0
    for seed in range(6):
        rng = np.random.default_rng([13, seed])
        photo, objects = generate_photo(rng, (72, 96))
        for obj in objects:
            term = classify_color_term(obj.color)
            try:
                out = initial_mask(photo, RegionDescriptor(phrase=obj.phrase, color_adj=term))
            except MaskError:
                continue
            total += 1
            inter = (out.mask & obj.mask).sum()
            union = (out.mask | obj.mask).sum()
            if inter / union >= 0.5:
                hits += 1
    assert total >= 6
    assert hits / total >= 0.8, (hits, total)


def test_initial_mask_no_provider():
    img, _ = two_region_photo()
    with pytest.raises(MaskError) as exc:
        initial_mask(img, RegionDescriptor(phrase="sofa"))
    assert exc.value.code == "no-provider"


def test_initial_mask_empty_seed():
    img, _ = two_region_photo()
    with pytest.raises(MaskError) as exc:
        initial_mask(img, RegionDescriptor(phrase="sofa", color_adj="pink"))
    assert exc.value.code == "empty-mask"


def test_refine_sharp_boundary_stays_near_init():
    img, init = two_region_photo(40)
    soft = refine_soft_mask(img, init)
    assert soft.converged
    assert np.abs(soft.m_f - init.astype(float)).max() <= 0.02
    assert np.array_equal(soft.m_b, 1.0 - soft.m_f)


def test_refine_constant_image_data_term_dominates():
    img = np.full((16, 16, 3), 120, np.uint8)
    init = np.zeros((16, 16), bool)
    init[4:12, 4:12] = True
    soft = refine_soft_mask(img, init)
    from scipy import ndimage

    from designrecolor.regions import DILATE_RADIUS, ERODE_RADIUS, _disk

    interior = ndimage.binary_erosion(init, structure=_disk(ERODE_RADIUS))
    outside = ~ndimage.binary_dilation(init, structure=_disk(DILATE_RADIUS))
    confident = interior | outside
    assert np.abs(soft.m_f - init.astype(float))[confident].max() <= 0.1


def test_refine_all_ones_rejected():
    img, _ = two_region_photo(20)
    with pytest.raises(RefineError) as exc:
        refine_soft_mask(img, np.ones((20, 20), bool))
    assert exc.value.code == "degenerate-mask"


def test_refine_monotone_safe_on_composites():
    violations = 0
    checked = 0
    for seed in range(4):
        rng = np.random.default_rng([29, seed])
        photo, objects = generate_photo(rng, (64, 80))
        if not objects:
            continue
        init = objects[0].mask
        if not init.any() or init.all():
            continue
        soft = refine_soft_mask(photo, init)
        from scipy import ndimage

        from designrecolor.regions import ERODE_RADIUS, _disk

        interior = ndimage.binary_erosion(init, structure=_disk(ERODE_RADIUS))
        checked += int(interior.sum())
        violations += int((soft.m_f[interior] < 0.5).sum())
    assert checked > 0
    assert violations / checked <= 0.01


def test_refine_determinism_and_graph_reuse():
    img, init = two_region_photo(24)
    graph = PhotoGraph(img)
    a = refine_soft_mask(img, init, graph=graph)
    b = refine_soft_mask(img, init, graph=graph)
    c = refine_soft_mask(img, init)
    assert np.array_equal(a.m_f, b.m_f)
    assert np.array_equal(a.m_f, c.m_f)


def make_soft(img, init):
    return refine_soft_mask(img, init)


def test_semantic_layers_counts_and_sum():
    img, init = two_region_photo(24)
    pal = Palette(colors=np.array([[25, 70, 210], [250, 210, 40]], float))
    dec = decompose_layers(img, pal)
    soft = make_soft(img, init)
    layers = build_semantic_layers(dec, soft)
    assert len(layers) == 2 * len(pal)
    assert [l.side for l in layers] == ["foreground"] * 2 + ["background"] * 2
    total = sum(l.alpha for l in layers)
    assert np.abs(total - 1.0).max() <= 1e-4


def test_semantic_layers_q_is_2n():
    rng = np.random.default_rng(11)
    photo, _ = generate_photo(rng, (48, 64))
    from designrecolor.palette import extract_palette

    pal = extract_palette(photo, 6)
    dec = decompose_layers(photo, pal)
    init = np.zeros(photo.shape[:2], bool)
    init[10:30, 10:30] = True
    layers = build_semantic_layers(dec, refine_soft_mask(photo, init))
    assert len(layers) == 12


def test_semantic_layers_full_foreground():
    img, init = two_region_photo(24)
    pal = Palette(colors=np.array([[25, 70, 210], [250, 210, 40]], float))
    dec = decompose_layers(img, pal)

    class Ones:
        m_f = np.ones(img.shape[:2])
        m_b = np.zeros(img.shape[:2])

    layers = build_semantic_layers(dec, Ones())
    for lay, orig in zip(layers[:2], dec.layers):
        assert np.array_equal(lay.alpha, orig.alpha)
    for lay in layers[2:]:
        assert not lay.alpha.any()


def test_semantic_layers_preserve_reconstruction():
    img, init = two_region_photo(24)
    pal = Palette(colors=np.array([[25, 70, 210], [250, 210, 40]], float))
    dec = decompose_layers(img, pal)
    soft = make_soft(img, init)
    layers = build_semantic_layers(dec, soft)
    direct = sum(l.alpha[..., None] * l.color for l in dec.layers)
    paired = sum(l.alpha[..., None] * l.color for l in layers)
    assert np.abs(direct - paired).max() <= 1e-6
