import numpy as np
import pytest

from designrecolor.bundle import DesignBundle, DesignElement
from designrecolor.synth import GeneratorConfig, generate_case, generate_dataset


def make_bundle(colors=((250, 210, 40), (240, 130, 30))):
    """Tiny hand-built bundle: blue background, one shape per given color,
    and a flat grey photo."""
    design = np.zeros((24, 32, 3), np.uint8)
    design[:] = (25, 70, 210)
    elements = [
        DesignElement(
            id="e0", cls="background", mask=np.ones((24, 32), bool), color=(25, 70, 210)
        )
    ]
    x = 2
    for i, col in enumerate(colors):
        mask = np.zeros((24, 32), bool)
        mask[2:8, x : x + 6] = True
        design[mask] = col
        elements[0].mask &= ~mask
        elements.append(
            DesignElement(id=f"e{i+1}", cls="shape-without-content", mask=mask, color=col)
        )
        x += 8
    photo = np.full((8, 10, 3), 90, np.uint8)
    design[14:22, 4:14] = photo
    elements[0].mask[14:22, 4:14] = False
    elements.append(
        DesignElement(
            id=f"e{len(elements)}",
            cls="photo",
            mask=np.pad(np.ones((8, 10), bool), ((14, 2), (4, 18)), constant_values=False),
        )
    )
    return DesignBundle(
        design=design, photo=photo, photo_rect=(4, 14, 10, 8), elements=elements
    ).validate()


@pytest.fixture(scope="session")
def clean_dataset(tmp_path_factory):
    """On-disk clean dataset with >= 500 instructions."""
    out = tmp_path_factory.mktemp("ds_clean") / "ds"
    cfg = GeneratorConfig(seed=2024, count=40)
    summary = generate_dataset(cfg, out)
    assert summary["total_instructions"] >= 500, summary["total_instructions"]
    return out


@pytest.fixture(scope="session")
def degraded_dataset(tmp_path_factory):
    """Same designs as clean_dataset, with compression-style degradation."""
    out = tmp_path_factory.mktemp("ds_degraded") / "ds"
    cfg = GeneratorConfig(seed=2024, count=40, degrade=True, degrade_strength=1.0)
    generate_dataset(cfg, out)
    return out


@pytest.fixture(scope="session")
def sample_cases():
    """A handful of in-memory generated cases for cheap reuse."""
    cfg = GeneratorConfig(seed=99)
    return [generate_case(cfg, i) for i in range(4)]


def natural_photo(name, size=256):
    """Real photograph at size x size, via block-mean downscale and crop."""
    import skimage.data

    img = getattr(skimage.data, name)()
    h, w = img.shape[:2]
    f = min(h, w) // size
    if f > 1:
        img = (
            img[: h // f * f, : w // f * f]
            .reshape(h // f, f, w // f, f, 3)
            .mean(axis=(1, 3))
            .round()
            .astype(np.uint8)
        )
    return img[:size, :size]


NATURAL_PHOTO_NAMES = ("astronaut", "chelsea", "coffee", "rocket", "immunohistochemistry")
