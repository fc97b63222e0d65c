"""Exact color arithmetic shared across the pipeline.

sRGB <-> CIE Lab conversion (D65, 2-degree observer), classification of RGB
values into the 11 basic color terms, and the uniform 6x6x6 histogram binning
used by the voting stage. All functions are pure; array variants operate on
float64 and accept any (..., 3) shape.
"""

from dataclasses import dataclass

import numpy as np

# The 11 basic color terms; "none" is admitted only as an absent attribute.
COLOR_TERMS = (
    "blue",
    "brown",
    "green",
    "orange",
    "pink",
    "purple",
    "red",
    "yellow",
    "black",
    "grey",
    "white",
)
NONE_TERM = "none"

HIST_BINS = 6  # per-axis histogram bins used for color voting

# sRGB <-> XYZ (D65), Lindbloom constants.
_RGB2XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ2RGB = np.linalg.inv(_RGB2XYZ)
_WHITE = np.array([0.95047, 1.0, 1.08883])
_DELTA = 6.0 / 29.0


def round_half_up(x):
    """Round floats to nearest integer with exact halves going up."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def _as_float_rgb(rgb):
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.shape[-1] != 3:
        raise ValueError("expected RGB data with a trailing axis of size 3")
    return arr


def rgb_to_lab(rgb):
    """Convert 8-bit sRGB values (0..255) to CIE Lab. Shape-preserving."""
    arr = _as_float_rgb(rgb) / 255.0
    lin = np.where(arr > 0.04045, ((arr + 0.055) / 1.055) ** 2.4, arr / 12.92)
    xyz = lin @ _RGB2XYZ.T
    t = xyz / _WHITE
    f = np.where(t > _DELTA**3, np.cbrt(t), t / (3 * _DELTA**2) + 4.0 / 29.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def lab_to_rgb_float(lab):
    """Invert rgb_to_lab without rounding.

    Returns (rgb, clipped): rgb as float64 in [0, 255], clipped True where a
    channel fell outside the gamut before clamping.
    """
    arr = np.asarray(lab, dtype=np.float64)
    fy = (arr[..., 0] + 16.0) / 116.0
    fx = fy + arr[..., 1] / 500.0
    fz = fy - arr[..., 2] / 200.0
    f = np.stack([fx, fy, fz], axis=-1)
    t = np.where(f > _DELTA, f**3, 3 * _DELTA**2 * (f - 4.0 / 29.0))
    lin = (t * _WHITE) @ _XYZ2RGB.T
    clipped = np.any((lin < -1e-9) | (lin > 1.0 + 1e-9), axis=-1)
    lin = np.clip(lin, 0.0, None)
    srgb = np.where(lin > 0.0031308, 1.055 * lin ** (1 / 2.4) - 0.055, 12.92 * lin)
    return np.clip(srgb * 255.0, 0.0, 255.0), clipped


def lab_to_rgb(lab):
    """Invert rgb_to_lab; out-of-gamut channels clamp to [0, 255]."""
    rgb, _ = lab_to_rgb_float(lab)
    return round_half_up(rgb).astype(np.uint8)


def lightness(rgb):
    """CIE L of an sRGB color, in [0, 100]."""
    return rgb_to_lab(rgb)[..., 0]


@dataclass(frozen=True)
class TermRules:
    """Thresholds of the hue/saturation/lightness rule table.

    Calibrated against a hand-labeled list of common named colors; override
    individual fields for custom vocabularies.
    """

    achromatic_sat: float = 0.12
    black_light: float = 0.18
    white_light: float = 0.85
    # chromatic hue bands [start, end) in degrees; red wraps around 0
    bands: tuple = (
        ("red", 345.0, 15.0),
        ("orange", 15.0, 45.0),
        ("yellow", 45.0, 70.0),
        ("green", 70.0, 165.0),
        ("blue", 165.0, 255.0),
        ("purple", 255.0, 290.0),
        ("pink", 290.0, 345.0),
    )
    brown_hue: tuple = (10.0, 50.0)
    brown_light: float = 0.35
    pink_light: float = 0.75


DEFAULT_TERM_RULES = TermRules()


def rgb_to_hsl(rgb):
    """Hue (deg), saturation and lightness in HSL space, vectorized."""
    arr = _as_float_rgb(rgb) / 255.0
    cmax = arr.max(axis=-1)
    cmin = arr.min(axis=-1)
    light = (cmax + cmin) / 2.0
    d = cmax - cmin
    denom = 1.0 - np.abs(2.0 * light - 1.0)
    sat = np.where(denom > 1e-12, d / np.maximum(denom, 1e-12), 0.0)
    sat = np.where(d > 1e-12, sat, 0.0)

    r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
    safe_d = np.where(d > 1e-12, d, 1.0)
    hr = ((g - b) / safe_d) % 6.0
    hg = (b - r) / safe_d + 2.0
    hb = (r - g) / safe_d + 4.0
    hue = np.where(cmax == r, hr, np.where(cmax == g, hg, hb)) * 60.0
    hue = np.where(d > 1e-12, hue % 360.0, 0.0)
    return hue, sat, light


def classify_color_terms(rgb, rules=DEFAULT_TERM_RULES):
    """Map RGB values to basic color terms. Returns an object array of str."""
    hue, sat, light = rgb_to_hsl(rgb)
    hue = np.atleast_1d(hue)
    sat = np.atleast_1d(sat)
    light = np.atleast_1d(light)

    out = np.full(hue.shape, "grey", dtype=object)
    for name, lo, hi in rules.bands:
        if lo > hi:  # wrap-around band
            inb = (hue >= lo) | (hue < hi)
        else:
            inb = (hue >= lo) & (hue < hi)
        out[inb] = name

    # overrides on the chromatic result
    base_warm = (out == "orange") | (out == "red")
    brown = base_warm & (hue >= rules.brown_hue[0]) & (hue < rules.brown_hue[1])
    out[brown & (light < rules.brown_light)] = "brown"
    out[(out == "red") & (light > rules.pink_light)] = "pink"

    achrom = sat < rules.achromatic_sat
    out[achrom] = "grey"
    out[achrom & (light < rules.black_light)] = "black"
    out[achrom & (light > rules.white_light)] = "white"
    return out


def classify_color_term(rgb, rules=DEFAULT_TERM_RULES):
    """Basic color term of a single RGB triple."""
    return str(classify_color_terms(np.asarray(rgb).reshape(1, 3), rules)[0])


def bin_index(rgb):
    """Uniform histogram bin coordinates, floor(channel * 6 / 256) per axis."""
    arr = np.asarray(rgb, dtype=np.int64)
    return arr * HIST_BINS // 256


def bin_key(rgb):
    """Bin coordinates of one color packed into a single integer."""
    i, j, k = (int(v) for v in bin_index(rgb))
    return (i * HIST_BINS + j) * HIST_BINS + k


def pack_rgb(rgb):
    """Pack (..., 3) uint8 colors into int32 keys for fast unique counting."""
    arr = np.asarray(rgb, dtype=np.int64)
    return (arr[..., 0] << 16) | (arr[..., 1] << 8) | arr[..., 2]


def unpack_rgb(keys):
    keys = np.asarray(keys, dtype=np.int64)
    return np.stack([(keys >> 16) & 255, (keys >> 8) & 255, keys & 255], axis=-1).astype(
        np.uint8
    )
