"""
Procedural "glyph face" renderer and the matching attribute probes.

Drawing happens in canonical coordinates (u, v) in [0, 1]², u to the right and
v downwards. Each pixel centre q is mapped back through the per-identity
jitter (offset ±2 %, scale ±1.5 %) to a canonical point p, so a pixel never
moves more than 0.028 from where it would sit without jitter. Probes read the
pixel centres inside each probed feature's rectangle shrunk by 0.035, which
therefore always land on that feature.

Encoding table (probed features):

    feature          region (u range × v range)          colour
    hat              [0.12, 0.88] × [0.00, 0.16]         HAT
    hair band        [0.15, 0.85] × [0.16, 0.34]         hair colour / skin when Bald
    glasses bridge   [0.42, 0.58] × [0.42, 0.58]         GLASSES (+ rings round the eyes)
    mustache         [0.36, 0.64] × [0.60, 0.74]         FACIAL_HAIR
    smile corners    [0.22, 0.36] ∪ [0.64, 0.78] × [0.68, 0.82]   mouth colour
    goatee           [0.42, 0.58] × [0.85, 0.99]         FACIAL_HAIR

Every other mapped attribute leaves a mark outside those rectangles, or
inside one only in a colour the probe does not accept.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from t2f.captions import AttributeVector
from t2f.errors import ContractError

logger = logging.getLogger(__name__)

Color = tuple[float, float, float]
Rect = tuple[float, float, float, float]      # u0, u1, v0, v1

# ── Palette ──────────────────────────────────────────────────────────────────

BACKGROUND: Color = (0.30, 0.50, 0.75)
BACKGROUND_YOUNG: Color = (0.35, 0.55, 0.80)
SKIN: Color = (0.87, 0.72, 0.60)
PALE: Color = (0.95, 0.88, 0.82)
SKIN_SHADE: Color = (0.75, 0.60, 0.50)
HAIR_COLORS: dict[str, Color] = {
    "Black_Hair": (0.05, 0.05, 0.05),
    "Blond_Hair": (0.90, 0.86, 0.50),
    "Brown_Hair": (0.40, 0.25, 0.10),
    "Gray_Hair": (0.60, 0.60, 0.60),
}
DEFAULT_HAIR: Color = (0.45, 0.45, 0.20)
HAT: Color = (0.80, 0.10, 0.10)
GLASSES: Color = (0.10, 0.10, 0.45)
FACIAL_HAIR: Color = (0.25, 0.15, 0.08)
MOUTH: Color = (0.70, 0.20, 0.30)
LIPSTICK: Color = (0.85, 0.10, 0.25)
NOSE: Color = (0.75, 0.55, 0.45)
ROSY: Color = (0.90, 0.50, 0.50)
STUBBLE: Color = (0.60, 0.50, 0.45)
NECKTIE: Color = (0.10, 0.30, 0.10)
EYE: Color = (0.10, 0.08, 0.08)
EYEBROW: Color = (0.25, 0.20, 0.18)
EYESHADOW: Color = (0.55, 0.35, 0.60)
HIGHLIGHT: Color = (0.98, 0.85, 0.75)
GOLD: Color = (0.95, 0.80, 0.20)
SILVER: Color = (0.85, 0.85, 0.90)
TAG: Color = (1.00, 0.85, 0.20)

# ── Geometry ─────────────────────────────────────────────────────────────────

JITTER_OFFSET = 0.02
JITTER_SCALE = 0.015
PROBE_MARGIN = 0.035
PROBE_TOLERANCE = 0.12
MIN_PROBE_SIZE = 16

HAT_RECT: Rect = (0.12, 0.88, 0.00, 0.16)
HAIR_RECT: Rect = (0.15, 0.85, 0.16, 0.34)
BRIDGE_RECT: Rect = (0.42, 0.58, 0.42, 0.58)
MUSTACHE_RECT: Rect = (0.36, 0.64, 0.60, 0.74)
SMILE_RECTS: tuple[Rect, Rect] = ((0.22, 0.36, 0.68, 0.82), (0.64, 0.78, 0.68, 0.82))
GOATEE_RECT: Rect = (0.42, 0.58, 0.85, 0.99)

FACE_CENTER = (0.50, 0.64)
FACE_RADII = (0.32, 0.34)
EYE_CENTERS = ((0.31, 0.50), (0.69, 0.50))
EYE_RADIUS = 0.06


@dataclass(frozen=True)
class Probe:
    regions: tuple[Rect, ...]
    targets: tuple[Color, ...]


PROBES: dict[str, Probe] = {
    "Black_Hair": Probe((HAIR_RECT,), (HAIR_COLORS["Black_Hair"],)),
    "Blond_Hair": Probe((HAIR_RECT,), (HAIR_COLORS["Blond_Hair"],)),
    "Brown_Hair": Probe((HAIR_RECT,), (HAIR_COLORS["Brown_Hair"],)),
    "Gray_Hair": Probe((HAIR_RECT,), (HAIR_COLORS["Gray_Hair"],)),
    "Bald": Probe((HAIR_RECT,), (SKIN, PALE)),
    "Wearing_Hat": Probe((HAT_RECT,), (HAT,)),
    "Eyeglasses": Probe((BRIDGE_RECT,), (GLASSES,)),
    "Mustache": Probe((MUSTACHE_RECT,), (FACIAL_HAIR,)),
    "Goatee": Probe((GOATEE_RECT,), (FACIAL_HAIR,)),
    "Smiling": Probe(SMILE_RECTS, (MOUTH, LIPSTICK)),
}
PROBEABLE_ATTRIBUTES: tuple[str, ...] = tuple(PROBES)


class UnsupportedProbeError(ContractError):
    """The attribute has no exact visual detector."""


@dataclass(frozen=True)
class ProceduralFaceSpec:
    """Rendering parameters; the encoding table itself is fixed in this module."""
    size: int = 16
    jitter_offset: float = JITTER_OFFSET
    jitter_scale: float = JITTER_SCALE

    def __post_init__(self):
        if self.size < 4:
            raise ContractError(f"image size must be at least 4, got {self.size}")
        if self.jitter_offset + 0.5 * self.jitter_scale > 0.05:
            raise ContractError("render jitter must stay within 5% of the image size")


# ── Canvas ───────────────────────────────────────────────────────────────────

def pixel_centers(size: int) -> tuple[np.ndarray, np.ndarray]:
    """(u, v) grids of pixel centres, each (size, size), indexed [row, col]."""
    c = (np.arange(size) + 0.5) / size
    v, u = np.meshgrid(c, c, indexing="ij")
    return u, v


class _Canvas:
    def __init__(self, size: int, offset: np.ndarray, scale: float):
        qu, qv = pixel_centers(size)
        self.u = (qu - 0.5 - offset[0]) / scale + 0.5
        self.v = (qv - 0.5 - offset[1]) / scale + 0.5
        self.rgb = np.empty((size, size, 3), dtype=np.float64)

    def fill(self, mask: np.ndarray, color: Color) -> None:
        self.rgb[mask] = color

    def rect(self, r: Rect) -> np.ndarray:
        u0, u1, v0, v1 = r
        return (self.u >= u0) & (self.u <= u1) & (self.v >= v0) & (self.v <= v1)

    def ellipse(self, cu: float, cv: float, ru: float, rv: float) -> np.ndarray:
        return ((self.u - cu) / ru) ** 2 + ((self.v - cv) / rv) ** 2 <= 1.0

    def ring(self, cu: float, cv: float, inner: float, outer: float) -> np.ndarray:
        d = np.hypot(self.u - cu, self.v - cv)
        return (d >= inner) & (d <= outer)


def _jitter(spec: ProceduralFaceSpec, jitter_seed: Optional[int]) -> tuple[np.ndarray, float]:
    if jitter_seed is None:
        return np.zeros(2), 1.0
    rng = np.random.default_rng(jitter_seed)
    offset = rng.uniform(-spec.jitter_offset, spec.jitter_offset, size=2)
    scale = 1.0 + rng.uniform(-spec.jitter_scale, spec.jitter_scale)
    return offset, scale


def _hair_color(attrs: AttributeVector, skin: Color) -> Color:
    if attrs["Bald"]:
        return skin
    for name, color in HAIR_COLORS.items():
        if attrs[name]:
            return color
    return DEFAULT_HAIR


def _face_mask(c: _Canvas, attrs: AttributeVector) -> np.ndarray:
    ru, rv = FACE_RADII
    if attrs["Chubby"]:
        ru *= 1.08
    if attrs["Oval_Face"]:
        ru, rv = ru * 0.94, rv * 1.05
    cu, cv = FACE_CENTER
    upper = c.ellipse(cu, cv, ru, rv) & (c.v <= cv)
    jaw = 1.15 if attrs["Male"] else 1.0
    lower = c.ellipse(cu, cv, ru * jaw, rv) & (c.v > cv)
    return upper | lower


def render_procedural_face(attrs: AttributeVector, size: int = 16,
                           jitter_seed: Optional[int] = None,
                           spec: Optional[ProceduralFaceSpec] = None) -> np.ndarray:
    """
    Draw `attrs` as a (3, size, size) float64 image in [-1, 1].

    Deterministic in (attrs, size, jitter_seed); `jitter_seed=None` draws the
    un-jittered base face.
    """
    spec = spec or ProceduralFaceSpec(size=size)
    if spec.size != size:
        spec = ProceduralFaceSpec(size, spec.jitter_offset, spec.jitter_scale)
    offset, scale = _jitter(spec, jitter_seed)
    c = _Canvas(size, offset, scale)
    a = attrs

    skin = PALE if a["Pale_Skin"] else SKIN
    hair = _hair_color(a, skin)
    mouth = LIPSTICK if a["Wearing_Lipstick"] else MOUTH

    c.rgb[:] = BACKGROUND_YOUNG if a["Young"] else BACKGROUND
    if a["Straight_Hair"]:
        c.fill(c.rect((0.08, 0.15, 0.16, 0.60)) | c.rect((0.85, 0.92, 0.16, 0.60)), hair)

    face = _face_mask(c, a)
    c.fill(face, skin)
    if a["5_o_Clock_Shadow"]:
        c.fill(face & (c.v > 0.72), STUBBLE)
    if a["Double_Chin"]:
        c.fill(c.rect((0.30, 0.40, 0.90, 0.93)) | c.rect((0.60, 0.70, 0.90, 0.93)), SKIN_SHADE)

    # hair
    c.fill(c.rect(HAIR_RECT), hair)
    if a["Wavy_Hair"]:
        for cu in (0.25, 0.40, 0.55, 0.70):
            c.fill(c.ellipse(cu, 0.36, 0.03, 0.03), hair)
    if a["Bangs"]:
        c.fill(c.rect((0.28, 0.72, 0.34, 0.39)), hair)
    if a["Receding_Hairline"]:
        c.fill(c.rect((0.42, 0.58, 0.31, 0.34)), skin)
    if a["Sideburns"]:
        c.fill(c.rect((0.16, 0.22, 0.36, 0.56)) | c.rect((0.78, 0.84, 0.36, 0.56)), FACIAL_HAIR)

    # brows and eyes
    for cu, cv in EYE_CENTERS:
        brow_top = 0.38 if a["Bushy_Eyebrows"] else 0.40
        c.fill(c.rect((cu - 0.07, cu + 0.07, brow_top, 0.42)), EYEBROW)
        if a["Arched_Eyebrows"]:
            c.fill(c.rect((cu - 0.03, cu + 0.03, 0.37, 0.40)), EYEBROW)
        if a["Heavy_Makeup"]:
            c.fill(c.rect((cu - 0.06, cu + 0.06, 0.43, 0.45)), EYESHADOW)
        eye_rv = EYE_RADIUS * (0.5 if a["Narrow_Eyes"] else 1.0)
        c.fill(c.ellipse(cu, cv, EYE_RADIUS, eye_rv), EYE)

    # cheeks
    if a["Rosy_Cheeks"]:
        c.fill(c.ellipse(0.28, 0.60, 0.045, 0.045) | c.ellipse(0.72, 0.60, 0.045, 0.045), ROSY)
    if a["High_Cheekbones"]:
        c.fill(c.rect((0.22, 0.28, 0.56, 0.58)) | c.rect((0.72, 0.78, 0.56, 0.58)), HIGHLIGHT)

    # nose
    half = 0.07 if a["Big_Nose"] else 0.04
    c.fill(c.rect((0.5 - half, 0.5 + half, 0.59, 0.66)), NOSE)
    if a["Pointy_Nose"]:
        c.fill(c.rect((0.48, 0.52, 0.66, 0.69)), NOSE)

    # mouth
    lips = (0.38, 0.62, 0.76, 0.86) if a["Big_Lips"] else (0.38, 0.62, 0.77, 0.84)
    c.fill(c.rect(lips), mouth)
    if a["Mouth_Slightly_Open"]:
        c.fill(c.rect((0.40, 0.60, 0.80, 0.81)), EYE)
    if a["Smiling"]:
        c.fill(c.rect(SMILE_RECTS[0]) | c.rect(SMILE_RECTS[1]), mouth)
    if a["Mustache"]:
        c.fill(c.rect(MUSTACHE_RECT), FACIAL_HAIR)

    # neck
    if a["Wearing_Necklace"]:
        c.fill(c.rect((0.10, 0.30, 0.92, 0.95)) | c.rect((0.70, 0.90, 0.92, 0.95)), SILVER)
    if a["Wearing_Necktie"]:
        c.fill(c.rect((0.46, 0.54, 0.92, 1.00)), NECKTIE)
    if a["Goatee"]:
        c.fill(c.rect(GOATEE_RECT), FACIAL_HAIR)

    # accessories
    if a["Eyeglasses"]:
        rings = c.ring(*EYE_CENTERS[0], 0.08, 0.11) | c.ring(*EYE_CENTERS[1], 0.08, 0.11)
        c.fill(rings | c.rect(BRIDGE_RECT), GLASSES)
    if a["Wearing_Earrings"]:
        c.fill(c.ellipse(0.14, 0.66, 0.03, 0.03) | c.ellipse(0.86, 0.66, 0.03, 0.03), GOLD)
    if a["Wearing_Hat"]:
        c.fill(c.rect(HAT_RECT), HAT)
    if a["Attractive"]:
        c.fill(c.rect((0.0, 0.08, 0.0, 0.08)), TAG)

    return (c.rgb * 2.0 - 1.0).transpose(2, 0, 1)


# ── Probes ───────────────────────────────────────────────────────────────────

def probe_region(rect: Rect, size: int) -> np.ndarray:
    """(size, size) mask of the pixel centres a probe reads for `rect`."""
    u0, u1, v0, v1 = rect
    u, v = pixel_centers(size)
    m = PROBE_MARGIN
    return (u >= u0 + m) & (u <= u1 - m) & (v >= v0 + m) & (v <= v1 - m)


def probe_attribute(image: np.ndarray, attribute: str) -> bool:
    """
    True iff a strict majority of the feature's sample pixels lie within
    PROBE_TOLERANCE (Euclidean, in [0, 1] RGB) of one of its colours.

    Raises UnsupportedProbeError for attributes outside PROBEABLE_ATTRIBUTES.
    """
    probe = PROBES.get(attribute)
    if probe is None:
        raise UnsupportedProbeError(f"{attribute!r} has no probe; probe-able: {', '.join(PROBEABLE_ATTRIBUTES)}")
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[0] != 3 or image.shape[1] != image.shape[2]:
        raise ContractError(f"probe expects a (3, s, s) image, got {image.shape}")
    size = image.shape[-1]
    if size < MIN_PROBE_SIZE:
        raise ContractError(f"probes need images of at least {MIN_PROBE_SIZE}px, got {size}")

    mask = np.zeros((size, size), dtype=bool)
    for rect in probe.regions:
        mask |= probe_region(rect, size)
    colors = (image.transpose(1, 2, 0)[mask] + 1.0) / 2.0
    targets = np.asarray(probe.targets)
    dist = np.linalg.norm(colors[:, None, :] - targets[None, :, :], axis=-1)
    hits = np.count_nonzero(dist.min(axis=1) <= PROBE_TOLERANCE)
    return hits * 2 > colors.shape[0]


def probe_all(image: np.ndarray) -> dict[str, bool]:
    return {name: probe_attribute(image, name) for name in PROBEABLE_ATTRIBUTES}
