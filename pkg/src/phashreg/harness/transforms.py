"""Deterministic image edits for building query sets.

Every transform is reproducible: the same spec, seed, and input produce a
byte-identical output.  Magnitudes are interpreted per kind (blur radius,
enhancement delta, hue offset, noise sigma, stamp count); stochastic kinds
draw from their own seeded generator.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass
from enum import Enum

import numpy as np
from PIL import Image, ImageDraw, ImageEnhance, ImageFilter, ImageFont


class TransformKind(str, Enum):
    BLUR = "blur"
    SHARPEN = "sharpen"
    EDGE_ENHANCE = "edge_enhance"
    BRIGHTNESS = "brightness"
    CONTRAST = "contrast"
    COLOR_SHIFT = "color_shift"
    TEXT_OVERLAY = "text_overlay"
    NOISE = "noise"


# moderate default magnitudes for the edited-query pipeline
DEFAULT_MAGNITUDES: dict[TransformKind, float] = {
    TransformKind.BLUR: 1.2,
    TransformKind.SHARPEN: 1.5,
    TransformKind.EDGE_ENHANCE: 0.6,
    TransformKind.BRIGHTNESS: 0.25,
    TransformKind.CONTRAST: 0.30,
    TransformKind.COLOR_SHIFT: 12.0,
    TransformKind.TEXT_OVERLAY: 2.0,
    TransformKind.NOISE: 6.0,
}


@dataclass(frozen=True, slots=True)
class TransformSpec:
    kind: TransformKind
    magnitude: float
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", TransformKind(self.kind))
        m = self.magnitude
        if self.kind in (TransformKind.BRIGHTNESS, TransformKind.CONTRAST):
            if m < -1.0:
                raise ValueError(f"{self.kind.value} magnitude must be >= -1, got {m}")
        elif self.kind is TransformKind.EDGE_ENHANCE:
            if not 0.0 <= m <= 1.0:
                raise ValueError(f"edge_enhance magnitude must be in [0, 1], got {m}")
        elif self.kind is TransformKind.TEXT_OVERLAY:
            if m < 1 or m != int(m):
                raise ValueError(f"text_overlay magnitude must be a positive integer, got {m}")
        elif m < 0:
            raise ValueError(f"{self.kind.value} magnitude must be >= 0, got {m}")


def apply_transform(image: Image.Image, spec: TransformSpec) -> Image.Image:
    """Apply one edit; output dimensions always equal the input's."""
    img = image if image.mode == "RGB" else image.convert("RGB")
    kind, m = spec.kind, spec.magnitude

    if kind is TransformKind.BLUR:
        return img.filter(ImageFilter.GaussianBlur(radius=m))
    if kind is TransformKind.SHARPEN:
        return ImageEnhance.Sharpness(img).enhance(1.0 + m)
    if kind is TransformKind.EDGE_ENHANCE:
        return Image.blend(img, img.filter(ImageFilter.EDGE_ENHANCE_MORE), m)
    if kind is TransformKind.BRIGHTNESS:
        return ImageEnhance.Brightness(img).enhance(1.0 + m)
    if kind is TransformKind.CONTRAST:
        return ImageEnhance.Contrast(img).enhance(1.0 + m)
    if kind is TransformKind.COLOR_SHIFT:
        hsv = np.asarray(img.convert("HSV"), dtype=np.uint16)
        hsv[:, :, 0] = (hsv[:, :, 0] + int(m)) % 256
        return Image.fromarray(hsv.astype(np.uint8), mode="HSV").convert("RGB")
    if kind is TransformKind.TEXT_OVERLAY:
        return _text_overlay(img, stamps=int(m), seed=spec.seed)
    if kind is TransformKind.NOISE:
        rng = np.random.default_rng(spec.seed)
        arr = np.asarray(img, dtype=np.float64)
        noisy = arr + rng.normal(0.0, m, size=arr.shape)
        return Image.fromarray(np.clip(np.rint(noisy), 0, 255).astype(np.uint8), mode="RGB")
    raise ValueError(f"unknown transform kind: {kind}")


def _text_overlay(img: Image.Image, stamps: int, seed: int) -> Image.Image:
    out = img.copy()
    draw = ImageDraw.Draw(out)
    font = ImageFont.load_default()
    rng = random.Random(seed)
    for _ in range(stamps):
        text = "".join(rng.choice(string.ascii_uppercase + string.digits) for _ in range(rng.randint(4, 9)))
        x = rng.randrange(max(1, out.width - 8 * len(text)))
        y = rng.randrange(max(1, out.height - 12))
        color = (rng.randrange(256), rng.randrange(256), rng.randrange(256))
        draw.text((x, y), text, fill=color, font=font)
    return out


def random_transform_chain(rng: random.Random) -> list[TransformSpec]:
    """1-3 distinct randomly chosen edits with jittered moderate magnitudes."""
    kinds = rng.sample(list(TransformKind), rng.randint(1, 3))
    chain = []
    for kind in kinds:
        base = DEFAULT_MAGNITUDES[kind]
        if kind is TransformKind.TEXT_OVERLAY:
            magnitude = float(rng.randint(1, 3))
        elif kind is TransformKind.EDGE_ENHANCE:
            magnitude = round(base * rng.uniform(0.5, 1.5), 4)
            magnitude = min(magnitude, 1.0)
        else:
            magnitude = round(base * rng.uniform(0.5, 1.5), 4)
        chain.append(TransformSpec(kind=kind, magnitude=magnitude, seed=rng.getrandbits(32)))
    return chain


def make_edited_set(
    images: list[Image.Image], variants_per_image: int, seed: int
) -> list[tuple[int, Image.Image]]:
    """Edited variants of each input: (source index, edited image) pairs.

    Each variant applies an independent random 1-3 edit chain.
    """
    rng = random.Random(seed)
    out: list[tuple[int, Image.Image]] = []
    for index, image in enumerate(images):
        for _ in range(variants_per_image):
            edited = image
            for spec in random_transform_chain(rng):
                edited = apply_transform(edited, spec)
            out.append((index, edited))
    return out
