#!/usr/bin/env python3
"""Regenerate the committed test corpus (deterministic).

Produces smooth low-frequency textures with solid shapes, the kind of
content a perceptual hash is designed for:

- tests/data/corpus/orig_NNN.png      120 independent originals
- tests/data/negatives/neg_ind_NNN.png 70 independent never-registered images
- tests/data/negatives/neg_sib_NNN.png 50 near-miss negatives: visually
  similar siblings of originals (one shape recolored, one moved, possibly
  one added), with perturbation strength spread so their hash distances to
  the matching original span roughly 2..26

Run with --freeze to also write tests/data/golden_hashes.json from the
current hash pipeline.  The frozen values pin the pipeline: any change to
resampling, luma weights, or the DCT shows up as a golden-hash failure.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFilter

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from phashreg.hashing import hash_image_file  # noqa: E402

SIZE = 160
DATA_DIR = Path(__file__).resolve().parents[1] / "tests" / "data"

N_ORIGINALS = 120
N_INDEPENDENT_NEGATIVES = 70
N_SIBLING_NEGATIVES = 50

Shape = tuple[str, int, int, int, int, tuple[int, int, int]]


def base_texture(seed: int) -> Image.Image:
    nprng = np.random.default_rng(seed)
    low = nprng.integers(20, 236, size=(7, 7, 3)).astype(np.uint8)
    return Image.fromarray(low, "RGB").resize((SIZE, SIZE), Image.Resampling.BICUBIC)


def shape_params(seed: int) -> list[Shape]:
    rng = random.Random(seed)
    shapes: list[Shape] = []
    for _ in range(rng.randint(3, 7)):
        kind = rng.choice(["ellipse", "rect"])
        x0 = rng.randrange(0, SIZE - 30)
        y0 = rng.randrange(0, SIZE - 30)
        w = rng.randrange(20, 80)
        h = rng.randrange(20, 80)
        color = (rng.randrange(256), rng.randrange(256), rng.randrange(256))
        shapes.append((kind, x0, y0, min(x0 + w, SIZE - 1), min(y0 + h, SIZE - 1), color))
    return shapes


def render(texture_seed: int, shapes: list[Shape]) -> Image.Image:
    img = base_texture(texture_seed)
    draw = ImageDraw.Draw(img)
    for kind, x0, y0, x1, y1, color in shapes:
        if kind == "ellipse":
            draw.ellipse([x0, y0, x1, y1], fill=color)
        else:
            draw.rectangle([x0, y0, x1, y1], fill=color)
    return img.filter(ImageFilter.GaussianBlur(1.0))


def original(i: int) -> Image.Image:
    return render(1000 + i, shape_params(3000 + i))


def sibling(i: int, strength: float) -> Image.Image:
    """Near-miss negative built from original i's texture and shapes."""
    shapes = list(shape_params(3000 + i))
    rng = random.Random(7000 + i)
    k = rng.randrange(len(shapes))
    kind, x0, y0, x1, y1, _ = shapes[k]
    shapes[k] = (kind, x0, y0, x1, y1, (rng.randrange(256), rng.randrange(256), rng.randrange(256)))
    k2 = rng.randrange(len(shapes))
    kind, x0, y0, x1, y1, c = shapes[k2]
    dx = int(strength * 18)
    dy = int(strength * 12)
    x0 = min(max(0, x0 + dx), SIZE - 2)
    x1 = min(max(x0 + 5, x1 + dx), SIZE - 1)
    y0 = min(max(0, y0 + dy), SIZE - 2)
    y1 = min(max(y0 + 5, y1 + dy), SIZE - 1)
    shapes[k2] = (kind, x0, y0, x1, y1, c)
    if strength > 0.5:
        x0 = rng.randrange(0, SIZE - 40)
        y0 = rng.randrange(0, SIZE - 40)
        w = int(20 + 50 * strength)
        shapes.append(
            (
                "rect",
                x0,
                y0,
                min(x0 + w, SIZE - 1),
                min(y0 + w, SIZE - 1),
                (rng.randrange(256), rng.randrange(256), rng.randrange(256)),
            )
        )
    return render(1000 + i, shapes)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--freeze", action="store_true", help="also write golden_hashes.json")
    args = parser.parse_args()

    corpus_dir = DATA_DIR / "corpus"
    negatives_dir = DATA_DIR / "negatives"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    negatives_dir.mkdir(parents=True, exist_ok=True)

    for i in range(N_ORIGINALS):
        original(i).save(corpus_dir / f"orig_{i:03d}.png")
    for i in range(N_INDEPENDENT_NEGATIVES):
        render(11_000 + i, shape_params(13_000 + i)).save(negatives_dir / f"neg_ind_{i:03d}.png")
    for i in range(N_SIBLING_NEGATIVES):
        strength = 0.5 + 0.9 * (i / (N_SIBLING_NEGATIVES - 1))
        sibling(i, strength).save(negatives_dir / f"neg_sib_{i:03d}.png")
    print(f"wrote {N_ORIGINALS} originals, "
          f"{N_INDEPENDENT_NEGATIVES + N_SIBLING_NEGATIVES} negatives under {DATA_DIR}")

    if args.freeze:
        golden = {}
        for path in sorted(corpus_dir.glob("*.png")) + sorted(negatives_dir.glob("*.png")):
            golden[path.name] = hash_image_file(path).hex
        out = DATA_DIR / "golden_hashes.json"
        out.write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n")
        print(f"froze {len(golden)} golden hashes to {out}")


if __name__ == "__main__":
    main()
