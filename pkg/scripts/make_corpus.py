"""Regenerate data/corpus/*.ppm from scikit-image's bundled sample photos.

Development helper only; the PPMs are checked in so the package and its
tests never import scikit-image.
"""

from pathlib import Path

import numpy as np
from skimage import data
from skimage.transform import downscale_local_mean

from sdcomp.imagecore import Image, Rect, save_ppm
from sdcomp.priors import GroundedObject, SemanticPriors, dump_priors

OUT = Path(__file__).resolve().parent.parent / "data" / "corpus"

SOURCES = {
    "astronaut": (data.astronaut, 2),
    "coffee": (data.coffee, 2),
    "chelsea": (data.chelsea, 2),
    "rocket": (data.rocket, 2),
    "motorcycle": (lambda: data.stereo_motorcycle()[0], 3),
}

# (label, [x, y, w, h], score, elliptical mask?)
OBJECTS = {
    "astronaut": [
        ("woman", [84, 12, 72, 84], 0.93, True),
        ("helmet", [138, 170, 112, 86], 0.88, True),
        ("space shuttle model", [177, 0, 56, 140], 0.81, False),
        ("mission patch", [66, 173, 40, 40], 0.62, True),
        ("flag", [0, 0, 44, 130], 0.74, False),
    ],
    "coffee": [
        ("cup", [85, 8, 122, 125], 0.95, False),
        ("coffee", [100, 40, 85, 55], 0.71, True),
        ("spoon", [160, 32, 52, 135], 0.83, False),
    ],
    "chelsea": [
        ("cat", [0, 0, 210, 150], 0.97, False),
        ("eye", [65, 40, 40, 35], 0.86, True),
        ("eye", [145, 52, 32, 30], 0.84, True),
        ("nose", [112, 105, 35, 30], 0.66, False),
    ],
    "rocket": [
        ("rocket", [150, 62, 22, 148], 0.92, False),
        ("launch tower", [0, 0, 45, 213], 0.77, False),
        ("launch tower", [278, 0, 42, 213], 0.75, False),
        ("lightning rod", [85, 62, 20, 140], 0.52, False),
        ("lightning rod", [215, 60, 25, 145], 0.55, False),
    ],
    "motorcycle": [
        ("fuel tank", [110, 50, 55, 30], 0.71, False),
        ("engine", [95, 80, 55, 45], 0.68, False),
        ("front wheel", [168, 90, 60, 60], 0.89, True),
        ("rear wheel", [40, 80, 62, 62], 0.87, True),
        ("seat", [45, 55, 70, 25], 0.64, False),
    ],
}


def ellipse(w, h):
    yy, xx = np.mgrid[0:h, 0:w]
    return ((xx + 0.5 - w / 2) / (w / 2)) ** 2 + ((yy + 0.5 - h / 2) / (h / 2)) ** 2 <= 1.0


def priors_for(name, width, height):
    objs = []
    for i, (label, bbox, score, masked) in enumerate(OBJECTS[name], start=1):
        mask = ellipse(bbox[2], bbox[3]) if masked else None
        objs.append(GroundedObject(i, label, Rect(*bbox), score, mask))
    return SemanticPriors(width, height, tuple(objs))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, (load, factor) in SOURCES.items():
        rgb = load()[..., :3].astype(np.float64)
        h, w = (rgb.shape[0] // factor) * factor, (rgb.shape[1] // factor) * factor
        small = downscale_local_mean(rgb[:h, :w], (factor, factor, 1))
        px = np.clip(np.floor(small + 0.5), 0, 255).astype(np.uint8)
        (OUT / f"{name}.ppm").write_bytes(save_ppm(Image(px)))
        priors = priors_for(name, px.shape[1], px.shape[0])
        (OUT / f"{name}.json").write_text(dump_priors(priors))
        print(name, px.shape[1], "x", px.shape[0])


if __name__ == "__main__":
    main()
