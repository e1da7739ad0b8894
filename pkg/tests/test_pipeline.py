import numpy as np
import pytest

from conftest import random_image, random_priors
from sdcomp.container import parse, truncate
from sdcomp.imagecore import Image, Rect
from sdcomp.priors import GroundedObject, Level, Ranking, SemanticPriors, heuristic_rank
from sdcomp.pipeline import (
    DEFAULT_PROFILE, QualityProfile, composite_order, decode_image, decode_unit, encode_image,
    mean_color,
)
from sdcomp.container import RegionUnit


def test_profile_default_and_parse():
    assert str(DEFAULT_PROFILE) == "2,3,4,5,6"
    assert QualityProfile.parse("1, 1, 2, 8, 8") == QualityProfile(1, 1, 2, 8, 8)
    for bad in ("1,2,3,4", "3,2,4,5,6", "0,1,2,3,4", "a,b,c,d,e", "1,2,3,4,9"):
        with pytest.raises(ValueError):
            QualityProfile.parse(bad)
    assert DEFAULT_PROFILE.for_level(Level.L3) == 4
    assert DEFAULT_PROFILE.for_level(Level.BACKGROUND) == 6


def test_mean_color_rounds_half_away():
    px = np.zeros((1, 2, 3), np.uint8)
    px[0, 1] = (1, 2, 255)
    assert mean_color(Image(px)) == (1, 1, 128)


def gradient(w=48, h=32):
    yy, xx = np.mgrid[0:h, 0:w]
    px = np.stack([xx * 5 % 256, yy * 7 % 256, (xx + yy) * 3 % 256], -1).astype(np.uint8)
    return Image(px)


def test_zero_objects_single_background_unit():
    img = gradient()
    s = parse(encode_image(img, SemanticPriors(48, 32), Ranking()))
    assert [(u.level, u.object_id) for u in s.units] == [(Level.BACKGROUND, 0)]
    assert s.units[0].bbox == Rect(0, 0, 48, 32)
    assert s.units[0].quality == 6


def test_two_ranked_objects_order():
    img = gradient()
    pr = SemanticPriors(48, 32, (
        GroundedObject(2, "b", Rect(20, 10, 10, 10)),
        GroundedObject(1, "a", Rect(0, 0, 8, 8)),
    ))
    s = parse(encode_image(img, pr, Ranking({1: Level.L2, 2: Level.L1})))
    assert [(int(u.level), u.object_id, u.quality) for u in s.units] == [(1, 2, 2), (2, 1, 3), (5, 0, 6)]
    assert s.mean_color == mean_color(img)


def test_deterministic_and_size_check():
    img = gradient()
    pr = SemanticPriors(48, 32, (GroundedObject(1, "a", Rect(3, 3, 9, 9)),))
    r = heuristic_rank(pr)
    assert encode_image(img, pr, r) == encode_image(img, pr, r)
    with pytest.raises(ValueError):
        encode_image(img, SemanticPriors(10, 10), Ranking())


def test_decode_filter_examples():
    img = gradient()
    pr = SemanticPriors(48, 32, (GroundedObject(1, "a", Rect(3, 3, 9, 9)),))
    s = encode_image(img, pr, Ranking())  # object lands in "other"
    assert decode_image(s, 1) == Image.filled(48, 32, mean_color(img))
    full = decode_image(s, 5)
    assert decode_image(s) == full
    assert np.abs(full.pixels.astype(int) - img.pixels).max() < 64


def test_composite_order():
    u = lambda lvl, i: RegionUnit(Level(lvl), i, Rect(0, 0, 1, 1), 1, b"")
    assert composite_order([u(1, 1), u(5, 0)]) == [u(5, 0), u(1, 1)]
    assert composite_order([u(2, 4), u(2, 2)]) == [u(2, 2), u(2, 4)]
    assert composite_order([u(3, 3)]) == [u(3, 3)]


def test_masked_unit_writes_only_mask():
    img = gradient()
    mask = np.zeros((8, 8), bool)
    mask[2:6, 2:6] = True
    pr = SemanticPriors(48, 32, (GroundedObject(1, "a", Rect(8, 8, 8, 8), mask=mask),))
    s = encode_image(img, pr, Ranking({1: Level.L1}))
    rec = decode_image(s, 1).pixels
    canvas = np.array(mean_color(img), np.uint8)
    window = rec[8:16, 8:16]
    assert np.all(window[~mask] == canvas)
    unit_px, unit_mask = decode_unit(parse(s).units[0])
    assert np.array_equal(unit_mask, mask)
    assert np.array_equal(window[mask], unit_px.pixels[mask])


def test_pixel_provenance_non_overlapping():
    rng = np.random.default_rng(21)
    img = random_image(rng, 96, 64)
    pr = SemanticPriors(96, 64, (
        GroundedObject(1, "a", Rect(0, 0, 30, 20), mask=rng.random((20, 30)) < 0.6),
        GroundedObject(2, "b", Rect(40, 30, 20, 20)),
    ))
    s = encode_image(img, pr, Ranking({1: Level.L1, 2: Level.L1}))
    rec = decode_image(s, 1).pixels
    for u in parse(s).units[:2]:
        px, m = decode_unit(u)
        x, y, w, h = u.bbox
        m = np.ones((h, w), bool) if m is None else m
        assert np.array_equal(rec[y:y + h, x:x + w][m], px.pixels[m])


@pytest.mark.parametrize("seed", range(4))
def test_truncate_filter_equivalence(seed):
    rng = np.random.default_rng(seed)
    w, h = int(rng.integers(16, 80)), int(rng.integers(16, 80))
    img = random_image(rng, w, h)
    pr = random_priors(rng, w, h, int(rng.integers(0, 6)))
    ranking = heuristic_rank(pr) if pr.objects else Ranking()
    s = encode_image(img, pr, ranking)
    for t in range(1, 6):
        assert decode_image(truncate(s, t), 5) == decode_image(s, t)


def test_rate_saving_without_background():
    rng = np.random.default_rng(30)
    img = random_image(rng, 64, 64)
    pr = SemanticPriors(64, 64, (GroundedObject(1, "a", Rect(5, 5, 20, 20)),))
    s = encode_image(img, pr, heuristic_rank(pr))
    assert len(truncate(s, 4)) < len(s)
