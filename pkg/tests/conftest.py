from pathlib import Path

import numpy as np
import pytest

from sdcomp.imagecore import Image, Rect, load_ppm
from sdcomp.priors import GroundedObject, SemanticPriors, parse_priors

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "data" / "corpus"
FIXTURES = Path(__file__).resolve().parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"
CORPUS_NAMES = ("astronaut", "chelsea", "coffee", "motorcycle", "rocket")

_acceptance_results = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion, summarised at the end")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _acceptance_results.append((marker.args[0], rep.outcome, item.name))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, name in _acceptance_results:
        verdict = {"passed": "PASS", "skipped": "SKIP"}.get(outcome, "FAIL")
        terminalreporter.write_line(f"{verdict}  {label}  ({name})")


def load_corpus(name):
    img = load_ppm((CORPUS / f"{name}.ppm").read_bytes())
    priors = parse_priors((CORPUS / f"{name}.json").read_text())
    return img, priors


@pytest.fixture(scope="session", params=CORPUS_NAMES)
def corpus_item(request):
    return (request.param,) + load_corpus(request.param)


def random_image(rng, width, height):
    """Smooth gradients, a few flat patches and mild noise."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    base = np.empty((height, width, 3))
    for c in range(3):
        a, b, k = rng.uniform(-1, 1, 3)
        base[..., c] = 128 + 60 * np.sin(a * xx / 17 + b * yy / 23 + k * 3)
    for _ in range(rng.integers(0, 5)):
        x0, y0 = rng.integers(0, width), rng.integers(0, height)
        base[y0:y0 + rng.integers(4, 64), x0:x0 + rng.integers(4, 64)] = rng.integers(0, 256, 3)
    base += rng.normal(0, 6, base.shape)
    return Image(np.clip(base, 0, 255).astype(np.uint8))


def random_priors(rng, width, height, n):
    objs = []
    for i in range(n):
        w = int(rng.integers(1, max(2, width // 2)))
        h = int(rng.integers(1, max(2, height // 2)))
        x = int(rng.integers(0, width - w + 1))
        y = int(rng.integers(0, height - h + 1))
        mask = rng.random((h, w)) < 0.7 if rng.random() < 0.5 else None
        objs.append(GroundedObject(int(rng.integers(1, 60)) * 10 + i, f"obj{i}", Rect(x, y, w, h),
                                   round(float(rng.random()), 3), mask))
    return SemanticPriors(width, height, tuple(objs))
