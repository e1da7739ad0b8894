"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 format/parse error,
4 LMM transport error. Outputs are written to a temporary file and renamed
into place, so a failed command never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import container, evalkit
from .errors import FormatError, SdcompError, TransportError
from .imagecore import Image, load_ppm, save_ppm
from .pipeline import DEFAULT_PROFILE, QualityProfile, decode_image, encode_image
from .priors import Ranking, SemanticPriors, dump_priors, heuristic_rank, parse_priors
from .prompting import HttpTransport, ReplayTransport, rank_via_lmm

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_FORMAT, EXIT_TRANSPORT = range(5)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def write_atomic(path, data) -> None:
    path = Path(path)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _profile(text):
    try:
        return QualityProfile.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _level(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"level must be an integer, got {text!r}") from None
    if not 1 <= v <= 5:
        raise argparse.ArgumentTypeError(f"level must be in [1, 5], got {v}")
    return v


def _levels(text):
    return [_level(t) for t in text.split(",") if t.strip()]


def _add_ranking_source(p, default_in_priors: bool):
    g = p.add_mutually_exclusive_group(required=not default_in_priors)
    if default_in_priors:
        g.add_argument("--ranking-in-priors", action="store_true",
                       help="use the ranking stored in the priors file (default)")
    g.add_argument("--heuristic", action="store_true", help="rank with the offline heuristic")
    g.add_argument("--lmm", action="store_true",
                   help="rank through the LMM endpoint (SDCOMP_LMM_URL, SDCOMP_LMM_TOKEN)")
    p.add_argument("--replay", metavar="FIXTURE",
                   help="with --lmm: replay scripted answers from a JSON fixture")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sdcomp", description="Semantically structured image codec.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", help="fill in the importance ranking of a priors file")
    p.add_argument("--image", required=True)
    p.add_argument("--priors", required=True)
    _add_ranking_source(p, default_in_priors=False)
    p.add_argument("--out", required=True)

    p = sub.add_parser("encode", help="encode an image into an SDC1 stream")
    p.add_argument("--image", required=True)
    p.add_argument("--priors", required=True)
    p.add_argument("--profile", type=_profile, default=DEFAULT_PROFILE,
                   help="five quality indices L1,L2,L3,other,background (default 2,3,4,5,6)")
    _add_ranking_source(p, default_in_priors=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("decode", help="reconstruct an image from an SDC1 stream")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--max-level", type=_level, default=5)
    p.add_argument("--out", required=True)

    p = sub.add_parser("truncate", help="keep only units up to a level")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--max-level", type=_level, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("inspect", help="list the units of an SDC1 stream")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("eval", help="rate-distortion sweep to CSV")
    p.add_argument("--image", required=True)
    p.add_argument("--priors", required=True)
    p.add_argument("--filters", type=_levels, default=[1, 2, 3, 4, 5])
    p.add_argument("--profiles", type=_profile, nargs="+", default=[DEFAULT_PROFILE])
    _add_ranking_source(p, default_in_priors=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bdrate", help="BD-rate of a test RD CSV against an anchor")
    p.add_argument("--anchor", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--metric", choices=("psnr_full", "psnr_objects"), default="psnr_full")
    p.add_argument("--filter", type=_level, default=None,
                   help="use rows of this filter only (required if a CSV mixes filters)")
    return parser


def _read_image(path) -> Image:
    return load_ppm(Path(path).read_bytes())


def _read_priors(path) -> SemanticPriors:
    return parse_priors(Path(path).read_text(encoding="utf-8"))


def _transport(args):
    if args.replay:
        return ReplayTransport.from_file(args.replay)
    return HttpTransport.from_env()


def _resolve_ranking(args, img: Image, priors: SemanticPriors) -> SemanticPriors:
    if getattr(args, "heuristic", False):
        return priors.with_ranking(heuristic_rank(priors))
    if getattr(args, "lmm", False):
        captions, ranking = rank_via_lmm(_transport(args), img, priors)
        return priors.with_ranking(ranking, captions)
    return priors


def _check_dims(img: Image, priors: SemanticPriors):
    if (img.width, img.height) != (priors.image_width, priors.image_height):
        raise FormatError(
            f"priors describe a {priors.image_width}x{priors.image_height} image, "
            f"image is {img.width}x{img.height}"
        )


def _load_inputs(args):
    img = _read_image(args.image)
    priors = _read_priors(args.priors)
    _check_dims(img, priors)
    priors = _resolve_ranking(args, img, priors)
    return img, priors, priors.ranking or Ranking()


def cmd_rank(args):
    img, priors, _ = _load_inputs(args)
    write_atomic(args.out, dump_priors(priors))


def cmd_encode(args):
    img, priors, ranking = _load_inputs(args)
    write_atomic(args.out, encode_image(img, priors, ranking, args.profile))


def cmd_decode(args):
    data = Path(args.inp).read_bytes()
    write_atomic(args.out, save_ppm(decode_image(data, args.max_level)))


def cmd_truncate(args):
    data = Path(args.inp).read_bytes()
    write_atomic(args.out, container.truncate(data, args.max_level))


def cmd_inspect(args):
    manifest = container.inspect(Path(args.inp).read_bytes())
    if args.json:
        print(json.dumps(manifest, indent=2))
    else:
        print(container.format_manifest(manifest))


def cmd_eval(args):
    img, priors, ranking = _load_inputs(args)
    rows = evalkit.rd_sweep(img, priors, ranking, args.filters, args.profiles)
    write_atomic(args.out, evalkit.write_rd_csv(rows))


def _curve(path, metric, level):
    rows = evalkit.read_rd_csv(Path(path).read_text(encoding="utf-8"))
    filters = sorted({r["filter"] for r in rows})
    if level is None:
        if len(filters) > 1:
            raise UsageError(f"{path} mixes filters {filters}; pick one with --filter")
    else:
        rows = [r for r in rows if r["filter"] == level]
    return evalkit.RdCurve.from_rows(rows, metric)


def cmd_bdrate(args):
    anchor = _curve(args.anchor, args.metric, args.filter)
    test = _curve(args.test, args.metric, args.filter)
    print(f"{evalkit.bd_rate(anchor, test):.4f}")


COMMANDS = {
    "rank": cmd_rank,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "truncate": cmd_truncate,
    "inspect": cmd_inspect,
    "eval": cmd_eval,
    "bdrate": cmd_bdrate,
}


def run(argv=None) -> int:
    def fail(code, msg):
        print(f"sdcomp: {msg}", file=sys.stderr)
        return code

    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "replay", None) and not args.lmm:
            raise UsageError("--replay requires --lmm")
        COMMANDS[args.command](args)
    except UsageError as e:
        return fail(EXIT_USAGE, f"usage error: {e}")
    except TransportError as e:
        return fail(EXIT_TRANSPORT, f"transport error: {e}")
    except (SdcompError, ValueError) as e:
        return fail(EXIT_FORMAT, f"format error: {e}")
    except OSError as e:
        return fail(EXIT_IO, f"I/O error: {e}")
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
