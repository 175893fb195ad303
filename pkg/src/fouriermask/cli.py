"""Command-line front end: ``fouriermask <command> [flags]``.

Exit codes: 0 success, 1 runtime error, 2 usage error. Every command that
writes an output also writes ``<output>.manifest.json`` (or ``manifest.json``
inside an output directory) echoing its flags.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__
from .codec import EncoderConfig, encode_mask, reconstruct, spectrum_analysis
from .fitter import FitConfig, FitResult, fit_mask, predict
from .fourier import GLOBAL, PER_PIXEL, CoefficientField
from .lattice import build_lattice
from .maskio import iter_dataset, load_mask, save_mask
from .optim import OPTIMIZERS
from .renderer import EXACT, MLP, RefinementConfig, subdivision_refine
from .upsample import super_resolve


def _int_at_least(minimum: int):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if value < minimum:
            raise argparse.ArgumentTypeError(f"must be >= {minimum}, got {value}")
        return value

    return parse


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _hidden(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}") from None
    if not dims or min(dims) < 1:
        raise argparse.ArgumentTypeError("hidden sizes must be positive")
    return dims


nonneg = _int_at_least(0)
positive = _int_at_least(1)


def _write_manifest(args: argparse.Namespace, out: Path, directory: bool = False) -> None:
    fields = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "handler"}
    fields["version"] = __version__
    target = out / "manifest.json" if directory else out.with_name(out.name + ".manifest.json")
    target.write_text(json.dumps(fields, sort_keys=True, indent=2) + "\n")


def _load_source(path: Path):
    """A coefficient JSON file or a fit directory -> (W, mlp or None)."""
    if path.is_dir():
        result = FitResult.load(path)
        return result.W, result.mlp, result
    W = CoefficientField.from_dict(json.loads(path.read_text()))
    return W, None, None


def _dims(W: CoefficientField, h, w) -> tuple[int, int]:
    h = h if h is not None else W.h
    w = w if w is not None else W.w
    if h is None or w is None:
        raise ValueError("coefficient file has no native size; pass --h and --w")
    return int(h), int(w)


def cmd_lattice(args) -> int:
    lattice = build_lattice(args.f)
    print(lattice.to_json())
    print(f"c={lattice.c}")
    return 0


def cmd_encode(args) -> int:
    W = encode_mask(load_mask(args.input), EncoderConfig(args.f, args.alpha))
    args.out.write_text(W.to_json())
    _write_manifest(args, args.out)
    return 0


def cmd_decode(args) -> int:
    W = CoefficientField.from_dict(json.loads(args.input.read_text()))
    h, w = _dims(W, args.h, args.w)
    if W.mode == GLOBAL:
        raster = reconstruct(W, h, w, args.s)
    else:
        raster = super_resolve(W, h, w, args.s)
    save_mask(raster, args.out, binarize=args.binarize)
    _write_manifest(args, args.out)
    return 0


def cmd_spectrum(args) -> int:
    files = iter_dataset(args.dataset)
    if not files:
        raise ValueError(f"{args.dataset}: no mask files found")
    masks = []
    for mf in files:
        try:
            masks.append((mf.name, mf.load()))
        except (OSError, ValueError) as exc:
            raise ValueError(f"cannot read {mf.path}: {exc}") from None
    workers = int(os.environ.get("FMK_THREADS", "0")) or (os.cpu_count() or 1)
    report = spectrum_analysis(masks, args.fmax, args.alpha, workers=workers)
    args.out.write_text(report.to_csv())
    args.out.with_suffix(".json").write_text(report.to_json())
    _write_manifest(args, args.out)
    return 0


def cmd_fit(args) -> int:
    config = FitConfig(
        mode=args.mode,
        f=args.f,
        use_mlp=args.mlp,
        steps=args.steps,
        learning_rate=args.lr,
        optimizer=args.optimizer,
        seed=args.seed,
        hidden_dims=args.hidden,
    )
    result = fit_mask(load_mask(args.target), config)
    result.save(args.out)
    _write_manifest(args, args.out, directory=True)
    print(f"final_iou={result.final_iou:.6f}")
    return 0


def cmd_upscale(args) -> int:
    W, mlp, result = _load_source(args.input)
    if result is not None:
        raster = predict(result, args.s)
    else:
        raster = super_resolve(W, *_dims(W, None, None), args.s)
    save_mask(raster, args.out, binarize=args.binarize)
    _write_manifest(args, args.out)
    return 0


def cmd_render(args) -> int:
    W, mlp, _ = _load_source(args.input)
    if args.source == MLP and mlp is None:
        raise ValueError("--source mlp needs a fit directory trained with --mlp")
    config = RefinementConfig(steps=args.steps, points=args.points, point_source=args.source)
    trace = [] if args.trace else None
    h, w = _dims(W, None, None)
    raster = subdivision_refine(W, mlp, h, w, config, trace=trace)
    save_mask(raster, args.out, binarize=args.binarize)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["step", "i", "j", "score"])
            for step, i, j, score in trace:
                writer.writerow([step, i, j, repr(score)])
    _write_manifest(args, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fouriermask", description="Fourier-series mask encoding and rendering.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattice", help="print the frequency lattice and its size")
    p.add_argument("--f", type=nonneg, required=True, help="maximum frequency")
    p.set_defaults(handler=cmd_lattice)

    p = sub.add_parser("encode", help="encode a binary mask as global coefficients")
    p.add_argument("--in", dest="input", type=Path, required=True, help="mask file (.pgm, .txt, .rle.json)")
    p.add_argument("--f", type=nonneg, required=True, help="maximum frequency (< min(h, w) / 2)")
    p.add_argument("--alpha", type=_positive_float, default=8.0, help="logit amplitude (default 8)")
    p.add_argument("--out", type=Path, required=True, help="coefficient JSON to write")
    p.set_defaults(handler=cmd_encode)

    p = sub.add_parser("decode", help="reconstruct a mask from a coefficient file")
    p.add_argument("--in", dest="input", type=Path, required=True, help="coefficient JSON")
    p.add_argument("--h", type=positive, default=None, help="base height (default: from file)")
    p.add_argument("--w", type=positive, default=None, help="base width (default: from file)")
    p.add_argument("--s", type=positive, default=1, help="scaling factor; output is 2^(s-1) times larger")
    p.add_argument("--out", type=Path, required=True, help="mask file to write")
    p.add_argument("--binarize", action="store_true", help="threshold at 0.5 before writing")
    p.set_defaults(handler=cmd_decode)

    p = sub.add_parser("spectrum", help="mean reconstruction loss per truncation frequency")
    p.add_argument("--dataset", type=Path, required=True, help="directory of mask files")
    p.add_argument("--fmax", type=nonneg, required=True, help="largest frequency to evaluate")
    p.add_argument("--alpha", type=_positive_float, default=8.0, help="logit amplitude (default 8)")
    p.add_argument("--out", type=Path, required=True, help="report CSV (a .json twin is written too)")
    p.set_defaults(handler=cmd_spectrum)

    p = sub.add_parser("fit", help="fit coefficients (and optionally an MLP) to a mask")
    p.add_argument("--target", type=Path, required=True, help="binary mask file")
    p.add_argument("--mode", choices=(GLOBAL, PER_PIXEL), default=GLOBAL, help="coefficient layout")
    p.add_argument("--f", type=nonneg, default=12, help="maximum frequency (default 12)")
    p.add_argument("--mlp", action="store_true", help="also train the sine MLP branch")
    p.add_argument("--hidden", type=_hidden, default=(256, 256, 256), help="MLP hidden sizes, e.g. 256,256")
    p.add_argument("--steps", type=positive, default=3000, help="optimizer steps (default 3000)")
    p.add_argument("--lr", type=_positive_float, default=1e-2, help="learning rate (default 1e-2)")
    p.add_argument("--optimizer", choices=OPTIMIZERS, default="adaptive-moments", help="update rule")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("upscale", help="super-resolve by coordinate sub-sampling")
    p.add_argument("--in", dest="input", type=Path, required=True, help="coefficient JSON or fit directory")
    p.add_argument("--s", type=positive, required=True, help="scaling factor; output is 2^(s-1) times larger")
    p.add_argument("--out", type=Path, required=True, help="mask file to write")
    p.add_argument("--binarize", action="store_true", help="threshold at 0.5 before writing")
    p.set_defaults(handler=cmd_upscale)

    p = sub.add_parser("render", help="subdivision refinement of uncertain pixels")
    p.add_argument("--in", dest="input", type=Path, required=True, help="fit directory or coefficient JSON")
    p.add_argument("--steps", type=nonneg, default=3, help="subdivision steps (default 3)")
    p.add_argument("--points", type=positive, default=784, help="points replaced per step (default 784)")
    p.add_argument("--source", choices=(EXACT, MLP), default=EXACT, help="point evaluator")
    p.add_argument("--out", type=Path, required=True, help="mask file to write")
    p.add_argument("--trace", type=Path, default=None, help="optional CSV of replaced points")
    p.add_argument("--binarize", action="store_true", help="threshold at 0.5 before writing")
    p.set_defaults(handler=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"fouriermask {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
