"""Command-line interface.

Subcommands: gen-dataset, recolor, predict-colors, palette, decompose,
refine, eval, serve, batch. Flags mirror the DESIGNRECOLOR_* environment
variables for the service options. Usage errors exit 2; pipeline errors
exit 1 with a stage-tagged message.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .bundle import load_bundle
from .errors import RecolorError
from .evaluate import eval_dataset, write_report
from .instructions import parse_instruction
from .palette import DEFAULT_PALETTE_SIZE, decompose_layers, extract_palette
from .recolor import recolor_instruction, result_manifest
from .regions import refine_soft_mask
from .sourcecolor import (
    DEFAULT_CONFIDENCE_THRESHOLD,
    prediction_report,
    predict_source_colors,
)
from .synth import GeneratorConfig, generate_dataset


def _env(name, default):
    return os.environ.get(f"DESIGNRECOLOR_{name}", default)


def _read_image(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def _read_mask(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8) >= 128


def _write_image(path, arr):
    Image.fromarray(np.asarray(arr)).save(path, format="PNG")


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1), encoding="utf-8")


def _palette_arg(value):
    return value if value == "auto" else int(value)


def build_parser():
    parser = argparse.ArgumentParser(prog="designrecolor")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="generate a synthetic annotated dataset")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--degrade", action="store_true")
    p.add_argument("--strength", type=float, default=1.0)
    p.add_argument("--photo-dir", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("predict-colors", help="predict source colors for an instruction")
    p.add_argument("--bundle", required=True)
    p.add_argument("--instruction", required=True)
    p.add_argument("--threshold", type=float,
                   default=float(_env("THRESHOLD_DEFAULT", DEFAULT_CONFIDENCE_THRESHOLD)))
    p.add_argument("--out", default=None, help="report JSON path (stdout otherwise)")

    p = sub.add_parser("recolor", help="recolor a bundle per an instruction")
    p.add_argument("--bundle", required=True)
    p.add_argument("--instruction", required=True)
    p.add_argument("--threshold", type=float,
                   default=float(_env("THRESHOLD_DEFAULT", DEFAULT_CONFIDENCE_THRESHOLD)))
    p.add_argument("--palette-n", type=_palette_arg,
                   default=_palette_arg(_env("PALETTE_N", DEFAULT_PALETTE_SIZE)))
    p.add_argument("--mask", default=None, help="optional user region mask PNG")
    p.add_argument("--out", required=True)

    p = sub.add_parser("palette", help="extract a convex-hull palette from a photo")
    p.add_argument("--photo", required=True)
    p.add_argument("--n", type=_palette_arg, default=DEFAULT_PALETTE_SIZE)
    p.add_argument("--out", default=None)

    p = sub.add_parser("decompose", help="write per-layer alpha rasters for a photo")
    p.add_argument("--photo", required=True)
    p.add_argument("--n", type=_palette_arg, default=DEFAULT_PALETTE_SIZE)
    p.add_argument("--out", required=True)

    p = sub.add_parser("refine", help="refine a binary region mask into a soft one")
    p.add_argument("--photo", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True, help="output soft foreground mask PNG")

    p = sub.add_parser("eval", help="evaluate prediction accuracy over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="report directory")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=int(_env("PORT", 8765)))
    p.add_argument("--store", default=_env("STORE", "./store"))
    p.add_argument("--threshold-default", type=float,
                   default=float(_env("THRESHOLD_DEFAULT", DEFAULT_CONFIDENCE_THRESHOLD)))
    p.add_argument("--palette-n", type=_palette_arg,
                   default=_palette_arg(_env("PALETTE_N", DEFAULT_PALETTE_SIZE)))

    p = sub.add_parser("batch", help="apply one instruction across a bundle collection")
    p.add_argument("--collection", required=True, help="directory of bundle directories")
    p.add_argument("--instruction", required=True)
    p.add_argument("--threshold", type=float,
                   default=float(_env("THRESHOLD_DEFAULT", DEFAULT_CONFIDENCE_THRESHOLD)))
    p.add_argument("--palette-n", type=_palette_arg,
                   default=_palette_arg(_env("PALETTE_N", DEFAULT_PALETTE_SIZE)))
    p.add_argument("--out", required=True)
    return parser


def _cmd_gen_dataset(args):
    cfg = GeneratorConfig(
        seed=args.seed,
        count=args.count,
        degrade=args.degrade,
        degrade_strength=args.strength,
        photo_dir=args.photo_dir,
    )
    summary = generate_dataset(cfg, args.out, workers=args.workers)
    print(f"wrote {summary['count']} cases, {summary['total_instructions']} instructions")
    return 0


def _cmd_predict_colors(args):
    bundle = load_bundle(args.bundle)
    ast = parse_instruction(args.instruction)
    result = predict_source_colors(bundle, ast.source, threshold=args.threshold)
    report = prediction_report(args.instruction, result)
    if args.out:
        _write_json(args.out, report)
    else:
        print(json.dumps(report, indent=1, sort_keys=True))
    return 0


def _save_results(bundle, args, results, out):
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, res in enumerate(results):
        stem = f"result_{res.region_index}_{i:02d}"
        _write_image(out / f"{stem}_photo.png", res.photo)
        _write_image(out / f"{stem}_design.png", res.design)
        paths.append(f"{stem}_photo.png")
    manifest = result_manifest(args.instruction, results, image_paths=paths)
    _write_json(out / "manifest.json", manifest)
    return paths


def _cmd_recolor(args):
    bundle = load_bundle(args.bundle)
    user_mask = _read_mask(args.mask) if args.mask else None
    results = recolor_instruction(
        bundle,
        args.instruction,
        user_mask=user_mask,
        threshold=args.threshold,
        palette_n=args.palette_n,
    )
    paths = _save_results(bundle, args, results, Path(args.out))
    print(f"wrote {len(paths)} result(s) to {args.out}")
    return 0


def _cmd_palette(args):
    photo = _read_image(args.photo)
    pal = extract_palette(photo, args.n)
    doc = {
        "colors": [[round(float(c), 4) for c in row] for row in pal.colors],
        "rmse": pal.fit_rmse,
    }
    if pal.warning:
        doc["warning"] = pal.warning
    if args.out:
        _write_json(args.out, doc)
    else:
        print(json.dumps(doc, indent=1, sort_keys=True))
    return 0


def _cmd_decompose(args):
    photo = _read_image(args.photo)
    pal = extract_palette(photo, args.n)
    dec = decompose_layers(photo, pal)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for layer in dec.layers:
        name = f"layer_{layer.palette_index:02d}_alpha.png"
        alpha8 = np.clip(np.round(layer.alpha * 255.0), 0, 255).astype(np.uint8)
        _write_image(out / name, alpha8)
        entries.append(
            {
                "palette_index": layer.palette_index,
                "color": [round(float(c), 4) for c in layer.color],
                "alpha_path": name,
            }
        )
    _write_json(
        out / "manifest.json",
        {
            "palette": [[round(float(c), 4) for c in row] for row in pal.colors],
            "reconstruction_rmse": dec.reconstruction_rmse,
            "layers": entries,
        },
    )
    print(f"wrote {len(entries)} layers to {args.out} (rmse {dec.reconstruction_rmse:.5f})")
    return 0


def _cmd_refine(args):
    photo = _read_image(args.photo)
    mask = _read_mask(args.mask)
    soft = refine_soft_mask(photo, mask)
    _write_image(args.out, np.clip(np.round(soft.m_f * 255.0), 0, 255).astype(np.uint8))
    print(f"wrote {args.out}")
    return 0


def _cmd_eval(args):
    report = eval_dataset(args.dataset)
    path = write_report(report, args.out)
    print(
        f"evaluated {report.n_instructions} instructions: "
        f"round-trip {report.parser_round_trip_rate:.3f}, MSE {report.color_mse:.2f}, "
        f"best threshold {report.best_threshold:.2f}"
    )
    print(f"report at {path}")
    return 0


def _cmd_serve(args):
    from .service import serve

    serve(args.port, args.store, args.threshold_default, args.palette_n)
    return 0


def _cmd_batch(args):
    root = Path(args.collection)
    bundles = sorted(p for p in root.iterdir() if (p / "annotations.json").exists())
    if not bundles:
        print(f"no bundles under {root}", file=sys.stderr)
        return 1
    out = Path(args.out)
    for bdir in bundles:
        bundle = load_bundle(bdir)
        results = recolor_instruction(
            bundle, args.instruction, threshold=args.threshold, palette_n=args.palette_n
        )
        _save_results(bundle, args, results, out / bdir.name)
        print(f"{bdir.name}: {len(results)} result(s)")
    return 0


_COMMANDS = {
    "gen-dataset": _cmd_gen_dataset,
    "predict-colors": _cmd_predict_colors,
    "recolor": _cmd_recolor,
    "palette": _cmd_palette,
    "decompose": _cmd_decompose,
    "refine": _cmd_refine,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
    "batch": _cmd_batch,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except RecolorError as exc:
        print(exc.tagged(), file=sys.stderr)
        if exc.suggestion:
            print(f"did you mean: {exc.suggestion!r}?", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"[io] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
