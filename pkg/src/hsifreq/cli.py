"""Command-line entry point: ``hsifreq {synth,analyze,restore,eval}``.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 data or shape error.
Progress and warnings go to stderr; stdout carries one JSON summary per run.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from ._seeding import MASK64, mix64
from .cube import SceneSpec, read_cube, synth_scene, write_cube, write_pgm
from .degrade import degrade_pipeline, recipe_hash, sample_recipe, write_recipe
from .exceptions import HsiError
from .freq import AffineFreqModel, fit_affine_model, invert_affine_model, residual_spectrum
from .metrics import append_csv, evaluate, psnr, total_loss
from .validation import check_same_shape

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 1, 2, 3
INDEX_HEADER = ("item", "gt_path", "deg_path", "prompt_path", "recipe_path", "fired_families", "recipe_hash")
DEFAULT_BANDS = 172


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _log(msg):
    print(msg, file=sys.stderr)


def _emit(summary):
    print(json.dumps(summary, sort_keys=True))


def _threads(value):
    if value == "auto":
        return os.cpu_count() or 1
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("threads must be a positive integer or 'auto'") from None
    if n < 1:
        raise argparse.ArgumentTypeError("threads must be a positive integer or 'auto'")
    return n


def _seed(value):
    n = int(value, 0)
    if not 0 <= n <= MASK64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return n


def _prob(value):
    p = float(value)
    if not 0.0 <= p <= 1.0:
        raise argparse.ArgumentTypeError("prob must lie in [0, 1]")
    return p


def _positive(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return n


# --------------------------------------------------------------------------
# synth


def _synth_item(i, args, sources):
    item_seed = mix64(args.seed, i)
    if sources is None:
        h, w, c = args.procedural
        clean = synth_scene(SceneSpec(h, w, c, seed=mix64(item_seed, 0), n_materials=args.materials))
    else:
        path = sources[i % len(sources)]
        try:
            clean = read_cube(path)
        except OSError as exc:
            raise OSError(f"item {i}: cannot read {path}: {exc}") from exc
    recipe = sample_recipe(item_seed, args.prob, clean.bands)
    degraded, prompt = degrade_pipeline(clean, recipe)

    stem = f"{i:04d}"
    names = {
        "gt_path": f"{stem}_gt.hsc",
        "deg_path": f"{stem}_deg.hsc",
        "prompt_path": f"{stem}_prompt.txt",
        "recipe_path": f"{stem}_recipe.txt",
    }
    out = args.out
    try:
        write_cube(clean, out / names["gt_path"])
        write_cube(degraded, out / names["deg_path"])
        (out / names["prompt_path"]).write_text(prompt.text(args.format) + "\n", encoding="utf-8")
        write_recipe(recipe, out / names["recipe_path"])
    except OSError as exc:
        raise OSError(f"item {i}: cannot write output: {exc}") from exc
    return {
        "item": stem,
        **names,
        "fired_families": ";".join(recipe.fired) or "none",
        "recipe_hash": recipe_hash(recipe),
    }


def cmd_synth(args) -> int:
    if (args.procedural is None) == (args.input is None):
        raise UsageError("give exactly one of --procedural H W [C] or --input DIR")
    sources = None
    if args.procedural is not None:
        dims = list(args.procedural)
        if len(dims) not in (2, 3) or min(dims) < 1:
            raise UsageError("--procedural takes H W [C] with positive values")
        if len(dims) == 2:
            dims.append(DEFAULT_BANDS)
        args.procedural = tuple(dims)
    else:
        if not args.input.is_dir():
            raise FileNotFoundError(f"input directory {args.input} does not exist")
        sources = sorted(args.input.glob("*.hsc"))
        if not sources:
            raise FileNotFoundError(f"no .hsc cubes in {args.input}")
    args.out.mkdir(parents=True, exist_ok=True)

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        rows = list(pool.map(lambda i: _synth_item(i, args, sources), range(args.count)))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(INDEX_HEADER)
    for row in rows:
        writer.writerow([row[k] for k in INDEX_HEADER])
    (args.out / "index.csv").write_text(buf.getvalue(), encoding="utf-8")

    fired = {}
    for row in rows:
        for fam in row["fired_families"].split(";"):
            if fam != "none":
                fired[fam] = fired.get(fam, 0) + 1
    _log(f"synth: wrote {len(rows)} items to {args.out}")
    _emit({"command": "synth", "items": len(rows), "fired_counts": fired, "out": str(args.out)})
    return EXIT_OK


# --------------------------------------------------------------------------
# analyze


def cmd_analyze(args) -> int:
    clean = read_cube(args.clean)
    degraded = read_cube(args.degraded)
    check_same_shape(clean, degraded, ("clean", "degraded"))
    model = fit_affine_model(clean, degraded, args.bins)
    model.to_csv(args.out)

    written = []
    if args.bands:
        bands = [int(b) for b in args.bands.split(",")]
        bad = [b for b in bands if not 0 <= b < clean.bands]
        if bad:
            raise UsageError(f"--bands {bad} outside 0..{clean.bands - 1}")
        pgm_dir = args.pgm_dir or args.out.parent
        pgm_dir.mkdir(parents=True, exist_ok=True)
        for b in bands:
            path = pgm_dir / f"residual_band{b:03d}.pgm"
            write_pgm(residual_spectrum(clean, degraded, b), path)
            written.append(str(path))

    mu_abs = np.abs(model.mu)
    _emit(
        {
            "command": "analyze",
            "bins": model.n_bins,
            "lambda_re_first": float(model.lam[0].real),
            "lambda_re_last": float(model.lam[-1].real),
            "mu_abs_cv": float(mu_abs.std() / mu_abs.mean()) if mu_abs.mean() > 0 else 0.0,
            "model": str(args.out),
            "pgm": written,
        }
    )
    return EXIT_OK


# --------------------------------------------------------------------------
# restore


def cmd_restore(args) -> int:
    degraded = read_cube(args.degraded)
    model = AffineFreqModel.from_csv(Path(args.model))
    bad = model.non_invertible_bins(args.epsilon)
    if bad:
        _log(f"warning: non-invertible bins {bad}; inverse is floored at epsilon={args.epsilon}")
    restored = invert_affine_model(degraded, model, args.epsilon)
    write_cube(restored, args.out)
    summary = {"command": "restore", "out": str(args.out), "non_invertible_bins": bad}
    if args.reference is not None:
        ref = read_cube(args.reference)
        check_same_shape(ref, restored, ("reference", "restored"))
        before, after = psnr(ref, degraded), psnr(ref, restored)
        _log(f"restore: PSNR {before:.2f} dB -> {after:.2f} dB")
        summary.update(psnr_degraded=before, psnr_restored=after)
    _emit(summary)
    return EXIT_OK


# --------------------------------------------------------------------------
# eval


def _read_index(dataset):
    with (dataset / "index.csv").open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _eval_pair(ref_path, test_path, args):
    ref, test = read_cube(ref_path), read_cube(test_path)
    check_same_shape(ref, test, (str(ref_path), str(test_path)))
    metrics = evaluate(ref, test, args.range, args.scale_ratio)
    losses = total_loss(ref, test) if args.losses else None
    return metrics, losses


def cmd_eval(args) -> int:
    if args.dataset is not None:
        if args.ref is not None or args.test is not None:
            raise UsageError("--dataset excludes --ref/--test")
        rows = _read_index(args.dataset)
        pairs = [(args.dataset / r["gt_path"], args.dataset / r[args.test_column]) for r in rows]
    else:
        if args.ref is None or args.test is None:
            raise UsageError("give --ref and --test, or --dataset")
        pairs = [(args.ref, args.test)]

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        results = list(pool.map(lambda p: _eval_pair(*p, args), pairs))

    args.out.parent.mkdir(parents=True, exist_ok=True)
    loss_path = args.out.with_name(args.out.stem + "_losses" + args.out.suffix)
    for metrics, losses in results:
        append_csv(metrics, args.out)
        if losses is not None:
            append_csv(losses, loss_path)

    psnrs = [m.psnr_db for m, _ in results]
    summary = {
        "command": "eval",
        "pairs": len(results),
        "mean_psnr_db": float(np.mean(psnrs)),
        "mean_sam_deg": float(np.mean([m.sam_deg for m, _ in results])),
        "out": str(args.out),
    }
    if args.losses:
        summary["losses_out"] = str(loss_path)
        summary["mean_total_loss"] = float(np.mean([lo.total for _, lo in results]))
    _emit(summary)
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hsifreq", description="Hyperspectral degradation synthesis and frequency analysis.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--threads", type=_threads, default=1, help="worker threads or 'auto' (default 1)")

    p = sub.add_parser("synth", help="generate a degraded/clean dataset")
    p.add_argument("--procedural", type=int, nargs="+", metavar="N", help="H W [C]; C defaults to 172")
    p.add_argument("--input", type=Path, help="directory of clean .hsc cubes")
    p.add_argument("--count", type=_positive, default=1)
    p.add_argument("--prob", type=_prob, default=0.5, help="gate probability per family")
    p.add_argument("--seed", type=_seed, default=0, help="master seed")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--format", choices=("short", "long"), default="short", help="prompt text style")
    p.add_argument("--materials", type=_positive, default=6, help="endmembers per procedural scene")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="fit the affine frequency model of a clean/degraded pair")
    p.add_argument("--clean", type=Path, required=True)
    p.add_argument("--degraded", type=Path, required=True)
    p.add_argument("--bins", type=_positive, default=16)
    p.add_argument("--out", type=Path, required=True, help="model CSV path")
    p.add_argument("--bands", help="comma-separated band indices for residual-spectrum PGMs")
    p.add_argument("--pgm-dir", type=Path)
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("restore", help="invert a fitted model")
    p.add_argument("--degraded", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--reference", type=Path, help="clean cube; report PSNR on stderr")
    common(p)
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("eval", help="append quality metrics to a CSV")
    p.add_argument("--ref", type=Path)
    p.add_argument("--test", type=Path)
    p.add_argument("--dataset", type=Path, help="synth output directory; evaluates every item")
    p.add_argument(
        "--test-column", default="deg_path", choices=INDEX_HEADER[1:5], help="index.csv column compared to gt_path"
    )
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--losses", action="store_true", help="also append loss terms to <out>_losses.csv")
    p.add_argument("--range", type=float, default=1.0, help="PSNR data range")
    p.add_argument("--scale-ratio", type=float, default=1.0, help="ERGAS resolution ratio")
    common(p)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return EXIT_OK if exc.code in (None, 0) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        _log(f"hsifreq {args.command}: usage error: {exc}")
        return EXIT_USAGE
    except (HsiError, ValueError) as exc:
        _log(f"hsifreq {args.command}: data error: {exc}")
        return EXIT_DATA
    except OSError as exc:
        _log(f"hsifreq {args.command}: I/O error: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
