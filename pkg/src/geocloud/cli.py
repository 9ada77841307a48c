"""Command-line front end: ``geocloud <verb> ...``.

Each verb maps onto one pipeline stage and reads/writes the same artifacts
the library uses, so a staged run (gen, sample, reduce, fit, divergence)
reproduces the number ``compare`` prints for the same settings.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from . import __version__
from .audio import audio_to_cloud, load_wav
from .divergence import make_grid, mskl
from .errors import GeoCloudError
from .gmm import EmConfig, GmmParams, fit_em
from .pipeline import (LABELS, PipelineConfig, compute_baselines, emit_table, load_config,
                       load_input, load_report, load_samples, reduce_stage, run_pipeline,
                       save_samples)
from .ply import write_ply
from .reduction import LatentSet, save_model
from .sampling import extract_samples
from .shapes import generate

log = logging.getLogger("geocloud")


def _seed(value):
    """Explicit --seed wins, then GEOCLOUD_SEED, then 0."""
    if value is not None:
        return value
    env = os.environ.get("GEOCLOUD_SEED")
    return int(env) if env else 0


def _emit(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_gen(args):
    cloud = generate(args.shape, args.n, _seed(args.seed))
    write_ply(cloud, args.out, format=args.format)
    log.info("wrote %d points to %s", cloud.n, args.out)


def cmd_sample(args):
    cloud = load_input(args.inp, args.nfft, args.hop)
    sset = extract_samples(cloud, args.count, args.size, label=args.label, seed=_seed(args.seed))
    save_samples(sset, args.out)
    log.info("wrote %d samples of %d points to %s", len(sset), args.size, args.out)


def cmd_reduce(args):
    sets = load_samples(args.inp)
    labels = [lab for lab in LABELS if lab in sets]
    if len(labels) != 2:
        labels = sorted(sets)
    if len(labels) != 2:
        raise GeoCloudError(f"{args.inp} must hold exactly two labelled sample sets, found {sorted(sets)}")
    cfg = PipelineConfig("-", "-", reduction=args.method, epochs=args.epochs,
                         batch_size=args.batch_size, lr=args.lr, ae_dtype=args.dtype,
                         ratios=tuple(args.ratios), seed=_seed(args.seed))
    latent, model, history = reduce_stage(sets[labels[0]], sets[labels[1]], cfg, labels)
    latent.to_csv(args.out)
    if args.model:
        save_model(model, args.model)
    if history is not None:
        log.info("final train loss %.6f", history["train"][-1])


def cmd_fit(args):
    latent = LatentSet.from_csv(args.inp)
    rows = latent.select(args.label) if args.label else latent.rows
    params, report = fit_em(rows, args.k, EmConfig(seed=_seed(args.seed), mode=args.mode))
    params.to_json(args.out)
    log.info("EM: %d iterations, log-likelihood %.6f", report.iterations, report.log_likelihood)


def cmd_divergence(args):
    p, q = GmmParams.from_json(args.p), GmmParams.from_json(args.q)
    grid = make_grid(p, q, args.grid, args.pad)
    _emit(mskl(p, q, grid, weighted=not args.raw_sum).to_dict(), args.out)


def cmd_baseline(args):
    a = load_input(args.a)
    b = load_input(args.b)
    names = [m.strip() for m in args.metrics.split(",") if m.strip()]
    out = compute_baselines(a, b, names, args.emd_size, args.dj_size, _seed(args.seed),
                            squared=args.squared, dj_mode=args.dj_mode)
    _emit(out, args.out)


def cmd_audio2cloud(args):
    cloud = audio_to_cloud(load_wav(args.inp), args.nfft, args.hop)
    write_ply(cloud, args.out, format=args.format)
    log.info("wrote %d spectral points to %s", cloud.n, args.out)


_COMPARE_FLAGS = {
    "count": "count", "size": "size", "reduction": "reduction", "epochs": "epochs",
    "batch_size": "batch_size", "lr": "lr", "dtype": "ae_dtype", "k": "gmm_k", "mode": "gmm_mode",
    "grid": "grid", "pad": "pad", "nfft": "n_fft", "hop": "hop",
}


def cmd_compare(args):
    if args.config:
        cfg = load_config(args.config)
    else:
        if not (args.a and args.b):
            raise GeoCloudError("compare needs --a and --b, or --config")
        cfg = PipelineConfig(args.a, args.b)
    overrides = {field: getattr(args, flag) for flag, field in _COMPARE_FLAGS.items()
                 if getattr(args, flag) is not None}
    if args.a:
        overrides["input_a"] = args.a
    if args.b:
        overrides["input_b"] = args.b
    if args.raw_sum:
        overrides["raw_sum"] = True
    if args.baselines is not None:
        overrides["baselines"] = tuple(m for m in args.baselines.split(",") if m)
    if args.seed is not None:
        overrides["seed"] = args.seed
    elif not args.config and os.environ.get("GEOCLOUD_SEED"):
        overrides["seed"] = int(os.environ["GEOCLOUD_SEED"])
    cfg = replace(cfg, **overrides)
    report = run_pipeline(cfg)
    text = report.to_json(timings=not args.no_timings)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_table(args):
    reports = [load_report(p) for p in args.reports]
    text = emit_table(reports, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser():
    ap = argparse.ArgumentParser(prog="geocloud",
                                 description="Compare point clouds through GMMs fitted to latent embeddings.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("gen", help="generate a synthetic shape as PLY")
    p.add_argument("--shape", required=True, choices=["cube", "cone", "sphere"])
    p.add_argument("--n", type=int, default=2048)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=["ascii", "binary"], default="ascii")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sample", help="draw FPS samples from a cloud into a directory")
    p.add_argument("--in", dest="inp", required=True, help="PLY, WAV or shape:<kind>[:n[:seed]]")
    p.add_argument("--count", type=int, default=960)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--label", default=LABELS[0])
    p.add_argument("--seed", type=int)
    p.add_argument("--nfft", type=int, default=1024)
    p.add_argument("--hop", type=int, default=256)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("reduce", help="split samples, fit a reducer, write test latents as CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--method", choices=["pca", "ae"], default="pca")
    p.add_argument("--epochs", type=int, default=400)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--dtype", choices=["float64", "float32"], default="float64")
    p.add_argument("--ratios", type=float, nargs=3, default=[0.7, 0.15, 0.15])
    p.add_argument("--seed", type=int)
    p.add_argument("--model", help="also save the fitted reducer as JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("fit", help="fit a GMM to latent rows")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--label", help="only rows with this label")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--mode", choices=["diagonal", "full"], default="diagonal")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("divergence", help="grid MSKL between two GMM files")
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--pad", type=float, default=6.0)
    p.add_argument("--raw-sum", action="store_true", help="skip cell-volume weighting")
    p.add_argument("--out")
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("baseline", help="classical distances between two clouds")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--metrics", default="hausdorff,chamfer")
    p.add_argument("--squared", action="store_true", help="Chamfer on squared distances")
    p.add_argument("--dj-mode", choices=["greedy", "exact"], default="greedy")
    p.add_argument("--emd-size", type=int, default=256)
    p.add_argument("--dj-size", type=int, default=16)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("audio2cloud", help="WAV to (frequency, time, log-magnitude) PLY")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--nfft", type=int, default=1024)
    p.add_argument("--hop", type=int, default=256)
    p.add_argument("--format", choices=["ascii", "binary"], default="ascii")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_audio2cloud)

    p = sub.add_parser("compare", help="run the whole comparison and print a JSON report")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--config", help="TOML or JSON file with PipelineConfig fields")
    p.add_argument("--count", type=int)
    p.add_argument("--size", type=int)
    p.add_argument("--reduction", choices=["pca", "ae"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--dtype", choices=["float64", "float32"])
    p.add_argument("--k", type=int)
    p.add_argument("--mode", choices=["diagonal", "full"])
    p.add_argument("--grid", type=int)
    p.add_argument("--pad", type=float)
    p.add_argument("--nfft", type=int)
    p.add_argument("--hop", type=int)
    p.add_argument("--raw-sum", action="store_true")
    p.add_argument("--baselines", help="comma-separated, e.g. chamfer,hausdorff,emd,dj")
    p.add_argument("--seed", type=int)
    p.add_argument("--no-timings", action="store_true", help="omit wall-clock timings")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("table", help="lay stored reports out as a pairwise table")
    p.add_argument("reports", nargs="+")
    p.add_argument("--format", choices=["markdown", "csv", "json"], default="markdown")
    p.add_argument("--out")
    p.set_defaults(func=cmd_table)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        args.func(args)
    except (GeoCloudError, OSError, ValueError, KeyError) as exc:
        print(f"geocloud {args.verb}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
