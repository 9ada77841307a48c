"""End-to-end comparison of two point clouds, plus report and table formatting.

Stages: load/generate -> FPS sample sets ("First", "Second") -> balanced
70/15/15 split -> reducer fit on the training split -> 2-D embedding of
each label's test samples -> one Gaussian mixture per label -> modified
symmetric KL between the two mixtures. Classical baselines run directly on
the two input clouds.
"""

import csv
import io
import json
import os
import time
from dataclasses import asdict, dataclass, field, replace

import jsonschema
import numpy as np

from . import __version__
from .audio import audio_to_cloud, load_wav
from .cloud import minmax_normalize
from .divergence import make_grid, mskl
from .errors import GeoCloudError, PipelineError, SchemaError
from .gmm import EmConfig, fit_em
from .metrics import chamfer, dj, emd, hausdorff
from .ply import load_ply, write_ply
from .reduction import LatentSet, TrainConfig, ae_train, embed, pca_fit
from .sampling import SampleSet, extract_samples, fps, split_dataset
from .shapes import ShapeSpec

LABELS = ("First", "Second")
METRIC_ABBREV = {"chamfer": "Ch", "hausdorff": "H", "emd": "EMD", "dj": "dJ", "mskl": "IGM"}


@dataclass
class PipelineConfig:
    """Every knob of a comparison run.

    ``input_a`` / ``input_b`` are either a path (``.ply`` or ``.wav``) or a
    shape spec ``"shape:<kind>[:<n>[:<seed>]]"``.
    """

    input_a: str
    input_b: str
    count: int = 960
    size: int = 512
    ratios: tuple = (0.7, 0.15, 0.15)
    reduction: str = "pca"
    epochs: int = 400
    batch_size: int = 16
    lr: float = 1e-3
    ae_dtype: str = "float64"
    gmm_k: int = 5
    gmm_mode: str = "diagonal"
    grid: int = 200
    pad: float = 6.0
    raw_sum: bool = False
    seed: int = 0
    n_fft: int = 1024
    hop: int = 256
    normalize_audio: bool = True
    baselines: tuple = ("chamfer", "hausdorff")
    emd_size: int = 256
    dj_size: int = 16
    output: str = None

    def __post_init__(self):
        self.ratios = tuple(self.ratios)
        self.baselines = tuple(self.baselines)
        if self.reduction not in ("pca", "ae"):
            raise ValueError(f"reduction must be 'pca' or 'ae', not {self.reduction!r}")

    def validate(self):
        for src in (self.input_a, self.input_b):
            if not src.startswith("shape:") and not os.path.exists(src):
                raise FileNotFoundError(f"input {src!r} does not exist")

    def to_dict(self):
        d = asdict(self)
        d["ratios"] = list(self.ratios)
        d["baselines"] = list(self.baselines)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def load_config(path, env=None):
    """Read a TOML or JSON config file; ``GEOCLOUD_SEED`` in the environment overrides ``seed``."""
    if str(path).endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    else:
        with open(path) as fh:
            data = json.load(fh)
    cfg = PipelineConfig.from_dict(data)
    return apply_env(cfg, env)


def apply_env(cfg, env=None):
    env = os.environ if env is None else env
    if env.get("GEOCLOUD_SEED"):
        cfg = replace(cfg, seed=int(env["GEOCLOUD_SEED"]))
    return cfg


def parse_shape(src):
    parts = src.split(":")[1:]
    kind = parts[0]
    n = int(parts[1]) if len(parts) > 1 and parts[1] else 2048
    seed = int(parts[2]) if len(parts) > 2 and parts[2] else 0
    return ShapeSpec(kind, n, seed)


def load_input(src, n_fft=1024, hop=256, normalize_audio=True):
    """Turn an input spec (shape, PLY or WAV path) into the cloud the comparison uses."""
    if src.startswith("shape:"):
        spec = parse_shape(src)
        return spec.generate().with_label(f"{spec.kind}")
    name = os.path.splitext(os.path.basename(src))[0]
    if src.lower().endswith(".wav"):
        cloud = audio_to_cloud(load_wav(src), n_fft, hop, label=name)
        return minmax_normalize(cloud) if normalize_audio else cloud
    return load_ply(src, label=name)


def compute_baselines(a, b, names=("chamfer", "hausdorff"), emd_size=256, dj_size=16, seed=0,
                      squared=False, dj_mode="greedy"):
    """Classical distances between the raw clouds.

    EMD and d_J run on farthest-point subsamples of ``emd_size`` and
    ``dj_size`` points (or the full clouds when they are already that small
    and equally sized). d_J defaults to the greedy upper bound.
    """
    out = {}
    for name in names:
        if name == "chamfer":
            out[name] = chamfer(a, b, squared=squared).value
        elif name == "hausdorff":
            out[name] = hausdorff(a, b).value
        elif name in ("emd", "dj"):
            k = emd_size if name == "emd" else dj_size
            k = min(k, a.n, b.n)
            pa = a if a.n == k else fps(a, k, seed=seed)
            pb = b if b.n == k else fps(b, k, seed=seed)
            out[name] = emd(pa, pb).value if name == "emd" else dj(pa, pb, mode=dj_mode).value
        else:
            raise ValueError(f"unknown baseline metric {name!r}")
    return out


def sample_stage(a, b, cfg):
    sa = extract_samples(a, cfg.count, cfg.size, label=LABELS[0], seed=cfg.seed)
    sb = extract_samples(b, cfg.count, cfg.size, label=LABELS[1], seed=cfg.seed)
    return sa, sb


def reduce_stage(sa, sb, cfg, labels=LABELS):
    """Split, fit the reducer on the training part and embed each label's test samples.

    Returns ``(test LatentSet, model, loss history or None)``.
    """
    split = split_dataset(sa, sb, cfg.ratios, seed=cfg.seed)
    train = [s for s, _ in split.train]
    history = None
    if cfg.reduction == "pca":
        model = pca_fit(train)
    else:
        tc = TrainConfig(lr=cfg.lr, batch_size=cfg.batch_size, epochs=cfg.epochs, seed=cfg.seed,
                         dtype=cfg.ae_dtype)
        val = [s for s, _ in split.validation]
        model, history = ae_train(train, val, tc)
    rows, row_labels = [], []
    for label in labels:
        test = split.by_label("test", label)
        rows.append(embed(test, model).rows)
        row_labels += [label] * len(test)
    return LatentSet(np.concatenate(rows), row_labels), model, history


def fit_stage(latent, label, cfg):
    em = EmConfig(seed=cfg.seed, mode=cfg.gmm_mode)
    return fit_em(latent.select(label), cfg.gmm_k, em)


def divergence_stage(p, q, cfg):
    grid = make_grid(p, q, cfg.grid, cfg.pad)
    return mskl(p, q, grid, weighted=not cfg.raw_sum)


@dataclass
class ComparisonReport:
    name_a: str
    name_b: str
    metrics: dict
    config: dict
    details: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    version: str = __version__

    def to_dict(self, timings=True):
        d = {"name_a": self.name_a, "name_b": self.name_b, "metrics": dict(self.metrics),
             "config": self.config, "details": self.details, "version": self.version}
        if timings:
            d["timings"] = dict(self.timings)
        return d

    def to_json(self, timings=True):
        return json.dumps(self.to_dict(timings), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d):
        validate_report(d)
        return cls(d["name_a"], d["name_b"], d["metrics"], d["config"], d.get("details", {}),
                   d.get("timings", {}), d["version"])


REPORT_SCHEMA = {
    "type": "object",
    "required": ["name_a", "name_b", "metrics", "config", "version"],
    "properties": {
        "name_a": {"type": "string"},
        "name_b": {"type": "string"},
        "version": {"type": "string"},
        "metrics": {
            "type": "object",
            "required": ["mskl"],
            "properties": {k: {"type": "number", "minimum": 0} for k in METRIC_ABBREV},
            "additionalProperties": False,
        },
        "config": {"type": "object", "required": ["seed"]},
        "details": {"type": "object"},
        "timings": {"type": "object", "additionalProperties": {"type": "number"}},
    },
}


def validate_report(d):
    try:
        jsonschema.validate(d, REPORT_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(exc.message) from exc


class _Stage:
    def __init__(self, name, timings):
        self.name = name
        self.timings = timings

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.name] = time.perf_counter() - self.t0
        if exc is not None and not isinstance(exc, PipelineError) and \
                isinstance(exc, (GeoCloudError, ValueError, OSError, ArithmeticError)):
            raise PipelineError(self.name, exc) from exc
        return False


def run_pipeline(cfg):
    """Run the full comparison described by ``cfg`` and return a ComparisonReport."""
    timings = {}
    with _Stage("load", timings):
        cfg.validate()
        a = load_input(cfg.input_a, cfg.n_fft, cfg.hop, cfg.normalize_audio)
        b = load_input(cfg.input_b, cfg.n_fft, cfg.hop, cfg.normalize_audio)
    with _Stage("baseline", timings):
        metrics = compute_baselines(a, b, cfg.baselines, cfg.emd_size, cfg.dj_size, cfg.seed)
    with _Stage("sample", timings):
        sa, sb = sample_stage(a, b, cfg)
    with _Stage("reduce", timings):
        latent, _, history = reduce_stage(sa, sb, cfg)
    with _Stage("fit", timings):
        p, rep_p = fit_stage(latent, LABELS[0], cfg)
        q, rep_q = fit_stage(latent, LABELS[1], cfg)
    with _Stage("divergence", timings):
        div = divergence_stage(p, q, cfg)
    metrics["mskl"] = div.mskl
    details = {
        "kl_pq": div.kl_pq, "kl_qp": div.kl_qp, "grid": div.grid, "weighted": div.weighted,
        "gmm_first": p.to_dict(), "gmm_second": q.to_dict(),
        "em_iterations": [rep_p.iterations, rep_q.iterations],
        "n_points": [a.n, b.n],
    }
    if history is not None:
        details["train_loss"] = history["train"]
        details["val_loss"] = history["val"]
    report = ComparisonReport(a.label or cfg.input_a, b.label or cfg.input_b, metrics,
                              cfg.to_dict(), details, timings)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(report.to_json() + "\n")
    return report


# -- sample directories --------------------------------------------------------

def save_samples(sset, directory):
    """Write each sample as binary PLY and record the set in ``manifest.json``.

    Several labels may share one directory; each gets its own manifest entry.
    """
    os.makedirs(directory, exist_ok=True)
    for i, s in enumerate(sset.samples):
        write_ply(s, os.path.join(directory, f"{sset.source_label}_{i:05d}.ply"), format="binary")
    path = os.path.join(directory, "manifest.json")
    manifest = {"sets": {}}
    if os.path.exists(path):
        with open(path) as fh:
            manifest = json.load(fh)
    manifest["sets"][sset.source_label] = {"count": len(sset), "size": sset.size,
                                          "seeds": list(sset.seeds)}
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def load_samples(directory, label=None):
    """Read sample sets written by :func:`save_samples`.

    Returns the SampleSet for ``label``, or a dict of all sets when no label is given.
    """
    with open(os.path.join(directory, "manifest.json")) as fh:
        sets = json.load(fh)["sets"]
    out = {}
    for lab, meta in sets.items():
        if label is not None and lab != label:
            continue
        samples = [load_ply(os.path.join(directory, f"{lab}_{i:05d}.ply"), label=lab)
                   for i in range(meta["count"])]
        out[lab] = SampleSet(samples, lab, meta.get("seeds", []))
    if label is not None:
        if label not in out:
            raise KeyError(f"no samples labelled {label!r} in {directory}")
        return out[label]
    return out


# -- tables ----------------------------------------------------------------------

def _fmt(v):
    return "0" if v == 0 else f"{v:.4g}"


def emit_table(reports, format="markdown"):
    """Lay reports out as a lower-triangular pairwise table.

    Names are ordered by first appearance. ``format`` is ``"json"``,
    ``"csv"`` (one row per pair and metric) or ``"markdown"``.
    """
    if not reports:
        raise SchemaError("no reports to tabulate")
    metric_set = None
    names, cells = [], {}
    for r in reports:
        ms = tuple(sorted(r.metrics))
        if metric_set is None:
            metric_set = ms
        elif ms != metric_set:
            raise SchemaError(f"inconsistent metric sets: {metric_set} vs {ms}")
        for nm in (r.name_a, r.name_b):
            if nm not in names:
                names.append(nm)
        cells[frozenset((r.name_a, r.name_b))] = r.metrics
    order = [m for m in METRIC_ABBREV if m in metric_set]
    entries = []
    for i, row in enumerate(names):
        for col in names[:i + 1]:
            m = cells.get(frozenset((row, col)))
            if m is not None:
                entries.append((row, col, m))

    if format == "json":
        return json.dumps({"names": names, "metrics": order,
                           "cells": [{"row": r, "col": c, "metrics": {k: m[k] for k in order}}
                                     for r, c, m in entries]}, indent=2)
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "col", "metric", "value"])
        for r, c, m in entries:
            for k in order:
                w.writerow([r, c, k, repr(float(m[k]))])
        return buf.getvalue()
    if format == "markdown":
        lookup = {(r, c): m for r, c, m in entries}
        lines = ["| | " + " | ".join(names) + " |", "|---" * (len(names) + 1) + "|"]
        for i, row in enumerate(names):
            cols = []
            for j, col in enumerate(names):
                m = lookup.get((row, col)) if j <= i else None
                cols.append("<br>".join(f"{METRIC_ABBREV[k]} = {_fmt(m[k])}" for k in order)
                            if m is not None else "")
            lines.append(f"| **{row}** | " + " | ".join(cols) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"format must be json, csv or markdown, not {format!r}")


def load_report(path):
    with open(path) as fh:
        return ComparisonReport.from_dict(json.load(fh))
