"""Farthest point sampling, sample-set extraction and balanced train/val/test splits."""

from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud, as_array
from .errors import EmptyRequest, InsufficientPoints, RatioError


def fps_indices(points, s, seed=0, start=None):
    """Indices chosen by farthest point sampling, in selection order.

    The first index is ``start`` if given, otherwise drawn from
    ``default_rng(seed)``. Each later pick maximizes the distance to the
    nearest already-selected point; ties go to the lowest index.
    """
    pts = as_array(points)
    n = pts.shape[0]
    if s < 1:
        raise EmptyRequest("fps needs s >= 1")
    if s > n:
        raise InsufficientPoints(f"cannot pick {s} points from a cloud of {n}")
    if start is None:
        start = int(np.random.default_rng(seed).integers(n))
    idx = np.empty(s, dtype=np.intp)
    idx[0] = start
    cols = np.ascontiguousarray(pts.T)
    # running squared distance from every point to its nearest selected point
    mind = _sqdist_to(cols, pts[[start]].T)[0]
    buf = np.empty((2, 1, n))
    for i in range(1, s):
        nxt = int(np.argmax(mind))
        idx[i] = nxt
        np.minimum(mind, _sqdist_to(cols, pts[[nxt]].T, buf)[0], out=mind)
    return idx


def _sqdist_to(cols, centers, buf=None):
    """Squared distances from every point (columns of ``cols``, shape (m, n)) to each center.

    ``centers`` has shape (m, c); the result has shape (c, n). ``buf`` is an
    optional (2, c, n) scratch array.
    """
    c, n = centers.shape[1], cols.shape[1]
    if buf is None:
        buf = np.empty((2, c, n))
    acc, tmp = buf[0], buf[1]
    np.subtract(cols[0][None, :], centers[0][:, None], out=acc)
    np.multiply(acc, acc, out=acc)
    for k in range(1, cols.shape[0]):
        np.subtract(cols[k][None, :], centers[k][:, None], out=tmp)
        np.multiply(tmp, tmp, out=tmp)
        acc += tmp
    return acc


def fps(cloud, s, seed=0, start=None):
    """Farthest point sample of ``s`` points, returned as a new PointCloud."""
    pts = as_array(cloud)
    idx = fps_indices(pts, s, seed=seed, start=start)
    label = cloud.label if isinstance(cloud, PointCloud) else None
    return PointCloud(pts[idx], label=label)


def covering_radius(cloud, selected):
    """Largest distance from any cloud point to its nearest selected point."""
    pts = as_array(cloud)
    sel = as_array(selected)
    d = np.sqrt(((pts[:, None, :] - sel[None, :, :]) ** 2).sum(-1))
    return float(d.min(axis=1).max())


@dataclass
class SampleSet:
    samples: list
    source_label: str
    seeds: list = field(default_factory=list)

    def __len__(self):
        return len(self.samples)

    @property
    def size(self):
        return self.samples[0].n if self.samples else 0


def extract_samples(cloud, count, s, label="First", seed=0):
    """Draw ``count`` FPS samples of ``s`` points; draw ``i`` uses seed ``seed + i``."""
    if count < 1:
        raise EmptyRequest("extract_samples needs count >= 1")
    pts = as_array(cloud)
    seeds = [seed + i for i in range(count)]
    samples = []
    for lo in range(0, count, _BATCH):
        idx = _fps_batch(pts, s, seeds[lo:lo + _BATCH])
        samples.extend(PointCloud(pts[row], label=label) for row in idx)
    return SampleSet(samples, label, seeds)


_BATCH = 32


def _fps_batch(pts, s, seeds):
    """Run several FPS draws side by side; row i equals ``fps_indices(pts, s, seeds[i])``."""
    n = pts.shape[0]
    if s < 1:
        raise EmptyRequest("fps needs s >= 1")
    if s > n:
        raise InsufficientPoints(f"cannot pick {s} points from a cloud of {n}")
    starts = np.array([np.random.default_rng(sd).integers(n) for sd in seeds], dtype=np.intp)
    idx = np.empty((len(seeds), s), dtype=np.intp)
    idx[:, 0] = starts
    cols = np.ascontiguousarray(pts.T)
    mind = _sqdist_to(cols, pts[starts].T).copy()
    buf = np.empty((2, len(seeds), n))
    for i in range(1, s):
        nxt = np.argmax(mind, axis=1)
        idx[:, i] = nxt
        np.minimum(mind, _sqdist_to(cols, pts[nxt].T, buf), out=mind)
    return idx


@dataclass
class DataSplit:
    """Three lists of ``(sample, label)`` pairs."""

    train: list
    validation: list
    test: list
    ratios: tuple
    # position of each entry within its source SampleSet, parallel to the parts
    source_index: dict = field(default_factory=dict, repr=False)

    def sizes(self):
        return len(self.train), len(self.validation), len(self.test)

    def by_label(self, part, label):
        """Samples of one label in one part, ordered by their index in the source set."""
        entries = getattr(self, part)
        index = self.source_index.get(part, range(len(entries)))
        picked = sorted((i, s) for (s, lab), i in zip(entries, index) if lab == label)
        return [s for _, s in picked]


def _split_counts(n, ratios):
    n_train = int(round(n * ratios[0]))
    n_val = int(round(n * ratios[1]))
    n_train = min(n_train, n)
    n_val = min(n_val, n - n_train)
    return n_train, n_val, n - n_train - n_val


def split_dataset(a, b, ratios=(0.7, 0.15, 0.15), seed=0):
    """Split two labeled sample sets into balanced train/validation/test lists.

    Each label is split separately with the same seeded permutation so every
    part holds equal counts of both labels (when the sets have equal size).
    The parts are then interleaved and shuffled.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise RatioError(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    parts = ([], [], [])
    for sset in (a, b):
        n = len(sset.samples)
        perm = np.random.default_rng(seed).permutation(n)
        n_train, n_val, _ = _split_counts(n, ratios)
        bounds = (0, n_train, n_train + n_val, n)
        for k in range(3):
            parts[k].extend((sset.samples[i], sset.source_label, int(i))
                            for i in perm[bounds[k]:bounds[k + 1]])
    rng = np.random.default_rng([seed, 1])
    shuffled, index = [], {}
    for name, part in zip(("train", "validation", "test"), parts):
        order = rng.permutation(len(part))
        shuffled.append([part[i][:2] for i in order])
        index[name] = [part[i][2] for i in order]
    return DataSplit(*shuffled, ratios=ratios, source_index=index)
