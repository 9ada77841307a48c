"""Classical point-cloud distances: Hausdorff, Chamfer, EMD and the permutation bound d_J."""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree

from .cloud import as_array, distance_matrix
from .errors import DimensionError, SizeMismatch, TooLargeForExact

DJ_EXACT_MAX = 9


@dataclass(frozen=True)
class MetricValue:
    name: str
    value: float
    exact: bool = True

    def __float__(self):
        return float(self.value)


def _pair(p, q):
    p = as_array(p)
    q = as_array(q)
    if p.shape[1] != q.shape[1]:
        raise DimensionError(f"dimension mismatch: {p.shape[1]} vs {q.shape[1]}")
    return p, q


def nearest_distances(src, dst):
    """Distance from every point of ``src`` to its nearest neighbour in ``dst``."""
    src, dst = _pair(src, dst)
    d, _ = cKDTree(dst).query(src, k=1)
    return np.asarray(d, dtype=np.float64)


def directed_hausdorff(p, q):
    """sup over p of the distance to the nearest point of q."""
    return float(nearest_distances(p, q).max())


def hausdorff(p, q):
    p, q = _pair(p, q)
    return MetricValue("hausdorff", max(directed_hausdorff(p, q), directed_hausdorff(q, p)))


def chamfer(p, q, squared=False):
    """Sum of the two mean nearest-neighbour distances.

    ``squared=True`` averages squared distances instead.
    """
    p, q = _pair(p, q)
    dpq = nearest_distances(p, q)
    dqp = nearest_distances(q, p)
    if squared:
        dpq, dqp = dpq ** 2, dqp ** 2
    return MetricValue("chamfer", float(dpq.mean() + dqp.mean()))


def emd(p, q):
    """Earth mover's distance between equal-size clouds: the cheapest bijection.

    Solved exactly as a linear assignment problem on the Euclidean cost matrix.
    """
    p, q = _pair(p, q)
    if p.shape[0] != q.shape[0]:
        raise SizeMismatch(f"EMD needs equal sizes, got {p.shape[0]} and {q.shape[0]}")
    cost = distance_matrix(p, q)
    rows, cols = linear_sum_assignment(cost)
    return MetricValue("emd", float(cost[rows, cols].sum()))


def _dj_cost(dx, dy, perm):
    """max over i, j of half the discrepancy between dx and the permuted dy."""
    perm = np.asarray(perm)
    return 0.5 * float(np.max(np.abs(dx - dy[np.ix_(perm, perm)])))


def _dj_exact(dx, dy):
    n = dx.shape[0]
    best = np.inf
    # permutations are enumerated in chunks so the cost is vectorized
    it = itertools.permutations(range(n))
    while True:
        chunk = np.array(list(itertools.islice(it, 20000)), dtype=np.intp)
        if chunk.size == 0:
            break
        permuted = dy[chunk[:, :, None], chunk[:, None, :]]
        costs = np.abs(permuted - dx[None]).reshape(len(chunk), -1).max(axis=1)
        best = min(best, float(costs.min()))
        if best == 0.0:
            break
    return 0.5 * best


def _dj_greedy(dx, dy):
    n = dx.shape[0]
    perm = list(range(n))
    cur = _dj_cost(dx, dy, perm)
    improved = True
    while improved and cur > 0.0:
        improved = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                perm[i], perm[j] = perm[j], perm[i]
                c = _dj_cost(dx, dy, perm)
                if c < cur:
                    cur = c
                    improved = True
                    break
                perm[i], perm[j] = perm[j], perm[i]
            if improved:
                break
    return cur


def dj(p, q, mode="exact"):
    """Permutation distortion bound on the Gromov-Hausdorff distance.

    Intra-cloud distances are Euclidean. ``mode="exact"`` searches all n!
    permutations (n <= 9); ``mode="greedy"`` runs first-improvement
    transposition search from the identity and returns an upper bound.
    """
    p, q = _pair(p, q)
    if p.shape[0] != q.shape[0]:
        raise SizeMismatch(f"d_J needs equal sizes, got {p.shape[0]} and {q.shape[0]}")
    dx = distance_matrix(p, p)
    dy = distance_matrix(q, q)
    if mode == "exact":
        if p.shape[0] > DJ_EXACT_MAX:
            raise TooLargeForExact(
                f"exact d_J enumerates n! permutations; n={p.shape[0]} > {DJ_EXACT_MAX}")
        return MetricValue("dj", _dj_exact(dx, dy), exact=True)
    if mode == "greedy":
        return MetricValue("dj", _dj_greedy(dx, dy), exact=False)
    raise ValueError(f"mode must be 'exact' or 'greedy', not {mode!r}")


METRICS = {
    "hausdorff": hausdorff,
    "chamfer": chamfer,
    "emd": emd,
    "dj": dj,
}
