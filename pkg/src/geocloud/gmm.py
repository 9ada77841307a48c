"""Gaussian mixture densities, EM fitting and canonical component ordering."""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import CovarianceError, DimensionError, InsufficientData

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class GmmParams:
    """Mixture weights (K,), means (K, m) and covariances (K, m, m).

    Covariances are always stored as full matrices; in ``"diagonal"`` mode
    the off-diagonal entries are zero.
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    mode: str = "diagonal"

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).ravel()
        mu = np.array(self.means, dtype=np.float64)
        if mu.ndim == 1:
            mu = mu[:, None]
        cov = np.array(self.covariances, dtype=np.float64)
        K, m = mu.shape
        if cov.ndim == 1 and m == 1:
            cov = cov[:, None, None]
        elif cov.ndim == 2 and cov.shape == (K, m):
            cov = np.stack([np.diag(c) for c in cov])
        if w.shape != (K,) or cov.shape != (K, m, m):
            raise DimensionError(
                f"inconsistent shapes: weights {w.shape}, means {mu.shape}, covariances {cov.shape}")
        if self.mode not in ("diagonal", "full"):
            raise ValueError(f"mode must be 'diagonal' or 'full', not {self.mode!r}")
        if np.any(w < 0) or np.any(w > 1) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must lie in [0, 1] and sum to 1, got {w}")
        if not np.allclose(cov, np.swapaxes(cov, 1, 2), rtol=0, atol=1e-12):
            raise CovarianceError("covariance matrices must be symmetric")
        if self.mode == "diagonal":
            off = cov * (1.0 - np.eye(m))
            if np.any(off != 0):
                raise CovarianceError("diagonal mode requires zero off-diagonal covariance")
        for a in (w, mu, cov):
            a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def K(self):
        return self.means.shape[0]

    @property
    def dim(self):
        return self.means.shape[1]

    def to_dict(self):
        return {
            "K": int(self.K),
            "mode": self.mode,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        params = cls(d["weights"], d["means"], d["covariances"], mode=d.get("mode", "full"))
        if "K" in d and int(d["K"]) != params.K:
            raise ValueError(f"K={d['K']} does not match {params.K} components")
        return params

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _cholesky(cov):
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise CovarianceError("covariance matrix is not positive definite") from None


def _gaussian_logpdf(X, mean, cov):
    """Log density of N(mean, cov) at each row of X."""
    L = _cholesky(cov)
    z = np.linalg.solve(L, (X - mean).T)
    maha = np.sum(z * z, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return -0.5 * (X.shape[1] * LOG_2PI + logdet + maha)


def _as_rows(x, m):
    X = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if X.ndim == 1:
        X = X[None, :] if X.size == m else X[:, None]
    if X.shape[1] != m:
        raise DimensionError(f"points have dimension {X.shape[1]}, expected {m}")
    return X


def gaussian_logpdf(x, mean, cov):
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    m = mean.size
    if cov.shape != (m, m):
        raise DimensionError(f"covariance shape {cov.shape} does not match mean of size {m}")
    X = _as_rows(x, m)
    out = _gaussian_logpdf(X, mean, cov)
    return float(out[0]) if np.ndim(x) <= 1 and X.shape[0] == 1 else out


def gaussian_pdf(x, mean, cov):
    """Multivariate normal density, evaluated through its logarithm."""
    return np.exp(gaussian_logpdf(x, mean, cov))


def component_logpdf(X, params):
    """(n, K) matrix of log(weight_k) + log N(x | mean_k, cov_k)."""
    X = _as_rows(X, params.dim)
    with np.errstate(divide="ignore"):
        logw = np.log(params.weights)
    cols = [_gaussian_logpdf(X, params.means[k], params.covariances[k])
            for k in range(params.K)]
    return np.column_stack(cols) + logw


def gmm_logpdf(x, params):
    X = _as_rows(x, params.dim)
    out = logsumexp(component_logpdf(X, params), axis=1)
    return float(out[0]) if np.ndim(x) <= 1 and X.shape[0] == 1 else out


def gmm_pdf(x, params):
    """Mixture density sum_k weight_k N(x | mean_k, cov_k)."""
    return np.exp(gmm_logpdf(x, params))


def canonicalize(params):
    """Reorder components by (trace of covariance, mean lexicographically, weight).

    For one-dimensional mixtures this is the variance-then-mean order that
    makes the parameterization unique.
    """
    keys = [(float(np.trace(params.covariances[k])),
             *map(float, params.means[k]),
             float(params.weights[k])) for k in range(params.K)]
    order = sorted(range(params.K), key=lambda k: keys[k])
    return GmmParams(params.weights[order], params.means[order],
                     params.covariances[order], mode=params.mode)


def param_space_dim(K, m, mode="full"):
    """Number of free parameters of a K-component mixture in m dimensions."""
    if K < 1 or m < 1:
        raise ValueError("K and m must be >= 1")
    if mode == "full":
        per = m + m * (m + 1) // 2
    elif mode == "diagonal":
        per = 2 * m
    else:
        raise ValueError(f"mode must be 'diagonal' or 'full', not {mode!r}")
    return K * per + (K - 1)


@dataclass
class EmConfig:
    max_iter: int = 500
    tol: float = 1e-6
    reg: float = 1e-6
    seed: int = 0
    mode: str = "diagonal"
    init: str = "kmeans"
    kmeans_iter: int = 10


@dataclass
class FitReport:
    iterations: int
    log_likelihood: float
    trace: list = field(default_factory=list)
    converged: bool = False


def _kmeans_pp(X, K, rng):
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers.append(X[idx])
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return np.array(centers)


def _kmeans(X, K, rng, n_iter):
    centers = _kmeans_pp(X, K, rng)
    for _ in range(n_iter):
        d2 = ((X[:, None, :] - centers[None]) ** 2).sum(-1)
        assign = d2.argmin(axis=1)
        for k in range(K):
            members = X[assign == k]
            if len(members):
                centers[k] = members.mean(axis=0)
    d2 = ((X[:, None, :] - centers[None]) ** 2).sum(-1)
    return centers, d2.argmin(axis=1)


def _floor_cov(cov, reg, mode):
    if mode == "diagonal":
        return np.diag(np.maximum(np.diag(cov), reg))
    cov = 0.5 * (cov + cov.T)
    lo = np.linalg.eigvalsh(cov)[0]
    if lo < reg:
        cov = cov + (reg - lo) * np.eye(cov.shape[0])
    return cov


def _m_step(X, resp, reg, mode):
    n, m = X.shape
    nk = resp.sum(axis=0)
    weights = nk / n
    means = (resp.T @ X) / nk[:, None]
    covs = np.empty((resp.shape[1], m, m))
    for k in range(resp.shape[1]):
        diff = X - means[k]
        if mode == "diagonal":
            cov = np.diag((resp[:, k] @ (diff * diff)) / nk[k])
        else:
            cov = (resp[:, k, None] * diff).T @ diff / nk[k]
        covs[k] = _floor_cov(cov, reg, mode)
    return weights, means, covs


def _initial_responsibilities(X, K, cfg, rng):
    n = X.shape[0]
    if cfg.init == "kmeans":
        _, assign = _kmeans(X, K, rng, cfg.kmeans_iter)
    elif cfg.init == "random":
        assign = rng.permutation(np.arange(n) % K)
    else:
        raise ValueError(f"init must be 'kmeans' or 'random', not {cfg.init!r}")
    resp = np.zeros((n, K))
    resp[np.arange(n), assign] = 1.0
    return resp


def fit_em(data, K, config=None, **overrides):
    """Fit a K-component mixture to ``data`` by expectation-maximization.

    Starts from k-means++ seeding plus a few Lloyd iterations (or a random
    hard assignment), then alternates E and M steps until the log-likelihood
    gain drops below ``tol``. Returns ``(GmmParams, FitReport)``.
    """
    cfg = config or EmConfig()
    if overrides:
        cfg = EmConfig(**{**cfg.__dict__, **overrides})
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if n < K:
        raise InsufficientData(f"need at least K={K} points, got {n}")
    if cfg.mode not in ("diagonal", "full"):
        raise ValueError(f"mode must be 'diagonal' or 'full', not {cfg.mode!r}")
    rng = np.random.default_rng(cfg.seed)

    resp = _initial_responsibilities(X, K, cfg, rng)
    # empty initial clusters get a uniform share so the first M-step is defined
    empty = resp.sum(axis=0) == 0
    if np.any(empty):
        resp[:, empty] = 1.0 / n
        resp /= resp.sum(axis=1, keepdims=True)
    weights, means, covs = _m_step(X, resp, cfg.reg, cfg.mode)

    trace = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        params = GmmParams(weights / weights.sum(), means, covs, mode=cfg.mode)
        logp = component_logpdf(X, params)
        ll_rows = logsumexp(logp, axis=1)
        ll = float(ll_rows.sum())
        if trace and ll - trace[-1] < cfg.tol:
            trace.append(ll)
            converged = True
            break
        trace.append(ll)
        resp = np.exp(logp - ll_rows[:, None])
        nk = resp.sum(axis=0)
        for k in np.flatnonzero(nk < 1e-10):
            # reseed a collapsed component at the least likely point
            worst = int(np.argmin(ll_rows))
            resp[:, k] = 0.0
            resp[worst, :] = 0.0
            resp[worst, k] = 1.0
            ll_rows[worst] = np.inf
        weights, means, covs = _m_step(X, resp, cfg.reg, cfg.mode)

    if not converged:
        params = GmmParams(weights / weights.sum(), means, covs, mode=cfg.mode)
        ll = float(logsumexp(component_logpdf(X, params), axis=1).sum())
        trace.append(ll)
    return params, FitReport(iterations=it, log_likelihood=trace[-1], trace=trace,
                             converged=converged)


def bic(params, data):
    """Bayesian information criterion (lower is better)."""
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    ll = float(np.sum(gmm_logpdf(X, params)))
    k = param_space_dim(params.K, params.dim, params.mode)
    return k * np.log(X.shape[0]) - 2.0 * ll


def select_k_bic(data, k_values, config=None):
    """Fit one mixture per K and return the fit with the lowest BIC."""
    best = None
    for K in k_values:
        params, report = fit_em(data, K, config)
        score = bic(params, data)
        if best is None or score < best[0]:
            best = (score, params, report)
    return best[1], best[2]


def sample_gmm(params, n, seed=0):
    """Draw n points from a mixture."""
    rng = np.random.default_rng(seed)
    comp = rng.choice(params.K, size=n, p=params.weights)
    out = np.empty((n, params.dim))
    for k in range(params.K):
        idx = np.flatnonzero(comp == k)
        if idx.size:
            out[idx] = rng.multivariate_normal(params.means[k], params.covariances[k], size=idx.size)
    return out
