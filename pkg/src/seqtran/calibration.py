"""Calibration of the affinity weights against recorded transfer accuracies.

The score of a parameter setting is the Spearman correlation between the
negated path cost and the recorded Dice, computed per target and averaged.
It is maximised with a small Gaussian-process Bayesian optimiser.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize
from scipy.stats import norm, qmc, spearmanr

from .affinity import AffinityParams, MetricConfig, edge_cost, pair_metrics
from .errors import SeqtranError, ValidationError

JITTER = 1e-10
MAX_JITTER = 1e-2
LENGTHSCALES = (0.05, 0.1, 0.2, 0.35, 0.5, 0.8, 1.2, 2.0, 3.0)
N_CANDIDATES = 1024


@dataclass(frozen=True)
class TransferRecord:
    source_path: tuple
    target: str
    accuracy: float

    def __post_init__(self):
        object.__setattr__(self, "source_path", tuple(self.source_path))
        if not self.source_path:
            raise ValidationError("record has an empty source path")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValidationError(f"accuracy {self.accuracy} outside [0, 1]")
        if self.target in self.source_path:
            raise ValidationError("record target appears in its own source path")

    def pairs(self):
        """Task pairs whose edge enters the path objective, in objective order."""
        p, t = self.source_path, self.target
        out = [(p[0], t)] + list(zip(p, p[1:]))
        if len(p) > 1:
            out.append((p[-1], t))
        return out


@dataclass(frozen=True)
class BoConfig:
    bounds: tuple = ((0.0, 10.0), (0.0, 10.0))
    n_init: int = 8
    n_iter: int = 32
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple(tuple(map(float, b)) for b in self.bounds))
        if self.n_init < 2 or self.n_iter < 0:
            raise ValidationError("need n_init >= 2 and n_iter >= 0")
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValidationError(f"bad bounds ({lo}, {hi})")


class MetricCache(dict):
    """``{frozenset({a, b}): (h, r)}`` for every pair that any record touches."""

    def metrics(self, a, b):
        try:
            return self[frozenset((a, b))]
        except KeyError:
            raise ValidationError(f"no metrics cached for pair ({a}, {b})") from None

    @classmethod
    def from_catalog(cls, catalog, records, config: MetricConfig = MetricConfig()):
        cache = cls()
        for rec in records:
            for a, b in rec.pairs():
                key = frozenset((a, b))
                if key not in cache:
                    try:
                        ta, tb = catalog.task(a), catalog.task(b)
                    except KeyError as exc:
                        raise ValidationError(f"record references unknown task {exc}") from None
                    cache[key] = pair_metrics(ta, tb, config)
        return cache


def path_cost(record: TransferRecord, cache: MetricCache, params: AffinityParams) -> float:
    return math.fsum(edge_cost(*cache.metrics(a, b), params) for a, b in record.pairs())


def _check_records(records):
    if len(records) < 3:
        raise ValidationError("insufficient records: need at least 3")
    if len({r.accuracy for r in records}) < 3:
        raise ValidationError("constant records: need at least 3 distinct accuracies")


def objective(params: AffinityParams, records, cache: MetricCache) -> float:
    """Mean over targets of Spearman(-path cost, accuracy); in [-1, 1]."""
    _check_records(records)
    groups = {}
    for rec in records:
        groups.setdefault(rec.target, []).append(rec)
    scores = []
    for target in sorted(groups):
        recs = groups[target]
        acc = np.array([r.accuracy for r in recs])
        if len(recs) < 2 or np.all(acc == acc[0]):
            continue
        neg_cost = np.array([-path_cost(r, cache, params) for r in recs])
        if np.all(neg_cost == neg_cost[0]):
            scores.append(0.0)  # costs carry no ranking information
            continue
        scores.append(float(spearmanr(neg_cost, acc).statistic))
    if not scores:
        raise ValidationError("constant records: no target has varying accuracies")
    return math.fsum(scores) / len(scores)


# -- Gaussian process / Bayesian optimisation --------------------------------

def se_kernel(A, B, lengthscale):
    d2 = np.sum((A[:, None, :] - B[None, :, :]) ** 2, axis=-1)
    return np.exp(-0.5 * d2 / lengthscale ** 2)


@dataclass
class GaussianProcess:
    """Zero-mean GP on standardised targets with a unit-variance SE kernel."""

    lengthscale: float = 0.2
    jitter: float = JITTER
    X: np.ndarray = field(default=None, repr=False)
    y_mean: float = 0.0
    y_std: float = 1.0

    def fit(self, X, y):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64)
        self.X = X
        self.y_mean = float(y.mean())
        std = float(y.std())
        self.y_std = std if std > 0 else 1.0
        z = (y - self.y_mean) / self.y_std
        K = se_kernel(X, X, self.lengthscale)
        jitter = self.jitter
        while True:
            try:
                self._chol = cho_factor(K + jitter * np.eye(len(X)), lower=True)
                break
            except np.linalg.LinAlgError:
                jitter = max(jitter * 10.0, JITTER)
                if jitter > MAX_JITTER:
                    raise SeqtranError("degenerate kernel matrix even after jitter escalation")
        self.jitter = jitter
        self._alpha = cho_solve(self._chol, z)
        self._z = z
        return self

    def log_marginal_likelihood(self) -> float:
        L = self._chol[0]
        return float(-0.5 * self._z @ self._alpha - np.sum(np.log(np.diag(L)))
                     - 0.5 * len(self._z) * np.log(2 * np.pi))

    def predict(self, Xs):
        """Posterior mean and standard deviation in the original target units."""
        Xs = np.atleast_2d(np.asarray(Xs, dtype=np.float64))
        Ks = se_kernel(Xs, self.X, self.lengthscale)
        mu = Ks @ self._alpha
        v = cho_solve(self._chol, Ks.T)
        var = np.clip(1.0 - np.sum(Ks * v.T, axis=1), 0.0, None)
        return mu * self.y_std + self.y_mean, np.sqrt(var) * self.y_std


def fit_gp(X, y) -> GaussianProcess:
    """Pick the lengthscale from a fixed grid by marginal likelihood."""
    best, best_lml = None, -np.inf
    for ls in LENGTHSCALES:
        gp = GaussianProcess(lengthscale=ls).fit(X, y)
        lml = gp.log_marginal_likelihood()
        if lml > best_lml:
            best, best_lml = gp, lml
    return best


def expected_improvement(mu, sigma, best, xi: float = 0.0):
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    imp = mu - best - xi
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, imp / sigma, 0.0)
        ei = np.where(sigma > 0, imp * norm.cdf(z) + sigma * norm.pdf(z), np.maximum(imp, 0.0))
    return np.maximum(ei, 0.0)


@dataclass
class BoResult:
    best_x: np.ndarray
    best_y: float
    X: np.ndarray
    y: np.ndarray

    def best_so_far(self):
        return np.maximum.accumulate(self.y)


def _sobol(d, n, rng):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # n need not be a power of two
        return qmc.Sobol(d, scramble=True, seed=rng).random(n)


def _polish(gp, u0, best):
    """Refine an acquisition maximiser with bounded L-BFGS-B; keeps ``u0`` if no gain."""
    def neg_ei(u):
        mu, sd = gp.predict(u[None, :])
        return -float(expected_improvement(mu, sd, best)[0])

    res = minimize(neg_ei, u0, method="L-BFGS-B", bounds=[(0.0, 1.0)] * len(u0))
    return np.clip(res.x, 0.0, 1.0) if res.fun < neg_ei(u0) else u0


def maximize(fn, bounds, n_init: int = 8, n_iter: int = 32, seed: int = 0) -> BoResult:
    """Maximise ``fn`` over a box with GP-EI; reproducible for a fixed seed."""
    bounds = np.asarray(bounds, dtype=np.float64)
    lo, hi = bounds[:, 0], bounds[:, 1]
    d = len(bounds)
    rng = np.random.default_rng(seed)

    U = _sobol(d, n_init, rng)
    ys = [float(fn(lo + u * (hi - lo))) for u in U]
    U = list(U)
    for _ in range(n_iter):
        X = np.array(U)
        y = np.array(ys)
        gp = fit_gp(X, y)
        best = float(y.max())
        cand = _sobol(d, N_CANDIDATES, rng)
        local = np.clip(X[np.argmax(y)] + 0.05 * rng.standard_normal((N_CANDIDATES // 4, d)), 0, 1)
        cand = np.vstack([cand, local])
        mu, sd = gp.predict(cand)
        ei = expected_improvement(mu, sd, best)
        if ei.max() > 0:
            u = _polish(gp, cand[int(np.argmax(ei))], best)
        else:
            u = cand[int(rng.integers(len(cand)))]
        U.append(u)
        ys.append(float(fn(lo + u * (hi - lo))))
    X = lo + np.array(U) * (hi - lo)
    y = np.array(ys)
    k = int(np.argmax(y))
    return BoResult(X[k], float(y[k]), X, y)


def random_search(fn, bounds, n: int, seed: int = 0) -> BoResult:
    """Uniform random baseline with the same seeding convention."""
    bounds = np.asarray(bounds, dtype=np.float64)
    rng = np.random.default_rng(seed)
    X = bounds[:, 0] + rng.random((n, len(bounds))) * (bounds[:, 1] - bounds[:, 0])
    y = np.array([float(fn(x)) for x in X])
    k = int(np.argmax(y))
    return BoResult(X[k], float(y[k]), X, y)


def bayes_opt(records, cache: MetricCache, config: BoConfig = BoConfig(),
              mode: str = "one_minus_R"):
    """Fit ``(alpha, beta)``; returns the best observed params and the evaluation trace."""
    records = list(records)
    _check_records(records)

    def score(x):
        return objective(AffinityParams(float(x[0]), float(x[1]), mode), records, cache)

    res = maximize(score, config.bounds, config.n_init, config.n_iter, config.seed)
    trace = [{"alpha": float(x[0]), "beta": float(x[1]), "objective": float(v), "best_so_far": float(b)}
             for x, v, b in zip(res.X, res.y, res.best_so_far())]
    return AffinityParams(float(res.best_x[0]), float(res.best_x[1]), mode), trace


# -- I/O ---------------------------------------------------------------------

def read_records(path):
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                records.append(TransferRecord(tuple(doc["source_path"]), doc["target"],
                                              float(doc["accuracy"])))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValidationError(f"records line {lineno}: {exc}") from None
    return records


def write_records(path, records):
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps({"source_path": list(r.source_path), "target": r.target,
                                 "accuracy": r.accuracy}) + "\n")


def calibration_to_json(params: AffinityParams, trace) -> str:
    best = max(t["objective"] for t in trace) if trace else None
    doc = {"schema_version": 1, "alpha": params.alpha, "beta": params.beta, "mode": params.mode,
           "objective": best, "trace": trace}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
