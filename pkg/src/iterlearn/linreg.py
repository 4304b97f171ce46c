"""Iterated Bayesian linear regression.

Hypotheses are weight vectors ``h`` in ``R^d`` with prior
``N(mu_bar, var_bar I)``; a learner sees ``y = X h + noise`` with rows of
``X`` iid ``N(0, I_d)`` and noise ``N(0, var_noise I)``. Learner 0 holds
``N(mu0, var_bar I)``.

Conditional on the design matrices, the expected posterior mean obeys

    E mu_t = (I + M_t)^{-1} (mu_bar + M_t E mu_{t-1}),
    M_t = (var_bar / var_noise) X_t^T X_t,

so ``E mu_t = Q_t mu0 + (I - Q_t) mu_bar`` with
``Q_t = prod_s (I + M_s)^{-1} M_s`` (latest factor on the left), and
``||E mu_t - mu0|| <= ||mu_bar - mu0|| sum_s ||(I + M_s)^{-1}||``.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np
from scipy import linalg

from .errors import BudgetError, DimensionError, InvariantViolation, ParameterError
from .schedules import SampleSchedule
from .seeding import derive_seed, make_rng, map_ordered

__all__ = [
    "MAX_DIM",
    "DEFAULT_WORK_BUDGET",
    "RegressionConfig",
    "RegressionPosterior",
    "SpectralLedger",
    "LinregRun",
    "spd_solve",
    "regression_update",
    "conditional_mean_recursion",
    "qt_ledger",
    "min_singular_value",
    "singular_tail_check",
    "simulate_linreg",
]

log = logging.getLogger(__name__)

MAX_DIM = 64
DEFAULT_WORK_BUDGET = 10**8  # sum of m_t * d per replicate


@dataclass(frozen=True)
class RegressionConfig:
    """Prior, target and noise for a ``d``-dimensional learner.

    ``delta``, ``eps``, ``c`` and ``D_c`` parameterize the default
    growing schedule (see :meth:`schedule`).
    """

    d: int = 2
    mu0: tuple = (1.0, 0.0)
    mu_bar: tuple = (0.0, 0.0)
    var_bar: float = 1.0
    var_noise: float = 1.0
    delta: float = 0.2
    eps: float = 0.1
    c: float = 0.5
    D_c: float | None = None

    def __post_init__(self):
        if not (isinstance(self.d, (int, np.integer)) and 1 <= self.d <= MAX_DIM):
            raise ParameterError(f"d must be an integer in [1, {MAX_DIM}]")
        mu0 = np.asarray(self.mu0, dtype=np.float64).ravel()
        mu_bar = np.asarray(self.mu_bar, dtype=np.float64).ravel()
        if mu0.size != self.d or mu_bar.size != self.d:
            raise DimensionError("mu0 and mu_bar must have length d")
        for name in ("var_bar", "var_noise"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ParameterError(f"{name} must be a positive finite variance")
        object.__setattr__(self, "mu0", tuple(float(x) for x in mu0))
        object.__setattr__(self, "mu_bar", tuple(float(x) for x in mu_bar))

    @property
    def mu0_vec(self):
        return np.array(self.mu0)

    @property
    def mu_bar_vec(self):
        return np.array(self.mu_bar)

    @property
    def gap(self):
        return float(np.linalg.norm(self.mu0_vec - self.mu_bar_vec))

    @property
    def ratio(self):
        """``(var_bar / var_noise)``, the scale of ``M_t``."""
        return self.var_bar / self.var_noise

    def schedule(self, max_m=None):
        """Growing schedule built from this config's ``delta, eps, c, D_c``."""
        return SampleSchedule.theorem5(
            gap=self.gap, delta=self.delta, sigma=math.sqrt(self.var_noise),
            sigma_bar=math.sqrt(self.var_bar), c=self.c, d=self.d, eps=self.eps,
            D_c=self.D_c, max_m=max_m,
        )

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(**data)
        except TypeError as exc:
            raise ParameterError(f"bad regression config: {exc}") from None


@dataclass(frozen=True)
class RegressionPosterior:
    mean: np.ndarray
    cov: np.ndarray


def spd_solve(A, B, jitter=1e-12):
    """Solve ``A x = B`` for symmetric positive-definite ``A`` by Cholesky.

    On factorization failure adds ``jitter * I`` once before giving up.
    """
    try:
        return linalg.cho_solve(linalg.cho_factor(A, lower=True, check_finite=False), B, check_finite=False)
    except linalg.LinAlgError:
        log.warning("Cholesky failed; retrying with %.1e jitter", jitter)
        A = A + jitter * np.eye(A.shape[0])
        return linalg.cho_solve(linalg.cho_factor(A, lower=True, check_finite=False), B, check_finite=False)


def _design(X, d):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != d or X.shape[0] < 1:
        raise DimensionError(f"design matrix must be (m, {d}) with m >= 1, got {X.shape}")
    return X


def regression_update(cfg, X, y):
    """Posterior ``N(mean, cov)`` after observing ``y = X h + noise``.

    ``cov = (I / var_bar + X^T X / var_noise)^{-1}`` and
    ``mean = cov (mu_bar / var_bar + X^T y / var_noise)``.
    """
    X = _design(X, cfg.d)
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != X.shape[0]:
        raise DimensionError(f"y has {y.size} entries, X has {X.shape[0]} rows")
    precision = np.eye(cfg.d) / cfg.var_bar + X.T @ X / cfg.var_noise
    rhs = np.column_stack([cfg.mu_bar_vec / cfg.var_bar + X.T @ y / cfg.var_noise, np.eye(cfg.d)])
    sol = spd_solve(precision, rhs)
    cov = sol[:, 1:]
    return RegressionPosterior(sol[:, 0], 0.5 * (cov + cov.T))


def _M(cfg, X):
    return cfg.ratio * (X.T @ X)


def conditional_mean_recursion(cfg, X_sequence):
    """``E mu_t`` for ``t = 1..T`` given the realized design matrices.

    Returns an array of shape ``(T, d)``.
    """
    I = np.eye(cfg.d)
    cur = cfg.mu0_vec
    out = []
    for X in X_sequence:
        M = _M(cfg, _design(X, cfg.d))
        cur = spd_solve(I + M, cfg.mu_bar_vec + M @ cur)
        out.append(cur)
    return np.array(out).reshape(len(out), cfg.d)


@dataclass(frozen=True)
class SpectralLedger:
    """Per-step spectral quantities of one realized design sequence (``t = 1..T``).

    ``asub_checked[t-1]`` is False when ``X_t^T X_t`` is singular, in which
    case ``sigma_min_X`` is 0 and the singular-value bound is skipped.
    """

    means: np.ndarray
    norm_A: np.ndarray
    sum_norm_A: np.ndarray
    norm_Q: np.ndarray
    norm_I_minus_Q: np.ndarray
    dist_to_mu0: np.ndarray
    sigma_min_X: np.ndarray
    asub_checked: np.ndarray
    Q: np.ndarray = field(repr=False)


def qt_ledger(cfg, X_sequence, tol=1e-8):
    """Build ``Q_t`` and spectral bookkeeping; verify the identities along the way.

    Checked for every ``t`` (raising :class:`InvariantViolation` on failure):

    * ``Q_t mu0 + (I - Q_t) mu_bar`` equals the direct recursion to ``tol``;
    * ``||Q_t|| <= 1`` and ``||I - Q_t|| <= sum_{s<=t} ||A_s||``;
    * ``||E mu_t - mu0|| <= ||mu_bar - mu0|| sum_{s<=t} ||A_s||``;
    * ``||A_t|| <= (var_noise / var_bar) / sigma_min(X_t)**2`` when
      ``X_t^T X_t`` is nonsingular.
    """
    X_sequence = [_design(X, cfg.d) for X in X_sequence]
    T = len(X_sequence)
    d = cfg.d
    I = np.eye(d)
    means = conditional_mean_recursion(cfg, X_sequence)
    Q = I.copy()
    norm_A = np.empty(T)
    norm_Q = np.empty(T)
    norm_IQ = np.empty(T)
    dist = np.empty(T)
    smin = np.empty(T)
    checked = np.zeros(T, dtype=bool)
    slack = 1e-12
    gap = cfg.gap
    mu0, mu_bar = cfg.mu0_vec, cfg.mu_bar_vec
    for k, X in enumerate(X_sequence):
        G = X.T @ X
        M = cfg.ratio * G
        A = spd_solve(I + M, I)
        A = 0.5 * (A + A.T)
        norm_A[k] = float(np.linalg.eigvalsh(A).max())
        Q = A @ M @ Q
        norm_Q[k] = float(np.linalg.norm(Q, 2))
        norm_IQ[k] = float(np.linalg.norm(I - Q, 2))
        via_q = Q @ mu0 + (I - Q) @ mu_bar
        err = float(np.max(np.abs(via_q - means[k])))
        if err > tol:
            raise InvariantViolation(f"t={k + 1}: Q_t identity off by {err:.3e}")
        dist[k] = float(np.linalg.norm(means[k] - mu0))
        lam_min = float(np.linalg.eigvalsh(0.5 * (G + G.T)).min())
        smin[k] = math.sqrt(max(lam_min, 0.0))
        # singular Gram: the smallest-singular-value bound is vacuous
        if X.shape[0] >= d and lam_min > 1e-12 * max(1.0, float(np.trace(G))):
            checked[k] = True
            limit = (1.0 / cfg.ratio) / lam_min
            if norm_A[k] > limit * (1 + 1e-10) + slack:
                raise InvariantViolation(f"t={k + 1}: ||A_t||={norm_A[k]:.6g} exceeds {limit:.6g}")
    sum_A = np.cumsum(norm_A)
    if np.any(norm_Q > 1.0 + 1e-10):
        raise InvariantViolation("||Q_t|| exceeds 1")
    if np.any(norm_IQ > sum_A + 1e-10):
        raise InvariantViolation("||I - Q_t|| exceeds the sum of ||A_s||")
    if np.any(dist > gap * sum_A + 1e-10):
        raise InvariantViolation("distance to mu0 exceeds the spectral bound")
    return SpectralLedger(means, norm_A, sum_A, norm_Q, norm_IQ, dist, smin, checked, Q)


def min_singular_value(X):
    """Smallest singular value of an ``(m, d)`` matrix, ``m >= d``.

    Computed as ``sqrt(lambda_min(X^T X))`` by a symmetric eigen-solve.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError("X must be 2-D")
    m, d = X.shape
    if m < d:
        raise DimensionError(f"need m >= d, got shape {X.shape}")
    G = X.T @ X
    lam = float(np.linalg.eigvalsh(0.5 * (G + G.T)).min())
    return math.sqrt(max(lam, 0.0))


@dataclass(frozen=True)
class TailCheck:
    m: int
    d: int
    gamma: float
    draws: int
    threshold: float
    frequency: float
    bound: float
    limit: float

    @property
    def passed(self):
        return self.frequency <= self.limit


def singular_tail_check(m, d, gamma, draws, seed, block=1000, workers=None):
    """Empirical ``P[sigma_min(X) < sqrt(m) - sqrt(d) - gamma]`` for Gaussian ``X``.

    Compared against ``exp(-gamma**2 / 2)`` plus a sampling allowance of
    ``3 sqrt(bound / draws) + 10 / draws``. Block ``b`` of draws uses
    ``derive_seed(seed, b, "singular-tail")``.
    """
    if m < d:
        raise DimensionError("need m >= d")
    if draws < 1:
        raise ParameterError("draws must be >= 1")
    threshold = math.sqrt(m) - math.sqrt(d) - gamma
    bound = math.exp(-gamma * gamma / 2.0)
    limit = bound + 3.0 * math.sqrt(bound / draws) + 10.0 / draws
    if threshold <= 0:
        return TailCheck(m, d, gamma, draws, threshold, 0.0, bound, limit)
    jobs = []
    for b, start in enumerate(range(0, draws, block)):
        jobs.append((b, min(block, draws - start)))

    def count(job):
        b, size = job
        rng = make_rng(seed, b, "singular-tail")
        X = rng.standard_normal((size, m, d))
        G = np.einsum("kmi,kmj->kij", X, X)
        lam = np.linalg.eigvalsh(G)[:, 0]
        return int(np.count_nonzero(np.sqrt(np.maximum(lam, 0.0)) < threshold))

    hits = sum(map_ordered(count, jobs, workers))
    return TailCheck(m, d, gamma, draws, threshold, hits / draws, bound, limit)


LINREG_HEADER = ("replicate", "t", "m_t", "dist_to_mu0", "norm_I_minus_Q", "sum_norm_A", "sigma_min_X", "verdict")


@dataclass(frozen=True)
class LinregRun:
    """Outcome of :func:`simulate_linreg`.

    ``ledgers[r]`` holds replicate ``r``'s spectral bookkeeping and
    ``verdicts[r]`` whether ``max_t ||E mu_t - mu0|| <= delta``.
    ``stochastic_dist`` (optional) holds ``||mu_t - mu0||`` of a fully
    simulated agent chain per replicate.
    """

    m: np.ndarray
    delta: float
    ledgers: list
    verdicts: np.ndarray
    seeds: list
    stochastic_dist: np.ndarray | None = None

    @property
    def fraction(self):
        return float(np.mean(self.verdicts))

    def rows(self):
        for r, led in enumerate(self.ledgers):
            verdict = bool(self.verdicts[r])
            for k in range(self.m.size):
                yield (r, k + 1, int(self.m[k]), float(led.dist_to_mu0[k]), float(led.norm_I_minus_Q[k]),
                       float(led.sum_norm_A[k]), float(led.sigma_min_X[k]), verdict)


def _replicate(cfg, m, delta, seed, stochastic):
    rng = np.random.default_rng(seed)
    Xs = [rng.standard_normal((int(mt), cfg.d)) for mt in m]
    ledger = qt_ledger(cfg, Xs)
    verdict = bool(ledger.dist_to_mu0.max() <= delta)
    realized = None
    if stochastic:
        # agent chain: h ~ teacher posterior, y = X h + noise, conjugate update
        mean = cfg.mu0_vec
        chol = math.sqrt(cfg.var_bar) * np.eye(cfg.d)
        realized = np.empty(len(Xs))
        for k, X in enumerate(Xs):
            h = mean + chol @ rng.standard_normal(cfg.d)
            y = X @ h + math.sqrt(cfg.var_noise) * rng.standard_normal(X.shape[0])
            post = regression_update(cfg, X, y)
            mean = post.mean
            chol = np.linalg.cholesky(post.cov)
            realized[k] = np.linalg.norm(mean - cfg.mu0_vec)
    return ledger, verdict, realized


def simulate_linreg(cfg, schedule, T, replicates, seed, stochastic=False, budget=DEFAULT_WORK_BUDGET, workers=None):
    """Replicated iterated regression with fresh Gaussian designs.

    Session lengths are raised to at least ``d`` so every design has full
    column rank with probability one. Replicate ``r`` uses
    ``derive_seed(seed, r, "linreg")``.

    Raises
    ------
    BudgetError
        If ``sum_t m_t d`` exceeds ``budget``.
    """
    if T < 1 or replicates < 1:
        raise ParameterError("T and replicates must be >= 1")
    m = np.maximum(schedule.values(T), cfg.d)
    work = int(m.sum()) * cfg.d
    if budget is not None and work > budget:
        raise BudgetError(f"sum m_t * d = {work} exceeds budget {budget}")
    seeds = [derive_seed(seed, r, "linreg") for r in range(replicates)]
    results = map_ordered(lambda s: _replicate(cfg, m, cfg.delta, s, stochastic), seeds, workers)
    ledgers = [r[0] for r in results]
    verdicts = np.array([r[1] for r in results], dtype=bool)
    realized = np.array([r[2] for r in results]) if stochastic else None
    return LinregRun(m, cfg.delta, ledgers, verdicts, seeds, realized)
