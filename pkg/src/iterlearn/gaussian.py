"""One-dimensional Gaussian iterated learning.

Prior ``N(mu_bar, var_bar)``, likelihood ``d ~ N(h, var_noise)``, and the
original teacher is learner 0 with posterior ``N(mu0, var0)``. Learner
``t`` samples a hypothesis from its teacher's posterior, observes ``m_t``
noisy copies of it and applies the conjugate update.

Two teacher choices are supported: *chained* (teacher is learner ``t-1``)
and *hopped* (teacher uniform over learners ``0..t-1``).

Moment recursions come in two couplings:

``"iid"``
    Each datum of a session is treated as an independent draw from the
    teacher's predictive marginal, so the session sum has variance
    ``m (Var mu_s + sigma_s**2 + sigma**2)``. This is the textbook
    recursion ``Var mu_t = m tau**2 / (tau_bar + m tau)**2 (...)``.
``"session"``
    All data of a session share the one sampled hypothesis, so the sum has
    variance ``m**2 (Var mu_s + sigma_s**2) + m sigma**2``. This is the
    exact law of the agent process simulated by
    :func:`simulate_gaussian_mc`.

Means are identical under both couplings.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import InvariantViolation, ParameterError
from .schedules import _KIND_ALIASES, SampleSchedule
from .seeding import derive_seed, map_ordered

__all__ = [
    "COUPLINGS",
    "GaussianConfig",
    "GaussianPosterior",
    "MomentTrack",
    "McSummary",
    "posterior_update",
    "chained_moments",
    "hopped_moments",
    "hopped_variance",
    "hopped_variance_terms",
    "simulate_gaussian_mc",
    "config_schedule",
]

COUPLINGS = ("iid", "session")
MC_BLOCK = 4096


@dataclass(frozen=True)
class GaussianConfig:
    """Target, prior and noise parameters (variances, not precisions)."""

    mu0: float = 1.0
    var0: float = 1.0
    mu_bar: float = 0.0
    var_bar: float = 1.0
    var_noise: float = 1.0

    def __post_init__(self):
        for name in ("var0", "var_bar", "var_noise"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ParameterError(f"{name} must be a positive finite variance, got {v!r}")

    @property
    def tau(self):
        return 1.0 / self.var_noise

    @property
    def tau_bar(self):
        return 1.0 / self.var_bar

    @property
    def gap(self):
        return abs(self.mu0 - self.mu_bar)

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(**d)
        except TypeError as exc:
            raise ParameterError(f"bad gaussian config: {exc}") from None


@dataclass(frozen=True)
class GaussianPosterior:
    mu: float
    tau: float

    @property
    def var(self):
        return 1.0 / self.tau


def posterior_update(cfg, data):
    """Conjugate update of the prior with ``data``.

    ``mu = (tau_bar mu_bar + tau sum(data)) / (tau_bar + m tau)`` and
    ``tau_t = tau_bar + m tau``.
    """
    data = np.asarray(data, dtype=np.float64).ravel()
    m = data.size
    if m < 1:
        raise ParameterError("need at least one observation")
    tau_t = cfg.tau_bar + m * cfg.tau
    mu = (cfg.tau_bar * cfg.mu_bar + cfg.tau * math.fsum(data)) / tau_t
    return GaussianPosterior(mu, tau_t)


@dataclass(frozen=True)
class MomentTrack:
    """Exact moments of ``mu_t`` for ``t = 0..T``.

    Index 0 is learner 0 (``m = 0``, ``beta = nan``, ``var = 0``,
    ``sigma2 = var0``). ``gamma`` is only filled for hopped learning.
    """

    m: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    sigma2: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray | None = None
    coupling: str = "iid"
    mode: str = "chained"

    @property
    def T(self):
        return self.m.size - 1

    def rows(self):
        for t in range(1, self.T + 1):
            row = [t, int(self.m[t]), float(self.mean[t]), float(self.var[t]), float(self.sigma2[t]), float(self.beta[t])]
            if self.gamma is not None:
                row.append(float(self.gamma[t]))
            yield tuple(row)

    def header(self):
        base = ["t", "m_t", "E_mu", "Var_mu", "sigma2_t", "beta_t"]
        return base + (["gamma_t"] if self.gamma is not None else [])


def _check_coupling(coupling):
    if coupling not in COUPLINGS:
        raise ParameterError(f"coupling must be one of {COUPLINGS}, got {coupling!r}")


def _schedule_arrays(cfg, schedule, T):
    if T < 1:
        raise ParameterError("T must be >= 1")
    m = np.zeros(T + 1, dtype=np.int64)
    m[1:] = schedule.values(T)
    mf = m.astype(np.float64)
    beta = np.full(T + 1, np.nan)
    beta[1:] = mf[1:] * cfg.tau / (cfg.tau_bar + mf[1:] * cfg.tau)
    sigma2 = np.empty(T + 1)
    sigma2[0] = cfg.var0
    sigma2[1:] = 1.0 / (cfg.tau_bar + mf[1:] * cfg.tau)
    return m, beta, sigma2


def chained_moments(cfg, schedule, T, coupling="iid", tol=1e-10):
    """Mean and variance of ``mu_t`` when every learner is taught by its predecessor.

    ``E mu_t = beta_t E mu_{t-1} + (1 - beta_t) mu_bar`` with
    ``beta_t = m_t tau / (tau_bar + m_t tau)``; the result is checked
    against ``prod(beta) mu0 + (1 - prod(beta)) mu_bar``.
    """
    _check_coupling(coupling)
    m, beta, sigma2 = _schedule_arrays(cfg, schedule, T)
    mean = np.empty(T + 1)
    var = np.empty(T + 1)
    mean[0], var[0] = cfg.mu0, 0.0
    for t in range(1, T + 1):
        b, mt = beta[t], float(m[t])
        mean[t] = b * mean[t - 1] + (1.0 - b) * cfg.mu_bar
        if coupling == "iid":
            var[t] = b * b / mt * (var[t - 1] + sigma2[t - 1] + cfg.var_noise)
        else:
            var[t] = b * b * (var[t - 1] + sigma2[t - 1] + cfg.var_noise / mt)
    prod = np.cumprod(beta[1:])
    closed = prod * cfg.mu0 + (1.0 - prod) * cfg.mu_bar
    err = float(np.max(np.abs(closed - mean[1:])))
    if err > tol:
        raise InvariantViolation(f"recursion and product form of E mu_t differ by {err:.3e}")
    return MomentTrack(m, mean, var, sigma2, beta, None, coupling, "chained")


def _hopped_means(cfg, beta, T):
    mean = np.empty(T + 1)
    mean[0] = cfg.mu0
    running = cfg.mu0
    for t in range(1, T + 1):
        mean[t] = beta[t] / t * running + (1.0 - beta[t]) * cfg.mu_bar
        running += mean[t]
    gamma = np.full(T + 1, np.nan)
    gamma[0] = 1.0
    growth = 1.0  # prod_{s<t} (1 + beta_s / s)
    for t in range(1, T + 1):
        gamma[t] = growth * beta[t] / t
        growth *= 1.0 + beta[t] / t
    return mean, gamma


def _second_moment_sum(m_t, coupling, sigma2_s, var_s, mean_s, var_noise):
    """``E D_{t,s}**2`` for a session of ``m_t`` data taught by learner ``s``."""
    if coupling == "iid":
        return m_t * (sigma2_s + var_noise + var_s) + m_t * m_t * mean_s * mean_s
    return m_t * m_t * (sigma2_s + var_s) + m_t * var_noise + m_t * m_t * mean_s * mean_s


def hopped_variance(cfg, schedule, T, coupling="iid", _arrays=None):
    """``Var mu_t`` for hopped learning, ``t = 0..T``.

    With ``chi_{t,s}`` the indicator that learner ``t`` picks teacher ``s``
    and ``D_{t,s}`` the sum of the session's data,
    ``mu_t = (beta_t / m_t) sum_s chi_{t,s} D_{t,s} + (1 - beta_t) mu_bar``.
    Using ``E chi = E chi**2 = 1/t`` and ``E chi_{s1} chi_{s2} = 0``:

    ``Var mu_t = (beta_t / m_t)**2 [sum_s Var(chi D) + sum_{s1 != s2} cov]``
    ``Var(chi_s D_s) = E D_s**2 / t - (E D_s)**2 / t**2``
    ``cov = -(E D_{s1})(E D_{s2}) / t**2``

    The sums are carried as running totals, O(1) per step.
    """
    _check_coupling(coupling)
    if _arrays is None:
        m, beta, sigma2 = _schedule_arrays(cfg, schedule, T)
        mean, _ = _hopped_means(cfg, beta, T)
    else:
        m, beta, sigma2, mean = _arrays
    var = np.zeros(T + 1)
    sum_sig2 = sigma2[0]
    sum_var = 0.0
    sum_mean = mean[0]
    sum_mean_sq = mean[0] ** 2
    for t in range(1, T + 1):
        mt = float(m[t])
        if coupling == "iid":
            sum_e_d2 = mt * (sum_sig2 + t * cfg.var_noise + sum_var) + mt * mt * sum_mean_sq
        else:
            sum_e_d2 = mt * mt * (sum_sig2 + sum_var) + t * mt * cfg.var_noise + mt * mt * sum_mean_sq
        # Var(sum_s chi_s D_s): diagonal terms minus all (E D)(E D) / t**2 cross terms
        total = sum_e_d2 / t - (mt * sum_mean) ** 2 / (t * t)
        var[t] = (beta[t] / mt) ** 2 * max(total, 0.0)
        sum_sig2 += sigma2[t]
        sum_var += var[t]
        sum_mean += mean[t]
        sum_mean_sq += mean[t] ** 2
    return var


def hopped_variance_terms(cfg, track, t):
    """Per-teacher variance and covariance terms of the decomposition at step ``t``.

    Returns ``(var_terms, cov_matrix)``: ``var_terms[s] = Var(chi_{t,s} D_{t,s})``
    and ``cov_matrix[s1, s2]`` the covariance for ``s1 != s2`` (zero
    diagonal), computed from ``track`` (a hopped :class:`MomentTrack`).
    """
    mt = float(track.m[t])
    s = np.arange(t)
    mean_s = track.mean[s]
    e_d = mt * mean_s
    e_d2 = _second_moment_sum(mt, track.coupling, track.sigma2[s], track.var[s], mean_s, cfg.var_noise)
    var_terms = e_d2 / t - e_d**2 / t**2
    cov = -np.outer(e_d, e_d) / t**2
    np.fill_diagonal(cov, 0.0)
    return var_terms, cov


def hopped_moments(cfg, schedule, T, coupling="iid", tol=1e-10):
    """Exact moments for hopped learning, including ``gamma_t``.

    ``E mu_t = (beta_t / t) sum_{s<t} E mu_s + (1 - beta_t) mu_bar`` and
    ``E mu_t = gamma_t mu0 + (1 - gamma_t) mu_bar`` with
    ``gamma_t = prod_{s<t}(1 + beta_s / s) beta_t / t``; the two forms are
    checked against each other when ``mu0 != mu_bar``.
    """
    _check_coupling(coupling)
    m, beta, sigma2 = _schedule_arrays(cfg, schedule, T)
    mean, gamma = _hopped_means(cfg, beta, T)
    if cfg.mu0 != cfg.mu_bar:
        implied = (mean[1:] - cfg.mu_bar) / (cfg.mu0 - cfg.mu_bar)
        err = float(np.max(np.abs(implied - gamma[1:])))
        if err > tol:
            raise InvariantViolation(f"gamma_t product and mean recursion differ by {err:.3e}")
    var = hopped_variance(cfg, schedule, T, coupling, _arrays=(m, beta, sigma2, mean))
    return MomentTrack(m, mean, var, sigma2, beta, gamma, coupling, "hopped")


# -- Monte Carlo -----------------------------------------------------------


@dataclass(frozen=True)
class McSummary:
    """Per-step statistics of ``mu_t`` across replicates, ``t = 1..T``."""

    m: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    stderr: np.ndarray
    var_stderr: np.ndarray
    replicates: int
    samples: np.ndarray | None = field(default=None, repr=False)

    def rows(self):
        for k in range(self.mean.size):
            yield (k + 1, float(self.mean[k]), float(self.var[k]), float(self.stderr[k]), self.replicates)


MC_HEADER = ("t", "emp_mean", "emp_var", "stderr", "replicates")


def _simulate_block(cfg, m, sigma2, mode, size, seed):
    """Simulate ``size`` replicates; returns (T, size) realized posterior means."""
    rng = np.random.default_rng(seed)
    T = m.size - 1
    mus = np.empty((T + 1, size))
    mus[0] = cfg.mu0
    sd = np.sqrt(sigma2)
    noise_sd = math.sqrt(cfg.var_noise)
    cols = np.arange(size)
    for t in range(1, T + 1):
        if mode == "chained":
            teacher = np.full(size, t - 1)
        else:
            teacher = rng.integers(0, t, size=size)
        h = mus[teacher, cols] + sd[teacher] * rng.standard_normal(size)
        mt = float(m[t])
        # sum of m_t iid N(h, sigma^2) draws, sampled through its exact law
        total = mt * h + math.sqrt(mt) * noise_sd * rng.standard_normal(size)
        mus[t] = (cfg.tau_bar * cfg.mu_bar + cfg.tau * total) / (cfg.tau_bar + mt * cfg.tau)
    return mus[1:]


def simulate_gaussian_mc(cfg, schedule, T, mode="chained", replicates=10_000, seed=0, keep_samples=False, workers=None):
    """Monte Carlo agent simulation of chained or hopped learning.

    Replicates are simulated in fixed blocks of ``MC_BLOCK``; block ``b``
    draws from ``derive_seed(seed, b, "gaussian-<mode>")``, so results do
    not depend on the worker count. Each learner samples ``h`` from its
    teacher's posterior, observes ``m_t`` data from ``N(h, sigma**2)`` and
    applies the conjugate update (hopped mode keeps every past posterior).
    """
    if mode not in ("chained", "hopped"):
        raise ParameterError(f"mode must be 'chained' or 'hopped', got {mode!r}")
    if replicates < 1:
        raise ParameterError("replicates must be >= 1")
    m, _, sigma2 = _schedule_arrays(cfg, schedule, T)
    blocks = []
    start = 0
    b = 0
    while start < replicates:
        size = min(MC_BLOCK, replicates - start)
        blocks.append((size, derive_seed(seed, b, f"gaussian-{mode}")))
        start += size
        b += 1
    parts = map_ordered(lambda job: _simulate_block(cfg, m, sigma2, mode, job[0], job[1]), blocks, workers)
    X = np.concatenate(parts, axis=1)
    R = X.shape[1]
    mean = X.mean(axis=1)
    centered = X - mean[:, None]
    var = (centered**2).sum(axis=1) / max(R - 1, 1)
    stderr = np.sqrt(var / R)
    m4 = (centered**4).mean(axis=1)
    var_stderr = np.sqrt(np.maximum(m4 - var**2, 0.0) / R)
    return McSummary(m[1:], mean, var, stderr, var_stderr, R, X if keep_samples else None)



def config_schedule(cfg, spec):
    """Schedule from a config mapping, taking ``gap``, ``sigma``, ``sigma_bar`` from ``cfg``.

    Applies to ``theorem3`` and ``theorem4``; ``eps_rel`` may replace
    ``eps`` to give the tolerance as a fraction of ``|mu0 - mu_bar|``.
    """
    spec = dict(spec)
    spec.update(spec.pop("params", None) or {})
    kind = _KIND_ALIASES.get(spec.get("kind"), spec.get("kind"))
    if kind in ("theorem3", "theorem4"):
        spec.setdefault("gap", cfg.gap)
        spec.setdefault("sigma", math.sqrt(cfg.var_noise))
        spec.setdefault("sigma_bar", math.sqrt(cfg.var_bar))
        if "eps_rel" in spec:
            spec["eps"] = spec.pop("eps_rel") * cfg.gap
    return SampleSchedule.from_dict(spec)
