"""Iterated learning over a finite hypothesis space.

A :class:`DiscreteModel` holds ``n`` hypotheses, each a probability vector
over ``s`` sentences (the columns of ``likelihood``), and a strictly
positive prior. A learner trained on ``m`` sentences drawn from hypothesis
``h_i`` ends up sampling ``h_j`` from its posterior with probability
``P[i, j]``; :func:`transition_matrix_exact` computes that matrix and
:func:`chain_product` multiplies the per-session matrices along a schedule.

Likelihoods only depend on sentence counts, so the exact transition matrix
sums over multisets (``C(m+s-1, s-1)`` of them) with multinomial weights
instead of over all ``s**m`` ordered tuples. Everything runs in log space;
zero likelihoods are ``-inf``.
"""

from dataclasses import dataclass, field
import json
import logging
import math
from pathlib import Path

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import BudgetError, DimensionError, DomainError, ImpossibleDataError, InvariantViolation, ParameterError
from .metrics import NORMALIZATION_TOL, pairwise_root_sine, prob_vector
from .seeding import derive_seed, map_ordered

__all__ = [
    "DEFAULT_ENUMERATION_BUDGET",
    "DiscreteModel",
    "PosteriorVector",
    "Chain",
    "Trajectory",
    "multiset_count",
    "iter_multisets",
    "bayes_update",
    "transition_matrix_exact",
    "chain_product",
    "sustain_mass",
    "set_mass",
    "transition_bound",
    "transition_bound_matrix",
    "transition_bound_violation",
    "lemma1_bound",
    "a_set_bound",
    "find_A_set",
    "simulate_chain_mc",
    "run_chain_replicates",
    "hypothesis_frequencies",
    "model_schedule",
]

log = logging.getLogger(__name__)

DEFAULT_ENUMERATION_BUDGET = 10**7
_CHUNK_ROWS = 1 << 19


def _safe_log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


@dataclass(frozen=True, eq=False)
class DiscreteModel:
    """Finite hypothesis space with a shared prior.

    Parameters
    ----------
    likelihood : array_like, shape (s, n)
        Column ``j`` is ``P[. | h_j]``, a probability vector over sentences.
    prior : array_like, shape (n,)
        Strictly positive prior over hypotheses.
    names : sequence of str, optional
        Hypothesis labels.
    sentences : sequence of str, optional
        Sentence labels.
    distinct : bool
        Require all hypotheses to be pairwise distinct (non-zero root-sine
        distance). Disable only for degenerate test models.
    """

    likelihood: np.ndarray
    prior: np.ndarray
    names: tuple | None = None
    sentences: tuple | None = None
    distinct: bool = True
    dist: np.ndarray = field(init=False, repr=False)
    log_likelihood: np.ndarray = field(init=False, repr=False)
    log_prior: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        L = np.array(self.likelihood, dtype=np.float64)
        if L.ndim != 2 or L.shape[0] < 1 or L.shape[1] < 1:
            raise DimensionError(f"likelihood must be a non-empty (s, n) table, got shape {L.shape}")
        for j in range(L.shape[1]):
            prob_vector(L[:, j])
        p = prob_vector(self.prior)
        if p.size != L.shape[1]:
            raise DimensionError(f"prior has {p.size} entries but likelihood has {L.shape[1]} columns")
        if np.any(p <= 0):
            raise DomainError("every prior entry must be strictly positive; drop zero-prior hypotheses")
        if self.names is not None and len(self.names) != L.shape[1]:
            raise DimensionError("names must have one entry per hypothesis")
        if self.sentences is not None and len(self.sentences) != L.shape[0]:
            raise DimensionError("sentences must have one entry per sentence")
        d = pairwise_root_sine(L)
        if self.distinct and L.shape[1] > 1:
            off = d[~np.eye(L.shape[1], dtype=bool)]
            if off.min() <= 0.0:
                raise DomainError("hypotheses must be pairwise distinct (some root-sine distance is 0)")
        L.setflags(write=False)
        d.setflags(write=False)
        lp = np.log(p)
        ll = _safe_log(L)
        lp.setflags(write=False)
        ll.setflags(write=False)
        object.__setattr__(self, "likelihood", L)
        object.__setattr__(self, "prior", p)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "log_likelihood", ll)
        object.__setattr__(self, "log_prior", lp)
        if self.names is not None:
            object.__setattr__(self, "names", tuple(self.names))
        if self.sentences is not None:
            object.__setattr__(self, "sentences", tuple(self.sentences))

    @property
    def s(self):
        return self.likelihood.shape[0]

    @property
    def n(self):
        return self.likelihood.shape[1]

    def min_distance(self, i):
        """``min_{j != i} d_ij``; the separation of hypothesis ``i``."""
        self._check_index(i)
        if self.n == 1:
            return math.inf
        return float(np.delete(self.dist[i], i).min())

    def _check_index(self, i):
        if not (0 <= int(i) < self.n) or int(i) != i:
            raise IndexError(f"hypothesis index {i!r} out of range for n={self.n}")

    @classmethod
    def from_dict(cls, data, distinct=True):
        """Build from ``{"likelihood": [[...]], "prior": [...], "names": [...]}``."""
        try:
            return cls(
                likelihood=data["likelihood"],
                prior=data["prior"],
                names=data.get("names"),
                sentences=data.get("sentences"),
                distinct=data.get("distinct", distinct),
            )
        except KeyError as exc:
            raise ParameterError(f"model is missing field {exc.args[0]!r}") from None

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self):
        out = {"likelihood": self.likelihood.tolist(), "prior": self.prior.tolist()}
        if self.names is not None:
            out["names"] = list(self.names)
        if self.sentences is not None:
            out["sentences"] = list(self.sentences)
        return out


@dataclass(frozen=True)
class PosteriorVector:
    """Posterior weights over hypotheses after session ``t``."""

    weights: np.ndarray
    t: int = 1


# -- Bayes update ----------------------------------------------------------


def _log_posterior(model, counts):
    counts = np.asarray(counts)
    ll = model.log_likelihood
    finite = np.where(np.isfinite(ll), ll, 0.0)
    loglik = counts @ finite
    impossible = (counts > 0).astype(np.float64) @ (~np.isfinite(ll)).astype(np.float64) > 0
    loglik = np.where(impossible, -np.inf, loglik)
    joint = loglik + model.log_prior
    evidence = logsumexp(joint)
    if not np.isfinite(evidence):
        raise ImpossibleDataError("data has zero likelihood under every hypothesis")
    return joint - evidence


def _posterior_from_counts(model, counts):
    w = np.exp(_log_posterior(model, counts))
    return w / w.sum()


def bayes_update(model, data, t=1):
    """Posterior ``P[h | data]`` for a multiset of sentence indices.

    Parameters
    ----------
    model : DiscreteModel
    data : sequence of int
        Sentence indices; order is irrelevant.

    Raises
    ------
    ImpossibleDataError
        If no hypothesis can generate ``data``.
    """
    data = np.asarray(data, dtype=np.int64).ravel()
    if data.size == 0:
        raise ParameterError("data must be non-empty")
    if np.any(data < 0) or np.any(data >= model.s):
        raise DomainError(f"sentence index out of range [0, {model.s})")
    counts = np.bincount(data, minlength=model.s)
    return PosteriorVector(_posterior_from_counts(model, counts), t)


# -- multiset enumeration --------------------------------------------------


def multiset_count(m, s):
    """Number of multisets of size ``m`` over ``s`` symbols, ``C(m+s-1, s-1)``."""
    return math.comb(m + s - 1, s - 1)


def _compositions(m, s, memo):
    key = (m, s)
    if key in memo:
        return memo[key]
    if s == 1:
        out = np.array([[m]], dtype=np.int64)
    elif s == 2:
        first = np.arange(m, -1, -1, dtype=np.int64)
        out = np.column_stack([first, m - first])
    else:
        blocks = []
        for first in range(m, -1, -1):
            rest = _compositions(m - first, s - 1, memo)
            blk = np.empty((rest.shape[0], s), dtype=np.int64)
            blk[:, 0] = first
            blk[:, 1:] = rest
            blocks.append(blk)
        out = np.concatenate(blocks)
    memo[key] = out
    return out


def iter_multisets(m, s, chunk_rows=_CHUNK_ROWS):
    """Yield count vectors (rows summing to ``m``) in blocks of ~``chunk_rows``."""
    if s <= 2 or multiset_count(m, s) <= chunk_rows:
        yield _compositions(m, s, {})
        return
    memo = {}
    pending, rows = [], 0
    for first in range(m, -1, -1):
        rest = _compositions(m - first, s - 1, memo)
        blk = np.empty((rest.shape[0], s), dtype=np.int64)
        blk[:, 0] = first
        blk[:, 1:] = rest
        pending.append(blk)
        rows += blk.shape[0]
        if rows >= chunk_rows:
            yield np.concatenate(pending)
            pending, rows = [], 0
    if pending:
        yield np.concatenate(pending)


# -- exact transition matrices ---------------------------------------------


def transition_matrix_exact(model, m, budget=DEFAULT_ENUMERATION_BUDGET):
    """Exact per-session transition matrix for session length ``m``.

    ``P[i, j] = sum_d P[h_j | d] P[d | h_i]`` over all ``d`` in ``D**m``,
    evaluated by enumerating count vectors with multinomial weights.

    Raises
    ------
    BudgetError
        If the number of multisets exceeds ``budget``; use the Monte Carlo
        simulator instead.
    """
    m = int(m)
    if m < 1:
        raise ParameterError("m must be >= 1")
    K = multiset_count(m, model.s)
    if budget is not None and K > budget:
        raise BudgetError(
            f"exact enumeration needs {K} multisets (m={m}, s={model.s}) > budget {budget}; "
            "use Monte Carlo mode (simulate_chain_mc)"
        )
    ll = model.log_likelihood
    finite = np.where(np.isfinite(ll), ll, 0.0)
    zero_mask = (~np.isfinite(ll)).astype(np.float64)
    lg = gammaln(np.arange(m + 1, dtype=np.float64) + 1.0)
    P = np.zeros((model.n, model.n))
    for counts in iter_multisets(m, model.s):
        logw = lg[m] - lg[counts].sum(axis=1)
        loglik = counts @ finite
        impossible = (counts > 0).astype(np.float64) @ zero_mask > 0
        loglik[impossible] = -np.inf
        joint = loglik + model.log_prior
        evidence = logsumexp(joint, axis=1)
        ok = np.isfinite(evidence)
        post = np.zeros_like(joint)
        post[ok] = np.exp(joint[ok] - evidence[ok, None])
        with np.errstate(invalid="ignore"):
            W = np.exp(logw[:, None] + loglik)
        W[~ok] = 0.0
        P += W.T @ post
    return P


@dataclass(frozen=True)
class Chain:
    """Cumulative products ``P^{<=t} = P^{|1} ... P^{|t}`` for ``t = 1..T``.

    ``transitions`` maps each distinct session length to its exact matrix;
    ``drift`` is the accumulated row-sum deviation removed by
    renormalization.
    """

    products: np.ndarray
    m: np.ndarray
    transitions: dict
    drift: float

    def __len__(self):
        return self.products.shape[0]

    def __getitem__(self, idx):
        return self.products[idx]

    def step(self, t):
        """Per-session matrix ``P^{|t}`` (1-based)."""
        return self.transitions[int(self.m[t - 1])]


def chain_product(model, schedule, T, budget=DEFAULT_ENUMERATION_BUDGET, max_drift=1e-8):
    """Exact chain ``P^{<=t}`` for ``t = 1..T`` along ``schedule``.

    Rows are renormalized after every multiplication; the removed drift is
    accumulated and must stay below ``max_drift``.
    """
    if T < 1:
        raise ParameterError("T must be >= 1")
    m = schedule.values(T)
    transitions = {}
    for mv in np.unique(m):
        transitions[int(mv)] = transition_matrix_exact(model, int(mv), budget=budget)
    products = np.empty((T, model.n, model.n))
    cur = np.eye(model.n)
    drift = 0.0
    for t in range(T):
        cur = cur @ transitions[int(m[t])]
        rows = cur.sum(axis=1)
        drift += float(np.max(np.abs(rows - 1.0)))
        cur = cur / rows[:, None]
        products[t] = cur
    log.debug("chain_product: T=%d accumulated drift %.3e", T, drift)
    if drift >= max_drift:
        raise InvariantViolation(f"accumulated row-sum drift {drift:.3e} exceeds {max_drift:.1e}")
    return Chain(products, m, transitions, drift)


def _products(chain):
    return np.asarray(getattr(chain, "products", chain), dtype=np.float64)


def sustain_mass(chain, target):
    """``P^{<=t}[target, target]`` for each ``t``.

    This is the probability that learner ``t`` samples the target when the
    first teacher holds exactly the target.
    """
    prods = _products(chain)
    if prods.shape[0] == 0:
        raise ParameterError("chain is empty")
    n = prods.shape[1]
    if not (0 <= target < n):
        raise IndexError(f"target {target} out of range for n={n}")
    return prods[:, target, target].copy()


def set_mass(chain, target, members):
    """Mass of row ``target`` of each ``P^{<=t}`` falling on ``members``."""
    prods = _products(chain)
    idx = np.asarray(sorted(members), dtype=np.int64)
    return prods[:, target, :][:, idx].sum(axis=1)


# -- bounds ----------------------------------------------------------------


def transition_bound(model, i, j, m):
    """Upper bound ``1/2 sqrt(p_j / p_i) exp(-d_ij**2 m / 2)`` on ``P[i, j]``, ``i != j``."""
    if i == j:
        raise ParameterError("bound only applies off the diagonal (i != j)")
    model._check_index(i)
    model._check_index(j)
    d = model.dist[i, j]
    return 0.5 * math.sqrt(model.prior[j] / model.prior[i]) * math.exp(-0.5 * d * d * m)


def transition_bound_matrix(model, m):
    """Off-diagonal bounds for all pairs; the diagonal is ``+inf``."""
    p = model.prior
    B = 0.5 * np.sqrt(p[None, :] / p[:, None]) * np.exp(-0.5 * model.dist**2 * m)
    np.fill_diagonal(B, np.inf)
    return B


def transition_bound_violation(model, P, m):
    """``max_{i != j} (P[i, j] - bound[i, j])``; non-positive means the bound holds."""
    B = transition_bound_matrix(model, m)
    off = ~np.eye(model.n, dtype=bool)
    if model.n == 1:
        return -math.inf
    return float(np.max((P - B)[off]))


def lemma1_bound(model, target, m_values):
    """Cumulative bound on the off-target mass ``sum_{j != target} P^{<=t}[target, j]``.

    ``1/2 sqrt(n (1 - p) / p) sum_{s<=t} exp(-d**2 m_s / 2)`` with ``p`` the
    target's prior and ``d`` its separation.
    """
    p = model.prior[target]
    d = model.min_distance(target)
    m = np.asarray(m_values, dtype=np.float64)
    return 0.5 * math.sqrt(model.n * (1.0 - p) / p) * np.cumsum(np.exp(-0.5 * d * d * m))


def a_set_bound(model, members, rho, m_values):
    """Cumulative bound on the mass leaving a separated set ``members``.

    Uses ``p_A = min_{i in A} p_i`` and the separation ``rho``.
    """
    pA = float(min(model.prior[i] for i in members))
    m = np.asarray(m_values, dtype=np.float64)
    if pA >= 1.0:
        return np.zeros_like(m)
    return 0.5 * math.sqrt(model.n * (1.0 - pA) / pA) * np.cumsum(np.exp(-0.5 * rho * rho * m))


# -- A-set construction ----------------------------------------------------


def find_A_set(model, target, rho, tol=1e-12):
    """Cluster around ``target`` separated from the rest by at least ``rho``.

    Scans the annuli ``[k rho, (k+1) rho)``, ``k = 1..n``, of the distances
    from ``target`` for the first empty one and returns every hypothesis
    strictly inside it. With ``n`` hypotheses one of these annuli must be
    empty. The result satisfies ``d[target, j] <= rho n`` for members and
    ``d[i, j] >= rho`` between members and non-members.

    Returns
    -------
    frozenset of int
    """
    if not rho > 0:
        raise ParameterError("rho must be > 0")
    model._check_index(target)
    d = model.dist[target]
    n = model.n
    k_empty = None
    for k in range(1, n + 1):
        in_annulus = (d >= k * rho) & (d < (k + 1) * rho)
        if not in_annulus.any():
            k_empty = k
            break
    if k_empty is None:  # pragma: no cover - excluded by pigeonhole
        raise InvariantViolation("no empty annulus found")
    members = frozenset(int(j) for j in np.flatnonzero(d < k_empty * rho))
    outside = [j for j in range(n) if j not in members]
    if any(d[j] > rho * n + tol for j in members):
        raise InvariantViolation("A-set member farther than rho * n from the target")
    if outside and float(model.dist[np.ix_(sorted(members), outside)].min()) < rho - tol:
        raise InvariantViolation("A-set is not rho-separated from its complement")
    return members


# -- Monte Carlo agent chains ----------------------------------------------


TRAJECTORY_HEADER = ("t", "m_t", "mass_on_target", "sampled_h", "seed")


@dataclass(frozen=True)
class Trajectory:
    """One simulated chain of learners.

    ``mass[t-1]`` is learner ``t``'s posterior mass on the tracked set and
    ``sampled_h[t-1]`` the hypothesis learner ``t`` samples for its
    successor.
    """

    t: np.ndarray
    m: np.ndarray
    mass: np.ndarray
    sampled_h: np.ndarray
    seed: int

    def rows(self):
        for k in range(self.t.size):
            yield (int(self.t[k]), int(self.m[k]), float(self.mass[k]), int(self.sampled_h[k]), self.seed)


def simulate_chain_mc(model, schedule, T, h_init, seed, track=None):
    """Simulate ``T`` learners, each Bayes-updating the shared prior.

    Learner ``t`` receives ``m_t`` iid sentences from a hypothesis sampled
    from learner ``t-1``'s posterior (learner 0 holds ``h_init``).

    Parameters
    ----------
    h_init : int or array_like
        Target hypothesis index, or a distribution over hypotheses for a
        mixed start. A mixed start requires ``track``.
    seed : int
        Seed for this trajectory's generator.
    track : iterable of int, optional
        Hypotheses whose total posterior mass is recorded. Defaults to
        ``{h_init}``. Per-hypothesis weights of a mixed start are not
        tracked.
    """
    if T < 1:
        raise ParameterError("T must be >= 1")
    rng = np.random.default_rng(seed)
    if np.ndim(h_init) == 0:
        model._check_index(int(h_init))
        teacher = int(h_init)
        members = [teacher] if track is None else sorted(track)
    else:
        init = prob_vector(h_init)
        if init.size != model.n:
            raise DimensionError("initial distribution must have one entry per hypothesis")
        if track is None:
            raise ParameterError("a mixed start needs an explicit tracked set")
        members = sorted(track)
        teacher = int(rng.choice(model.n, p=init))
    m_vals = schedule.values(T)
    mass = np.empty(T)
    sampled = np.empty(T, dtype=np.int64)
    L = model.likelihood
    for k in range(T):
        counts = rng.multinomial(int(m_vals[k]), L[:, teacher])
        post = _posterior_from_counts(model, counts)
        mass[k] = post[members].sum()
        teacher = int(rng.choice(model.n, p=post))
        sampled[k] = teacher
    return Trajectory(np.arange(1, T + 1), m_vals, mass, sampled, int(seed))


def run_chain_replicates(model, schedule, T, h_init, seed, replicates, track=None, workers=None):
    """Independent trajectories; replicate ``r`` uses ``derive_seed(seed, r, "discrete-mc")``."""
    seeds = [derive_seed(seed, r, "discrete-mc") for r in range(replicates)]
    return map_ordered(lambda s: simulate_chain_mc(model, schedule, T, h_init, s, track=track), seeds, workers)


def hypothesis_frequencies(trajectories, n):
    """Empirical ``(T, n)`` table of sampled-hypothesis frequencies per step."""
    H = np.stack([tr.sampled_h for tr in trajectories])
    T = H.shape[1]
    freq = np.zeros((T, n))
    for t in range(T):
        freq[t] = np.bincount(H[:, t], minlength=n) / H.shape[0]
    return freq


def model_schedule(model, target, spec, max_m=None):
    """Build a discrete-theorem schedule, filling model-derived parameters.

    ``spec`` is a schedule mapping; for ``theorem1`` any of ``d1``/``d1_sq``,
    ``n``, ``p1`` left out are taken from ``model`` and ``target``. For
    ``theorem2``, ``s``, ``n`` and ``p_A`` default to the model's values and
    the prior mass floor of the A-set found at ``rho = delta / (n sqrt(2 s))``.
    Other kinds pass through unchanged.
    """
    from .schedules import _KIND_ALIASES, DEFAULT_MAX_M, SampleSchedule

    spec = dict(spec)
    spec.update(spec.pop("params", None) or {})
    kind = _KIND_ALIASES.get(spec.get("kind"), spec.get("kind"))
    if max_m is not None:
        spec.setdefault("max_m", max_m)
    if kind == "theorem1":
        if "d1" not in spec and "d1_sq" not in spec:
            spec["d1"] = model.min_distance(target)
        spec.setdefault("n", model.n)
        spec.setdefault("p1", float(model.prior[target]))
    elif kind == "theorem2":
        spec.setdefault("s", model.s)
        spec.setdefault("n", model.n)
        if "p_A" not in spec:
            rho = spec.get("rho") or spec["delta"] / (spec["n"] * math.sqrt(2.0 * spec["s"]))
            members = find_A_set(model, target, rho)
            spec["p_A"] = float(min(model.prior[i] for i in members))
    spec.setdefault("max_m", DEFAULT_MAX_M)
    return SampleSchedule.from_dict(spec)
