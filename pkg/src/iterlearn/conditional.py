"""Meanings and utterances: hypotheses that map inputs to outputs.

Data is a list of (meaning, utterance) pairs. Meanings ``x`` are drawn from
a fixed input distribution ``mu`` independent of the hypothesis, and the
utterance from ``P[y | x, h]``. Because ``mu(x)`` cancels from every
posterior, the process is the ordinary discrete chain over the joint
"sentences" ``(x, y)`` with likelihood ``P[y | x, h] mu(x)``;
:meth:`ConditionalModel.joint_model` builds that model.
"""

from dataclasses import dataclass, field
import json
from pathlib import Path

import numpy as np

from .discrete import DEFAULT_ENUMERATION_BUDGET, DiscreteModel, transition_bound_violation, transition_matrix_exact
from .errors import DimensionError, DomainError, InvariantViolation, ParameterError
from .metrics import pairwise_root_sine, prob_vector

__all__ = ["ConditionalModel", "cond_root_sine", "transition_matrix_cond"]


@dataclass(frozen=True, eq=False)
class ConditionalModel:
    """Input distribution, conditional output tables and a prior.

    Parameters
    ----------
    mu : array_like, shape (nx,)
        Distribution over meanings.
    cond_likelihood : array_like, shape (nx, ny, n)
        ``cond_likelihood[x, :, j]`` is ``P[. | x, h_j]``.
    prior : array_like, shape (n,)
    """

    mu: np.ndarray
    cond_likelihood: np.ndarray
    prior: np.ndarray
    names: tuple | None = None
    distinct: bool = True
    dist: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mu = prob_vector(self.mu)
        C = np.array(self.cond_likelihood, dtype=np.float64)
        if C.ndim != 3:
            raise DimensionError(f"cond_likelihood must have shape (nx, ny, n), got {C.shape}")
        if C.shape[0] != mu.size:
            raise DimensionError("cond_likelihood needs one table per meaning")
        for x in range(C.shape[0]):
            for j in range(C.shape[2]):
                prob_vector(C[x, :, j])
        p = prob_vector(self.prior)
        if p.size != C.shape[2]:
            raise DimensionError("prior length must equal the number of hypotheses")
        if np.any(p <= 0):
            raise DomainError("every prior entry must be strictly positive")
        C.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "cond_likelihood", C)
        object.__setattr__(self, "prior", p)
        object.__setattr__(self, "dist", pairwise_root_sine(self.joint_table()))

    @property
    def n(self):
        return self.cond_likelihood.shape[2]

    def joint_table(self):
        """``(nx * ny, n)`` table of ``P[y | x, h] mu(x)``, rows ordered by ``(x, y)``."""
        nx, ny, n = self.cond_likelihood.shape
        return (self.cond_likelihood * self.mu[:, None, None]).reshape(nx * ny, n)

    def joint_model(self):
        """Equivalent :class:`DiscreteModel` over ``(x, y)`` pairs."""
        nx, ny, _ = self.cond_likelihood.shape
        J = self.joint_table()
        # rounding in the product can leave a column off by ~1 ulp
        J = J / J.sum(axis=0, keepdims=True)
        labels = [f"({x},{y})" for x in range(nx) for y in range(ny)]
        return DiscreteModel(J, self.prior, names=self.names, sentences=labels, distinct=self.distinct)

    @classmethod
    def from_dict(cls, data):
        """``{"mu": [...], "tables": [[[...]]...], "prior": [...]}``; ``tables[x]`` is (ny, n)."""
        try:
            return cls(mu=data["mu"], cond_likelihood=data["tables"], prior=data["prior"],
                       names=data.get("names"), distinct=data.get("distinct", True))
        except KeyError as exc:
            raise ParameterError(f"conditional model is missing field {exc.args[0]!r}") from None

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def cond_root_sine(model, i, j):
    """Root-sine distance between the joint laws ``P[y | x, h] mu(x)`` of ``h_i`` and ``h_j``."""
    if not (0 <= i < model.n and 0 <= j < model.n):
        raise IndexError("hypothesis index out of range")
    return float(model.dist[i, j])


def transition_matrix_cond(model, m, budget=DEFAULT_ENUMERATION_BUDGET, check_bound=True):
    """Exact transition matrix when the data are ``m`` (meaning, utterance) pairs.

    With ``check_bound`` the off-diagonal bound
    ``P[i, j] <= 1/2 sqrt(p_j / p_i) exp(-d'_ij**2 m / 2)`` is verified.
    """
    joint = model.joint_model()
    P = transition_matrix_exact(joint, m, budget=budget)
    if check_bound and model.n > 1:
        viol = transition_bound_violation(joint, P, m)
        if viol > 1e-12:
            raise InvariantViolation(f"transition bound exceeded by {viol:.3e}")
    return P
