"""Continuous hypotheses: a Gaussian mean passed down a chain.

Each learner sees m_t noisy draws around a value sampled from its teacher's
posterior. A constant m lets the mean decay geometrically towards the prior
mean; a quadratically growing m holds it near the original value.
"""

import numpy as np

from iterlearn.gaussian import GaussianConfig, chained_moments, config_schedule, hopped_moments, simulate_gaussian_mc
from iterlearn.schedules import SampleSchedule

cfg = GaussianConfig()
const = chained_moments(cfg, SampleSchedule.constant(1), 10)
print("constant m=1, E mu_t:", np.round(const.mean[1:], 4))

mc = simulate_gaussian_mc(cfg, SampleSchedule.constant(1), 10, "chained", replicates=10_000, seed=0)
print("Monte Carlo        :", np.round(mc.mean, 4))

sch = config_schedule(cfg, {"kind": "theorem3", "eps": 0.1, "c": 0.5, "max_m": None})
held = chained_moments(cfg, sch, 10_000)
print(f"quadratic schedule: E mu_t at t=1e4 is {held.mean[-1]:.4f} (start {cfg.mu0})")

# hopped learning: each learner picks a random ancestor as teacher
hsch = config_schedule(cfg, {"kind": "theorem4", "eps_rel": 0.1, "c": 0.5, "max_m": None})
hop = hopped_moments(cfg, hsch, 10_000)
print(f"hopped chain: min retention gamma_t = {hop.gamma[1:].min():.4f}")
