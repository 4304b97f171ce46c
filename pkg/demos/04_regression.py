"""Iterated Bayesian linear regression.

Learners pass a weight vector down the chain by fitting noisy labels on random
Gaussian designs. The fraction of independent chains that stay within delta
of the original weights is compared with the guaranteed 1 - eps.
"""

import math

from iterlearn.linreg import RegressionConfig, simulate_linreg, singular_tail_check

cfg = RegressionConfig(d=2, delta=0.2, eps=0.1, c=0.5)
sch = cfg.schedule(max_m=None)
print("m_t at t = 1, 10, 30:", [sch(t) for t in (1, 10, 30)])
run = simulate_linreg(cfg, sch, 30, 200, seed=1)
print(f"fraction of 200 chains within delta: {run.fraction:.3f} (target >= {1 - cfg.eps})")

chk = singular_tail_check(100, 5, 3.0, 10_000, seed=1)
print(f"smallest singular value below {chk.threshold:.3f}: {chk.frequency:.4f} "
      f"(bound {math.exp(-4.5):.4f})")
