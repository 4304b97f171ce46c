"""Keeping a language alive across generations.

With a fixed, small amount of data per learner the chain forgets its starting
point and drifts to the prior. Giving learner t a slowly growing number of
samples, as prescribed by the logarithmic schedule, keeps the target
language in place for every generation.
"""

import numpy as np

from iterlearn.discrete import DiscreteModel, chain_product, model_schedule, sustain_mass
from iterlearn.schedules import SampleSchedule

rng = np.random.default_rng(2024)
while True:
    model = DiscreteModel(rng.dirichlet(np.ones(4), size=4).T, rng.dirichlet(2 * np.ones(4)))
    if model.min_distance(0) ** 2 >= 0.3:
        break
print("prior:", np.round(model.prior, 3))

fixed = chain_product(model, SampleSchedule.constant(2), 60)
print("constant m=2, mass on h1 at t = 1, 10, 60:",
      np.round(sustain_mass(fixed, 0)[[0, 9, 59]], 4))

sch = model_schedule(model, 0, {"kind": "theorem1", "eps": 0.1})
grown = chain_product(model, sch, 200)
mass = sustain_mass(grown, 0)
print("logarithmic schedule m_t at t = 1, 10, 100, 200:", [sch(t) for t in (1, 10, 100, 200)])
print(f"mass on h1 stays >= {mass.min():.6f} for all 200 generations")
