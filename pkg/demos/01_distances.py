"""How far apart are two languages?

The root-sine distance is the quantity that governs how fast a learner can
tell two hypotheses apart. This script compares it with its relatives on a
few hand-picked pairs.
"""

import numpy as np

from iterlearn.metrics import bhattacharyya_dist, hellinger, root_sine, total_variation

pairs = {
    "identical": ([0.5, 0.5], [0.5, 0.5]),
    "slightly biased coin": ([0.5, 0.5], [0.51, 0.49]),
    "opposite coins": ([0.9, 0.1], [0.1, 0.9]),
    "disjoint supports": ([1.0, 0.0], [0.0, 1.0]),
}

print(f"{'pair':<22}{'d_RS':>10}{'d_TV':>10}{'d_H':>10}{'d_B':>10}")
for name, (a, b) in pairs.items():
    a, b = np.asarray(a), np.asarray(b)
    print(f"{name:<22}{root_sine(a, b):>10.4f}{total_variation(a, b):>10.4f}"
          f"{hellinger(a, b):>10.4f}{bhattacharyya_dist(a, b):>10.4f}")

# a learner seeing m samples confuses the two coins with probability that
# decays like exp(-d^2 m / 2); the slightly biased coin needs far more data
for name in ("slightly biased coin", "opposite coins"):
    d = root_sine(*map(np.asarray, pairs[name]))
    print(f"{name}: samples for confusion bound 0.01 ~ {int(np.ceil(2 * np.log(50) / d**2))}")
