"""Heavy-tailed waiting times and the clock they build.

Pareto waits with index ``beta < 1`` have no mean, so the number of renewals
by time ``n t`` grows like ``n^beta`` rather than ``n``.  Rescaled, the count
converges to the inverse of a stable subordinator, whose value at ``T`` has
the exact law ``(T / D_1)^beta``.  The approach is slow: the Pareto law near
its lower cutoff adds a correction of relative size about ``n^(beta - 1)``.
"""

import numpy as np

from ctrwlab.ctrw import HeavyTail, draw_waiting_times, renewal_count
from ctrwlab.harness import hill_estimator, ks_band, ks_two_sample
from ctrwlab.randlaw import SeedSpec, sample_stable, subordinator_law

beta, T, reps = 0.7, 1.0, 4000
waiting = HeavyTail(beta)

# one long sample first: the tail index is visible in the largest waits
waits = draw_waiting_times(waiting, 10**6, SeedSpec(1))
print(f"{waits.size} waits, Hill estimate {hill_estimator(waits, 2000):.3f} (beta = {beta})")

d1 = sample_stable(subordinator_law(beta), SeedSpec(3), 10 * reps)
exact = (T / d1) ** beta
print(f"limit mean {exact.mean():.4f}; 95% KS band {ks_band(reps, 10 * reps):.4f}")

print(f"{'n':>8} {'KS':>8} {'mean':>8}")
for i, n in enumerate((10**2, 10**3, 10**4, 10**5)):
    counts = np.empty(reps)
    for r in range(reps):
        w = draw_waiting_times(waiting, n * T, SeedSpec(2, i, r))
        counts[r] = renewal_count(w, n * T) / n**beta
    print(f"{n:>8} {ks_two_sample(counts, exact):>8.4f} {counts.mean():>8.4f}")
