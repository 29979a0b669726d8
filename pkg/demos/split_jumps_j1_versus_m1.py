"""Why correlated jumps need the M1 topology.

With coefficients ``(1, 1)`` a single large innovation produces two jumps of
half the size, one grid step apart.  The limit has a single jump.  No time
change can turn two half-jumps into one jump, so the J1 distance stays at
1/2; the completed graphs, however, are within one grid step in M1.
"""

from ctrwlab.scenarios.langevin import spike_paths
from ctrwlab.skorokhod import d_j1, d_m1, d_uniform

print(f"{'n':>6} {'uniform':>8} {'J1':>8} {'M1':>8} {'1/n':>8}")
for n in (10, 100, 1000):
    x, y = spike_paths(n, alpha=1.5)
    u = d_uniform(x, y, 1.0).value
    j = d_j1(x, y, 1.0).value
    m = d_m1(x, y, 1.0, resolution=1e-4).value
    print(f"{n:>6} {u:>8.4f} {j:>8.4f} {m:>8.4f} {1 / n:>8.4f}")
