"""A CTRW driven by moving-average innovations and its functional limit.

Innovations ``theta_i`` are symmetric Pareto with index 1.5 and the jumps are
``zeta_i = sum_j c_j theta_{i-j}``.  The scaled walk converges to
``(sum c_j) Z(D^{-1}(t))``: the coefficients only change the scale.  The
script draws terminal values on both sides and writes one path to CSV.
"""

import tempfile
from pathlib import Path

import numpy as np

from ctrwlab.cadlag import read_csv, write_csv
from ctrwlab.ctrw import Coefficients, CtrwSpec, HeavyTail, LimitSpec, build_ctrw, limit_terminal
from ctrwlab.harness import ks_band, ks_two_sample
from ctrwlab.skorokhod import d_uniform
from ctrwlab.randlaw import InnovationLaw, SeedSpec, SymmetricParetoTail, domain_limit

alpha, beta, T = 1.5, 0.8, 1.0
law = InnovationLaw(SymmetricParetoTail(alpha))
coeffs = Coefficients.geometric(0.5)
spec = CtrwSpec(law, HeavyTail(beta), alpha, beta, 2000, coeffs, require_tc=True)
print(f"coefficient sum {coeffs.total():.3f}, truncated after {coeffs.truncation_index()} lags")

reps = 2000
prelimit = np.array([build_ctrw(spec, T, SeedSpec(10, 0, r)).eval(T) for r in range(reps)])
limit = limit_terminal(LimitSpec("subordinated", domain_limit(law), beta, coeffs.total()),
                       T, SeedSpec(11), 20 * reps)
print(f"KS(X_n(T), limit) = {ks_two_sample(prelimit, limit):.4f}   "
      f"band {ks_band(reps, 20 * reps):.4f}")

path = build_ctrw(spec, T, SeedSpec(10, 0, 0))
with tempfile.TemporaryDirectory() as tmp:
    target = Path(tmp) / "path.csv"
    write_csv(path, target)
    again = read_csv(target)
    # the file adds a closing row at the horizon; as paths the two coincide
    print(f"{path.jump_times().size} jumps written; uniform distance after reading back: "
          f"{d_uniform(path, again, T).value}")
