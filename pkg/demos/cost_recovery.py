"""From the controller back to a cost: inverse-optimality on the PWA law.

Sampling states and grouping them by the QP's active set recovers the
piecewise-affine structure of the control law.  For every unsaturated region
a stage cost (Q, R) consistent with the law must satisfy a per-region
discrete-time dissipation inequality; a scalar grid search over Q = q I,
R = r I finds a certificate.
"""

import numpy as np

from mpcnet import condense, extract_pwa, search_cost, unsaturated, verify_cost_lmi
from mpcnet.presets import saturating_regulator

problem = saturating_regulator()
qp = condense(problem)

axis = np.linspace(-300.0, 300.0, 25)
samples = [np.array([a, b]) for a in axis for b in axis]
regions = extract_pwa(qp, samples)

print(f"{len(regions)} regions from {len(samples)} samples")
print(f"{'active set':<30} {'saturated':>9} {'witnesses':>9}  gain E")
for r in sorted(regions, key=lambda r: -len(r.witnesses))[:12]:
    sig = ",".join(str(i) for i in r.active_set) or "(none)"
    print(f"{sig:<30} {str(r.saturated):>9} {len(r.witnesses):>9}  {np.round(r.E.ravel(), 4)}")

print()
scale = [10.0**k for k in range(-2, 3)]
cand = search_cost(problem.sys, regions, scale, scale, margin=1e-6)
print(f"feasible stage cost: Q = {cand.Q[0, 0]} I, R = {cand.R[0, 0]} I")

verdicts, worst = verify_cost_lmi(problem.sys, unsaturated(regions), cand, margin=1e-6)
print(f"{len(verdicts)} unsaturated regions verified; worst dissipation eigenvalue {worst:.2e}")
for r, eig, ok in verdicts[:8]:
    sig = ",".join(str(i) for i in r.active_set) or "(none)"
    print(f"  {sig:<28} max eig {eig:>10.2e}  holds={ok}")
