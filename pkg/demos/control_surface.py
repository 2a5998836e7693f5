"""The applied input as a function of the state: a piecewise-affine surface.

Sweeping the first control move over a grid shows the central affine
(unconstrained) region and the two saturation plateaus at +/-10.  The
implicit network reproduces the oracle's surface to solver precision.
"""

import numpy as np

from mpcnet import IMPLICIT, ORACLE, control_surface
from mpcnet.presets import saturating_regulator

problem = saturating_regulator()
res = 21

points, u_oracle = control_surface(problem, bounds=(-300.0, 300.0), resolution=res, controller=ORACLE)
_, u_net = control_surface(problem, bounds=(-300.0, 300.0), resolution=res, controller=IMPLICIT)

print("max |u_net - u_oracle| over the grid:", np.nanmax(np.abs(u_net - u_oracle)))
print()

# coarse character plot: - lower plateau, + upper plateau, . affine region
u = u_oracle[:, 0].reshape(res, res)
print(f"u(x1, x2) over [-300, 300]^2  (-: u = -10, +: u = +10, .: interior)")
for i in range(res - 1, -1, -1):  # x2 decreasing downwards
    row = ""
    for j in range(res):
        v = u[j, i]
        row += "-" if v <= -10.0 + 1e-6 else "+" if v >= 10.0 - 1e-6 else "."
    print(row)

frac = np.mean((np.abs(u) >= 10.0 - 1e-6))
print()
print(f"fraction of grid points at the bound: {frac:.2%}")
